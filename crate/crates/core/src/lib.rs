//! Time-domain representation and low-rate feedback tracking of wideband
//! MIMO-OFDM precoders.
//!
//! The per-subcarrier SVD precoder of a MIMO-OFDM channel is a unitary
//! matrix function of frequency. This crate models that function as a
//! rational matrix *all-pass* filter, realises it as a cascade of lossless
//! lattice stages (one reflection matrix per stage), and tracks the stage
//! parameters over time with one sign bit per real dimension per frame.
//! Geodesic, Givens-rotation, and angle-delay baselines plus a seeded
//! Monte-Carlo experiment harness allow rate/feedback comparisons.

pub mod allpass;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod lattice;
pub mod matcore;
pub mod precoder;
pub mod serial;
pub mod snip;
pub(crate) mod textfmt;

pub use allpass::{MatrixPolynomial, RationalAllPass};
pub use baselines::{AngleDelayPrecoder, GivensParams};
pub use channel::{DopplerParams, PowerDelayProfile, TappedChannel};
pub use error::{Error, Result};
pub use feedback::{AdaptiveTrackerState, ClipPolicy, Scheme};
pub use harness::{RunResult, SchemeKind, SimConfig};
pub use lattice::{LatticeParams, TStage};
pub use matcore::{CMat, C64};
pub use precoder::{PrecoderGrid, RateConfig};
pub use snip::{snip_design, SnipOptions, SnipReport};

#[cfg(test)]
mod sanity {
    use super::matcore::{C64, CMat};

    // Assumption checks for the linear-algebra backend: complex SVD and
    // Hermitian eigendecomposition must reconstruct to near machine eps.
    #[test]
    fn nalgebra_complex_svd_reconstructs() {
        let a = CMat::from_fn(4, 4, |i, j| C64::new((i * 4 + j) as f64 * 0.3 - 1.0, (i as f64) - 0.5 * j as f64));
        let svd = a.clone().svd(true, true);
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let s = CMat::from_fn(4, 4, |i, j| {
            if i == j { C64::new(svd.singular_values[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        let recon = &u * s * &vt;
        assert!((recon - &a).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn nalgebra_hermitian_eigen_reconstructs() {
        let b = CMat::from_fn(3, 3, |i, j| C64::new(0.4 * (i + j) as f64, (i as f64) - (j as f64)));
        let a = &b * b.adjoint() + CMat::identity(3, 3);
        let eig = a.clone().symmetric_eigen();
        let lam = CMat::from_fn(3, 3, |i, j| {
            if i == j { C64::new(eig.eigenvalues[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        let recon = &eig.eigenvectors * lam * eig.eigenvectors.adjoint();
        assert!((recon - &a).norm() < 1e-12 * a.norm());
    }
}

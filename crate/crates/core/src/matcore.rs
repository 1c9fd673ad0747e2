//! Dense complex matrix kernels: SVD with deterministic phase
//! canonicalization, Hermitian-PSD square roots, unitarity checks, and
//! per-column subspace distances.
//!
//! Everything here is a pure function of its inputs; results are
//! bit-reproducible for identical inputs.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Tolerance used by the shared unitarity assertion.
pub const UNITARY_TOL: f64 = 1e-8;

/// SVD of a square complex matrix, sorted and phase-canonicalized.
///
/// `a == u * diag(s) * v.adjoint()` with `s` descending and each column of
/// `v` rotated so its largest-magnitude entry is real and nonnegative
/// (ties broken by lowest row index). The same per-column phase is applied
/// to `u`, so the product is unchanged.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

impl SvdResult {
    /// `u * diag(s) * v.adjoint()`.
    pub fn reconstruct(&self) -> CMat {
        let m = self.s.len();
        let sigma = CMat::from_fn(m, m, |i, j| {
            if i == j {
                C64::new(self.s[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.u * sigma * self.v.adjoint()
    }
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm of `v.adjoint() * v - I`.
pub fn unitarity_error(v: &CMat) -> f64 {
    let m = v.ncols();
    (v.adjoint() * v - CMat::identity(m, m)).norm()
}

pub fn is_unitary(v: &CMat, tol: f64) -> bool {
    v.is_square() && unitarity_error(v) <= tol
}

/// Index of the largest-magnitude entry of column `col`, lowest row wins ties.
fn dominant_row(v: &CMat, col: usize) -> usize {
    let mut best = 0usize;
    let mut best_mag = -1.0f64;
    for i in 0..v.nrows() {
        let mag = v[(i, col)].norm_sqr();
        if mag > best_mag + 0.0 && mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    best
}

/// Phase-canonicalize column `col` of `v`, applying the conjugate phase to
/// the matching column of `u` so `u * diag(s) * v.adjoint()` is preserved.
fn canonicalize_column(u: &mut CMat, v: &mut CMat, col: usize) {
    let row = dominant_row(v, col);
    let z = v[(row, col)];
    let mag = z.norm();
    if mag == 0.0 {
        return;
    }
    let phase = z / mag; // e^{j arg z}
    let rot = phase.conj();
    for i in 0..v.nrows() {
        v[(i, col)] *= rot;
    }
    for i in 0..u.nrows() {
        u[(i, col)] *= rot;
    }
}

/// SVD of a square matrix with descending singular values and canonical
/// column phases. Deterministic: identical inputs give bit-identical output.
pub fn svd(a: &CMat) -> Result<SvdResult> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "svd expects a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !all_finite(a) {
        return Err(Error::InvalidInput("svd input has non-finite entries".into()));
    }
    let m = a.nrows();
    let dec = a.clone().svd(true, true);
    let u_raw = dec.u.ok_or_else(|| Error::NumericalInstability("svd: U not computed".into()))?;
    let vt_raw = dec
        .v_t
        .ok_or_else(|| Error::NumericalInstability("svd: V^H not computed".into()))?;
    let v_raw = vt_raw.adjoint();

    // Descending sort; stable order for equal values.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        dec.singular_values[j]
            .partial_cmp(&dec.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut u = CMat::zeros(m, m);
    let mut v = CMat::zeros(m, m);
    let mut s = Vec::with_capacity(m);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        s.push(dec.singular_values[src]);
    }
    for col in 0..m {
        canonicalize_column(&mut u, &mut v, col);
    }
    Ok(SvdResult { u, s, v })
}

/// Largest singular value.
pub fn sigma_max(a: &CMat) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Principal square root of a Hermitian PSD matrix.
///
/// Eigenvalues in `[-1e-12, 0)` are clamped to zero; anything more negative
/// (or a significantly non-Hermitian input) is rejected as `NotPSD`.
pub fn sqrtm_psd(a: &CMat) -> Result<CMat> {
    if !a.is_square() || !all_finite(a) {
        return Err(Error::InvalidInput("sqrtm_psd expects a finite square matrix".into()));
    }
    let herm_err = (a - a.adjoint()).norm();
    if herm_err > 1e-8 {
        return Err(Error::NotPSD(format!("asymmetry {herm_err:.3e} exceeds 1e-8")));
    }
    // Work on the Hermitian part so tiny asymmetries don't leak into eigenvectors.
    let h = (a + a.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let m = a.nrows();
    let mut lam = Vec::with_capacity(m);
    for i in 0..m {
        let l = eig.eigenvalues[i];
        if l < -1e-12 {
            return Err(Error::NotPSD(format!("eigenvalue {l:.3e} below -1e-12")));
        }
        lam.push(l.max(0.0).sqrt());
    }
    let d = CMat::from_fn(m, m, |i, j| {
        if i == j {
            C64::new(lam[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Per-column subspace (flag) distance between two unitary matrices:
/// `sqrt(sum_k (1 - |v1_k^H v2_k|^2))`. Invariant to per-column phases of
/// either argument and exactly symmetric in its arguments.
pub fn flag_distance(v1: &CMat, v2: &CMat) -> Result<f64> {
    if v1.shape() != v2.shape() {
        return Err(Error::InvalidInput("flag_distance: shape mismatch".into()));
    }
    if !is_unitary(v1, UNITARY_TOL) || !is_unitary(v2, UNITARY_TOL) {
        return Err(Error::InvalidInput("flag_distance: inputs must be unitary".into()));
    }
    Ok(flag_distance_columns(v1, v2))
}

/// The flag-distance formula without the unitarity gate. Used for metrics on
/// reconstructions that are only approximately unitary; columns are
/// normalized first.
pub fn flag_distance_columns(v1: &CMat, v2: &CMat) -> f64 {
    let m = v1.ncols();
    let mut acc = 0.0;
    for k in 0..m {
        let c1 = v1.column(k);
        let c2 = v2.column(k);
        let n1 = c1.norm();
        let n2 = c2.norm();
        if n1 == 0.0 || n2 == 0.0 {
            acc += 1.0;
            continue;
        }
        let inner: C64 = c1.iter().zip(c2.iter()).map(|(a, b)| a.conj() * b).sum();
        let cos2 = (inner.norm_sqr() / (n1 * n1 * n2 * n2)).min(1.0);
        acc += 1.0 - cos2;
    }
    acc.sqrt()
}

/// Nearest unitary matrix in Frobenius norm (unitary polar factor).
pub fn polar_unitary(a: &CMat) -> Result<CMat> {
    let dec = svd(a)?;
    if dec.s.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::NumericalInstability(
            "polar projection of a rank-deficient matrix".into(),
        ));
    }
    Ok(&dec.u * dec.v.adjoint())
}

/// Haar-ish random unitary: QR of a Ginibre matrix with the R diagonal
/// phases absorbed. Used by tests, benches, and synthetic experiments.
pub fn random_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMat {
    let g = random_gaussian(m, m, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let d = r[(j, j)];
        let mag = d.norm();
        if mag > 0.0 {
            let rot = d / mag;
            for i in 0..m {
                q[(i, j)] *= rot;
            }
        }
    }
    q
}

/// Random matrix rescaled to a prescribed largest singular value.
pub fn random_contraction<R: Rng + ?Sized>(m: usize, smax: f64, rng: &mut R) -> CMat {
    let g = random_gaussian(m, m, rng);
    let cur = sigma_max(&g);
    if cur == 0.0 {
        return g;
    }
    g.scale(smax / cur)
}

/// Matrix of iid standard circular complex Gaussians (total variance 1 per
/// entry, re/im each 1/2). Entries drawn row-major.
pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            a[(i, j)] = C64::new(re * SQRT_HALF, im * SQRT_HALF);
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn cmat(rows: usize, cols: usize, vals: &[(f64, f64)]) -> CMat {
        CMat::from_fn(rows, cols, |i, j| {
            let (re, im) = vals[i * cols + j];
            C64::new(re, im)
        })
    }

    #[test]
    fn svd_identity() {
        let a = CMat::identity(3, 3);
        let r = svd(&a).unwrap();
        assert!((r.u.clone() - CMat::identity(3, 3)).norm() < 1e-12);
        assert!((r.v.clone() - CMat::identity(3, 3)).norm() < 1e-12);
        for s in r.s {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn svd_positive_diagonal() {
        let a = cmat(2, 2, &[(2.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        let r = svd(&a).unwrap();
        assert_abs_diff_eq!(r.s[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s[1], 1.0, epsilon = 1e-12);
        assert!((r.u - CMat::identity(2, 2)).norm() < 1e-12);
        assert!((r.v - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn svd_reconstruction_residual() {
        let mut g = rng(7);
        for _ in 0..20 {
            let a = random_gaussian(4, 4, &mut g);
            let r = svd(&a).unwrap();
            assert!((r.reconstruct() - &a).norm() <= 1e-10 * a.norm());
            // sorted descending
            for w in r.s.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_columns_canonical() {
        let mut g = rng(8);
        let a = random_gaussian(5, 5, &mut g);
        let r = svd(&a).unwrap();
        for col in 0..5 {
            let row = dominant_row(&r.v, col);
            let z = r.v[(row, col)];
            assert!(z.im.abs() < 1e-12 && z.re >= 0.0, "column {col} not canonical: {z}");
        }
    }

    #[test]
    fn svd_deterministic_bits() {
        let mut g = rng(9);
        let a = random_gaussian(4, 4, &mut g);
        let r1 = svd(&a).unwrap();
        let r2 = svd(&a).unwrap();
        for (x, y) in r1.v.iter().zip(r2.v.iter()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        for (x, y) in r1.s.iter().zip(r2.s.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn svd_rejects_nonfinite() {
        let mut a = CMat::identity(2, 2);
        a[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(svd(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sqrtm_psd_identity_and_diagonal() {
        let r = sqrtm_psd(&CMat::identity(3, 3)).unwrap();
        assert!((r - CMat::identity(3, 3)).norm() < 1e-12);

        let a = cmat(2, 2, &[(4.0, 0.0), (0.0, 0.0), (0.0, 0.0), (9.0, 0.0)]);
        let b = sqrtm_psd(&a).unwrap();
        assert_abs_diff_eq!(b[(0, 0)].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[(1, 1)].re, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrtm_psd_multiply_back() {
        let mut g = rng(10);
        for _ in 0..20 {
            let k = random_contraction(3, 0.9, &mut g);
            let a = CMat::identity(3, 3) - &k * k.adjoint();
            let b = sqrtm_psd(&a).unwrap();
            assert!((&b * &b - &a).norm() <= 1e-10);
            // principal root is Hermitian and commutes with A
            assert!((&b - b.adjoint()).norm() <= 1e-12);
            assert!((&b * &a - &a * &b).norm() <= 1e-9 * a.norm());
        }
    }

    #[test]
    fn sqrtm_psd_rejects_non_hermitian_and_indefinite() {
        let a = cmat(2, 2, &[(1.0, 0.0), (1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(sqrtm_psd(&a), Err(Error::NotPSD(_))));

        let b = cmat(2, 2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-0.5, 0.0)]);
        assert!(matches!(sqrtm_psd(&b), Err(Error::NotPSD(_))));
    }

    #[test]
    fn flag_distance_basics() {
        let mut g = rng(11);
        let v = random_unitary(4, &mut g);
        assert_abs_diff_eq!(flag_distance(&v, &v).unwrap(), 0.0, epsilon = 1e-12);

        // fixed-point-free permutation of columns: all inner products vanish
        let mut p = CMat::zeros(4, 4);
        for k in 0..4 {
            p[((k + 1) % 4, k)] = C64::new(1.0, 0.0);
        }
        let v2 = &v * p;
        assert_abs_diff_eq!(flag_distance(&v, &v2).unwrap(), 2.0, epsilon = 1e-10);

        // per-column phases are invisible
        let mut v3 = v.clone();
        for (k, phi) in [0.3, -1.2, 2.9, 0.01].iter().enumerate() {
            let rot = C64::from_polar(1.0, *phi);
            for i in 0..4 {
                v3[(i, k)] *= rot;
            }
        }
        assert!(flag_distance(&v, &v3).unwrap() < 1e-7);
    }

    #[test]
    fn flag_distance_exactly_symmetric() {
        let mut g = rng(12);
        let a = random_unitary(3, &mut g);
        let b = random_unitary(3, &mut g);
        let d1 = flag_distance(&a, &b).unwrap();
        let d2 = flag_distance(&b, &a).unwrap();
        assert_eq!(d1.to_bits(), d2.to_bits());
    }

    #[test]
    fn flag_distance_rejects_non_unitary() {
        let a = CMat::identity(2, 2).scale(2.0);
        let b = CMat::identity(2, 2);
        assert!(matches!(flag_distance(&a, &b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn polar_unitary_projects() {
        let mut g = rng(13);
        let v = random_unitary(3, &mut g);
        let noisy = &v + random_gaussian(3, 3, &mut g).scale(0.05);
        let p = polar_unitary(&noisy).unwrap();
        assert!(unitarity_error(&p) < 1e-12);
        assert!((&p - &v).norm() < 0.5);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut g = rng(14);
        for m in [1usize, 2, 5, 8] {
            let v = random_unitary(m, &mut g);
            assert!(unitarity_error(&v) < 1e-12);
        }
    }
}

//! Matrix lattice realization of all-pass filters.
//!
//! A length-M filter is a cascade of M-1 lossless 2-port stages plus a
//! unitary residue. Each stage is characterized by one reflection matrix K
//! with largest singular value below one; its transmission parameters are
//!
//! ```text
//!   T = [ K                  (I - K K^H)^{1/2} ]
//!       [ (I - K^H K)^{1/2}  -K^H              ]
//! ```
//!
//! which is unitary as a 2m-by-2m block matrix. Stability of the whole
//! filter is equivalent to contractivity of every K, so it can be read off
//! the parameters without any root finding — the property that makes these
//! parameters safe to quantize and track.

use crate::allpass::RationalAllPass;
use crate::error::{Error, Result};
use crate::matcore::{all_finite, sigma_max, unitarity_error, C64, CMat};

/// Margin kept between the largest singular value of a reflection matrix
/// and one. Keeps the stage square roots well conditioned.
pub const CONTRACTIVITY_MARGIN: f64 = 1e-9;

/// Complete lattice description of a length-M all-pass filter:
/// reflection matrices `kappas[0..M-1]` (outermost stage first) and the
/// unitary residue.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeParams {
    pub kappas: Vec<CMat>,
    pub residue: CMat,
}

impl LatticeParams {
    pub fn new(kappas: Vec<CMat>, residue: CMat) -> Self {
        Self { kappas, residue }
    }

    /// Filter length M: number of tracked matrices (kappas plus residue).
    pub fn order(&self) -> usize {
        self.kappas.len() + 1
    }

    /// Matrix dimension m.
    pub fn dim(&self) -> usize {
        self.residue.nrows()
    }
}

/// Transmission parameters of one lattice stage.
#[derive(Debug, Clone)]
pub struct TStage {
    pub t11: CMat,
    pub t12: CMat,
    pub t21: CMat,
    pub t22: CMat,
}

impl TStage {
    /// Stack into the 2m-by-2m block matrix.
    pub fn block(&self) -> CMat {
        let m = self.t11.nrows();
        let mut t = CMat::zeros(2 * m, 2 * m);
        t.view_mut((0, 0), (m, m)).copy_from(&self.t11);
        t.view_mut((0, m), (m, m)).copy_from(&self.t12);
        t.view_mut((m, 0), (m, m)).copy_from(&self.t21);
        t.view_mut((m, m), (m, m)).copy_from(&self.t22);
        t
    }
}

/// T-parameters of the stage with reflection matrix `k`.
///
/// Both square roots are built from one SVD of `k`:
/// `(I - K K^H)^{1/2} = U diag(sqrt(1-s^2)) U^H` and
/// `(I - K^H K)^{1/2} = V diag(sqrt(1-s^2)) V^H`. Sharing the singular
/// values makes the identity `K^H T12 = T21 K^H` hold to rounding, so the
/// stacked block matrix is unitary to ~1e-14 even near the contractivity
/// boundary.
pub fn t_matrix(k: &CMat) -> Result<TStage> {
    if !k.is_square() || !all_finite(k) {
        return Err(Error::InvalidInput("t_matrix expects a finite square matrix".into()));
    }
    let dec = crate::matcore::svd(k)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    if smax > 1.0 - CONTRACTIVITY_MARGIN {
        return Err(Error::NotContractive(format!(
            "sigma_max = {smax:.12} exceeds 1 - {CONTRACTIVITY_MARGIN:.0e}"
        )));
    }
    let m = k.nrows();
    let root = CMat::from_fn(m, m, |i, j| {
        if i == j {
            C64::new((1.0 - dec.s[i] * dec.s[i]).max(0.0).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let t12 = &dec.u * &root * dec.u.adjoint();
    let t21 = &dec.v * &root * dec.v.adjoint();
    Ok(TStage { t11: k.clone(), t12, t21, t22: -k.adjoint() })
}

/// Rescale toward zero so the largest singular value stays at or below
/// `1 - margin`. Direction is preserved; already-contractive input is
/// returned unchanged.
pub fn clip_contraction(k: &CMat, margin: f64) -> CMat {
    let smax = sigma_max(k);
    let limit = 1.0 - margin;
    if smax >= limit && smax > 0.0 {
        k.scale(limit / smax)
    } else {
        k.clone()
    }
}

/// Close one stage over the delayed inner response:
/// `G_out = T11 + T12 E (I - T22 E)^{-1} T21` with `E = e^{-jw} G_in`.
pub(crate) fn close_stage(stage: &TStage, w: C64, g_in: &CMat) -> Result<CMat> {
    let m = g_in.nrows();
    let e = g_in.map(|z| z * w);
    let q = CMat::identity(m, m) - &stage.t22 * &e;
    let q_inv = q
        .try_inverse()
        .ok_or_else(|| Error::NumericalInstability("singular lattice feedback closure".into()))?;
    Ok(&stage.t11 + &stage.t12 * e * q_inv * &stage.t21)
}

/// T-parameters for every stage, outermost first.
pub fn stages(params: &LatticeParams) -> Result<Vec<TStage>> {
    params.kappas.iter().map(t_matrix).collect()
}

/// Frequency response of the lattice at one frequency.
pub fn frequency_response(params: &LatticeParams, omega: f64) -> Result<CMat> {
    let st = stages(params)?;
    response_with_stages(&st, &params.residue, omega)
}

/// Frequency response over a grid; stage roots are computed once.
pub fn frequency_response_grid(params: &LatticeParams, omegas: &[f64]) -> Result<Vec<CMat>> {
    let st = stages(params)?;
    omegas
        .iter()
        .map(|&w| response_with_stages(&st, &params.residue, w))
        .collect()
}

fn response_with_stages(st: &[TStage], residue: &CMat, omega: f64) -> Result<CMat> {
    let w = C64::from_polar(1.0, -omega);
    let mut g = residue.clone();
    for stage in st.iter().rev() {
        g = close_stage(stage, w, &g)?;
    }
    Ok(g)
}

/// Contractivity of every reflection matrix (minimum eigenvalue of both
/// Gram complements above 1e-12) plus unitarity of the residue.
pub fn stability_check(params: &LatticeParams) -> bool {
    let m = params.dim();
    if params.residue.nrows() != m || params.residue.ncols() != m {
        return false;
    }
    let eye = CMat::identity(m, m);
    for k in &params.kappas {
        if k.nrows() != m || k.ncols() != m || !all_finite(k) {
            return false;
        }
        for gram in [&eye - k.adjoint() * k, &eye - k * k.adjoint()] {
            let eig = gram.symmetric_eigen();
            if eig.eigenvalues.iter().any(|&l| l <= 1e-12) {
                return false;
            }
        }
    }
    all_finite(&params.residue) && unitarity_error(&params.residue) <= 1e-8
}

/// Direct-form to lattice conversion by iterative deflation.
///
/// Each iteration normalizes the denominator's constant term to I, reads
/// the reflection matrix off the numerator's constant term, removes that
/// stage, and drops one polynomial coefficient:
///
/// ```text
///   Dh = (T21^H T21)^{-1} (D - K^H N)        (constant term I)
///   Nh = N - K Dh                            (constant term 0)
///   D' = T21 Dh                              (last coefficient 0, trimmed)
///   N' = (T12 + K T21^{-1} K^H)^{-1} Nh      (shifted down by one delay)
/// ```
///
/// After M-1 stages the residue is what remains. The extracted reflection
/// must be contractive at every step; anything else means the input was
/// unstable or not all-pass.
pub fn lccde_to_lattice(g: &RationalAllPass) -> Result<LatticeParams> {
    g.validate()?;
    let m = g.dim();
    let eye = CMat::identity(m, m);
    let mut num: Vec<CMat> = g.num.coeffs.clone();
    let mut den: Vec<CMat> = g.den.coeffs.clone();
    let mut kappas = Vec::with_capacity(num.len().saturating_sub(1));

    while num.len() > 1 {
        normalize_d0(&mut num, &mut den)?;
        let k = num[0].clone();
        if sigma_max(&k) > 1.0 - CONTRACTIVITY_MARGIN {
            return Err(Error::UnstableInput(format!(
                "extracted reflection has sigma_max = {:.9}",
                sigma_max(&k)
            )));
        }
        let stage = t_matrix(&k)?;
        let gram_inv = (&eye - k.adjoint() * &k)
            .try_inverse()
            .ok_or_else(|| Error::UnstableInput("T21^H T21 singular".into()))?;
        let t21_inv = stage
            .t21
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::UnstableInput("T21 singular".into()))?;

        let d_hat: Vec<CMat> = num
            .iter()
            .zip(den.iter())
            .map(|(n_i, d_i)| &gram_inv * (d_i - k.adjoint() * n_i))
            .collect();
        let n_hat: Vec<CMat> = num
            .iter()
            .zip(d_hat.iter())
            .map(|(n_i, dh_i)| n_i - &k * dh_i)
            .collect();

        let scale = poly_scale(&num).max(poly_scale(&den)).max(1.0);

        // D' = T21 Dh, dropping the vanishing last coefficient.
        let mut d_next: Vec<CMat> = d_hat.iter().map(|c| &stage.t21 * c).collect();
        let tail = d_next.pop().expect("nonempty");
        if tail.norm() > 1e-6 * scale {
            return Err(Error::UnstableInput(format!(
                "trailing denominator coefficient {:.3e} not negligible",
                tail.norm()
            )));
        }

        // N' = (T12 + K T21^{-1} K^H)^{-1} Nh, dropping the vanishing
        // constant term (one delay factored out).
        let lead = (&stage.t12 + &k * &t21_inv * k.adjoint())
            .try_inverse()
            .ok_or_else(|| Error::UnstableInput("numerator deflation factor singular".into()))?;
        let mut n_next: Vec<CMat> = n_hat.iter().map(|c| &lead * c).collect();
        let head = n_next.remove(0);
        if head.norm() > 1e-6 * scale {
            return Err(Error::UnstableInput(format!(
                "leading numerator coefficient {:.3e} not negligible",
                head.norm()
            )));
        }

        num = n_next;
        den = d_next;
        kappas.push(k);
    }

    normalize_d0(&mut num, &mut den)?;
    let residue = num[0].clone();
    if unitarity_error(&residue) > 1e-6 {
        return Err(Error::UnstableInput(format!(
            "residue unitarity error {:.3e}",
            unitarity_error(&residue)
        )));
    }
    Ok(LatticeParams { kappas, residue })
}

/// Right-multiply both polynomials by D0^{-1} so the denominator's
/// constant term is the identity. Leaves N D^{-1} unchanged.
fn normalize_d0(num: &mut [CMat], den: &mut [CMat]) -> Result<()> {
    let d0_inv = den[0]
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::UnstableInput("denominator constant term singular".into()))?;
    for c in num.iter_mut() {
        *c = &*c * &d0_inv;
    }
    for c in den.iter_mut() {
        *c = &*c * &d0_inv;
    }
    Ok(())
}

fn poly_scale(coeffs: &[CMat]) -> f64 {
    coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Convenience constructor used by tests and benches: random stable
/// parameters with the requested contraction level.
pub fn random_stable_params<R: rand::Rng + ?Sized>(
    m: usize,
    order: usize,
    smax: f64,
    rng: &mut R,
) -> LatticeParams {
    let kappas = (0..order.saturating_sub(1))
        .map(|_| crate::matcore::random_contraction(m, smax, rng))
        .collect();
    LatticeParams { kappas, residue: crate::matcore::random_unitary(m, rng) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allpass::{self, MatrixPolynomial};
    use crate::matcore::{random_contraction, random_unitary};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn probe_omegas(n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| -std::f64::consts::PI + (k as f64 + 0.5) * std::f64::consts::TAU / n as f64)
            .collect()
    }

    #[test]
    fn t_matrix_zero_reflection() {
        let t = t_matrix(&CMat::zeros(2, 2)).unwrap();
        assert_eq!(t.t11, CMat::zeros(2, 2));
        assert!((t.t12.clone() - CMat::identity(2, 2)).norm() < 1e-14);
        assert!((t.t21.clone() - CMat::identity(2, 2)).norm() < 1e-14);
        assert_eq!(t.t22, CMat::zeros(2, 2));
    }

    #[test]
    fn t_matrix_scalar_half() {
        let k = CMat::from_element(1, 1, C64::new(0.5, 0.0));
        let t = t_matrix(&k).unwrap();
        assert_abs_diff_eq!(t.t11[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.t12[(0, 0)].re, 0.8660254, epsilon = 1e-7);
        assert_abs_diff_eq!(t.t21[(0, 0)].re, 0.8660254, epsilon = 1e-7);
        assert_abs_diff_eq!(t.t22[(0, 0)].re, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn t_matrix_block_unitary() {
        let mut g = rng(30);
        for _ in 0..50 {
            let k = random_contraction(3, 0.97, &mut g);
            let t = t_matrix(&k).unwrap();
            let b = t.block();
            assert!(
                (b.adjoint() * &b - CMat::identity(6, 6)).norm() <= 1e-12,
                "stage block not unitary"
            );
        }
    }

    #[test]
    fn t_matrix_individual_conditions() {
        let mut g = rng(31);
        let k = random_contraction(4, 0.9, &mut g);
        let t = t_matrix(&k).unwrap();
        let eye = CMat::identity(4, 4);
        assert!((t.t11.adjoint() * &t.t11 + t.t21.adjoint() * &t.t21 - &eye).norm() <= 1e-10);
        assert!((t.t12.adjoint() * &t.t12 + t.t22.adjoint() * &t.t22 - &eye).norm() <= 1e-10);
        assert!((t.t11.adjoint() * &t.t12 + t.t21.adjoint() * &t.t22).norm() <= 1e-10);
    }

    #[test]
    fn t_matrix_rejects_non_contractive() {
        let k = CMat::identity(2, 2).scale(1.1);
        assert!(matches!(t_matrix(&k), Err(Error::NotContractive(_))));
    }

    #[test]
    fn residue_only_response() {
        let mut g = rng(32);
        let r = random_unitary(3, &mut g);
        let params = LatticeParams::new(vec![], r.clone());
        for w in probe_omegas(8) {
            assert!((frequency_response(&params, w).unwrap() - &r).norm() < 1e-14);
        }
    }

    #[test]
    fn scalar_stage_all_pass_modulus() {
        let params = LatticeParams::new(
            vec![CMat::from_element(1, 1, C64::new(-0.5, 0.0))],
            CMat::identity(1, 1),
        );
        for w in probe_omegas(128) {
            let m = frequency_response(&params, w).unwrap()[(0, 0)].norm();
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_lattices_paraunitary_everywhere() {
        let mut g = rng(33);
        for (m, order) in [(1, 3), (2, 5), (3, 4), (4, 8)] {
            let params = random_stable_params(m, order, 0.93, &mut g);
            assert!(stability_check(&params));
            let grid = frequency_response_grid(&params, &probe_omegas(512)).unwrap();
            for resp in grid {
                assert!(unitarity_error(&resp) <= 1e-8, "m={m} order={order}");
            }
        }
    }

    #[test]
    fn stability_check_cases() {
        let ok = LatticeParams::new(vec![CMat::zeros(2, 2)], CMat::identity(2, 2));
        assert!(stability_check(&ok));

        let bad = LatticeParams::new(vec![CMat::identity(2, 2).scale(1.1)], CMat::identity(2, 2));
        assert!(!stability_check(&bad));

        let bad_residue =
            LatticeParams::new(vec![CMat::zeros(2, 2)], CMat::identity(2, 2).scale(1.5));
        assert!(!stability_check(&bad_residue));
    }

    #[test]
    fn clip_contraction_behaviour() {
        let mut g = rng(34);
        let k = random_contraction(3, 1.4, &mut g);
        let clipped = clip_contraction(&k, 1e-3);
        assert!(sigma_max(&clipped) <= 1.0 - 1e-3 + 1e-12);
        // direction preserved
        let ratio = clipped[(0, 0)] / k[(0, 0)];
        for (a, b) in k.iter().zip(clipped.iter()) {
            assert!((b - a * ratio).norm() < 1e-12);
        }
        let small = random_contraction(3, 0.5, &mut g);
        assert_eq!(clip_contraction(&small, 1e-3), small);
    }

    #[test]
    fn constant_filter_converts_to_residue() {
        let mut g = rng(35);
        let r = random_unitary(2, &mut g);
        let f = allpass::RationalAllPass {
            num: MatrixPolynomial { coeffs: vec![r.clone()] },
            den: MatrixPolynomial { coeffs: vec![CMat::identity(2, 2)] },
        };
        let params = lccde_to_lattice(&f).unwrap();
        assert!(params.kappas.is_empty());
        assert!((params.residue - r).norm() < 1e-12);
    }

    #[test]
    fn scalar_pole_recovers_kappa_magnitude() {
        // one-pole all-pass with pole at 0.5: N = (-0.5, 1), D = (1, -0.5)
        let f = allpass::RationalAllPass {
            num: MatrixPolynomial {
                coeffs: vec![
                    CMat::from_element(1, 1, C64::new(-0.5, 0.0)),
                    CMat::from_element(1, 1, C64::new(1.0, 0.0)),
                ],
            },
            den: MatrixPolynomial {
                coeffs: vec![
                    CMat::from_element(1, 1, C64::new(1.0, 0.0)),
                    CMat::from_element(1, 1, C64::new(-0.5, 0.0)),
                ],
            },
        };
        let params = lccde_to_lattice(&f).unwrap();
        assert_eq!(params.kappas.len(), 1);
        assert_abs_diff_eq!(params.kappas[0][(0, 0)].norm(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(params.residue[(0, 0)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn round_trip_lattice_lccde_lattice() {
        let mut g = rng(36);
        for _ in 0..10 {
            let params = random_stable_params(2, 4, 0.9, &mut g);
            let f = allpass::lattice_to_lccde(&params).unwrap();
            let back = lccde_to_lattice(&f).unwrap();
            assert_eq!(back.kappas.len(), params.kappas.len());
            for (a, b) in params.kappas.iter().zip(back.kappas.iter()) {
                assert!((a - b).norm() <= 1e-8, "kappa mismatch {:.3e}", (a - b).norm());
            }
            assert!((params.residue.clone() - back.residue).norm() <= 1e-8);
        }
    }

    #[test]
    fn deflation_reduces_length_by_one_each_stage() {
        let mut g = rng(37);
        let params = random_stable_params(2, 5, 0.85, &mut g);
        let f = allpass::lattice_to_lccde(&params).unwrap();
        assert_eq!(f.num.coeffs.len(), 5);
        assert_eq!(f.den.coeffs.len(), 5);
        // lattice stores M matrices of m^2 entries; direct form stores 2M
        let lattice_params = params.kappas.len() + 1;
        let direct_params = f.num.coeffs.len() + f.den.coeffs.len();
        assert_eq!(direct_params, 2 * lattice_params);
        let back = lccde_to_lattice(&f).unwrap();
        assert_eq!(back.kappas.len() + 1, 5);
    }
}

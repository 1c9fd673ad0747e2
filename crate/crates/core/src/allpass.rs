//! Rational matrix all-pass filters in Direct Form II: a numerator /
//! denominator pair of matrix polynomials in z^{-1} with `D_0 = I`, equal
//! lengths, and `N(e^{jw}) D^{-1}(e^{jw})` unitary on the whole circle.
//!
//! Filters are built either directly from lattice parameters
//! ([`lattice_to_lccde`]) or designed from unitary frequency samples
//! ([`crate::snip::snip_design`]); the reverse conversion is
//! [`crate::lattice::lccde_to_lattice`].

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeParams};
use crate::matcore::{all_finite, C64, CMat};

/// Matrix coefficients in ascending powers of z^{-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    pub coeffs: Vec<CMat>,
}

impl MatrixPolynomial {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.first().map_or(0, |c| c.nrows())
    }

    /// Horner evaluation at `w = e^{-j omega}`.
    pub fn eval(&self, omega: f64) -> CMat {
        let w = C64::from_polar(1.0, -omega);
        let mut acc = self.coeffs.last().expect("nonempty polynomial").clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.map(|z| z * w) + c;
        }
        acc
    }
}

/// Direct Form II all-pass pair `G(z) = N(z) D^{-1}(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalAllPass {
    pub num: MatrixPolynomial,
    pub den: MatrixPolynomial,
}

impl RationalAllPass {
    /// Filter length M (number of matrix coefficients per polynomial).
    pub fn order(&self) -> usize {
        self.num.len()
    }

    pub fn dim(&self) -> usize {
        self.num.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num.is_empty() || self.den.is_empty() {
            return Err(Error::InvalidInput("all-pass polynomials must be nonempty".into()));
        }
        if self.num.len() != self.den.len() {
            return Err(Error::InvalidInput(format!(
                "numerator length {} != denominator length {}",
                self.num.len(),
                self.den.len()
            )));
        }
        let m = self.dim();
        for c in self.num.coeffs.iter().chain(self.den.coeffs.iter()) {
            if c.nrows() != m || c.ncols() != m || !all_finite(c) {
                return Err(Error::InvalidInput("ragged or non-finite coefficient".into()));
            }
        }
        let d0_err = (self.den.coeffs[0].clone() - CMat::identity(m, m)).norm();
        if d0_err > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "denominator constant term deviates from identity by {d0_err:.3e}"
            )));
        }
        Ok(())
    }

    /// Stability via the lattice form: convert and check contractivity.
    pub fn is_stable(&self) -> bool {
        lattice::lccde_to_lattice(self).map(|p| lattice::stability_check(&p)).unwrap_or(false)
    }
}

/// `N(e^{jw}) D^{-1}(e^{jw})`.
pub fn evaluate(g: &RationalAllPass, omega: f64) -> Result<CMat> {
    let n = g.num.eval(omega);
    let d = g.den.eval(omega);
    let sv = d.clone().svd(false, false).singular_values;
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &s| {
        (hi.max(s), lo.min(s))
    });
    if !(smin > 0.0) || smax / smin > 1e12 {
        return Err(Error::NumericalInstability(format!(
            "denominator condition number {:.3e} at omega {omega}",
            smax / smin
        )));
    }
    let d_inv = d
        .try_inverse()
        .ok_or_else(|| Error::NumericalInstability("denominator not invertible".into()))?;
    Ok(n * d_inv)
}

/// Largest `||G^H G - I||_F` over `n_probes` frequencies spread over
/// `(-pi, pi]`.
pub fn paraunitarity_error(g: &RationalAllPass, n_probes: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..n_probes {
        let w = -std::f64::consts::PI
            + (k as f64 + 0.5) * std::f64::consts::TAU / n_probes as f64;
        let resp = evaluate(g, w)?;
        worst = worst.max(crate::matcore::unitarity_error(&resp));
    }
    Ok(worst)
}

/// Cascade the lattice stages into a Direct Form II pair.
///
/// Starting from the residue, each stage (innermost first) maps
/// `(N, D)` to
///
/// ```text
///   A  = D + K^H z^{-1} N
///   D' = T21^{-1} A T21
///   N' = K D' + T12 z^{-1} N T21
/// ```
///
/// which raises the length by one and keeps `D'_0 = I`. The constant
/// right factor T21 cancels inside `N D^{-1}`, so the response equals the
/// lattice recursion's at every frequency.
pub fn lattice_to_lccde(params: &LatticeParams) -> Result<RationalAllPass> {
    if !lattice::stability_check(params) {
        return Err(Error::UnstableLattice(
            "parameters fail the contractivity/unitarity conditions".into(),
        ));
    }
    let m = params.dim();
    let mut num: Vec<CMat> = vec![params.residue.clone()];
    let mut den: Vec<CMat> = vec![CMat::identity(m, m)];

    for k in params.kappas.iter().rev() {
        let stage = lattice::t_matrix(k)?;
        let t21_inv = stage
            .t21
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::UnstableLattice("stage T21 not invertible".into()))?;

        // A = D + K^H z^{-1} N, one coefficient longer than D.
        let mut a: Vec<CMat> = Vec::with_capacity(den.len() + 1);
        a.push(den[0].clone());
        for i in 1..=num.len() {
            let mut c = if i < den.len() { den[i].clone() } else { CMat::zeros(m, m) };
            c += k.adjoint() * &num[i - 1];
            a.push(c);
        }

        let d_next: Vec<CMat> = a.iter().map(|c| &t21_inv * c * &stage.t21).collect();
        let mut n_next: Vec<CMat> = d_next.iter().map(|c| k * c).collect();
        for i in 1..=num.len() {
            n_next[i] += &stage.t12 * &num[i - 1] * &stage.t21;
        }

        num = n_next;
        den = d_next;
    }

    Ok(RationalAllPass {
        num: MatrixPolynomial { coeffs: num },
        den: MatrixPolynomial { coeffs: den },
    })
}

//! The three comparison schemes: Givens-rotation parameterization with
//! phase-unwrapped interpolation, geodesic interpolation on the unitary
//! group, and angle-delay truncation of the precoder's time response.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::matcore::{self, C64, CMat};

/// Scalar parameterization of an m-by-m unitary matrix: `m(m+1)/2` phases
/// and `m(m-1)/2` rotation angles, `m^2` real values total. Canonical
/// ranges: `theta` in `[0, pi/2]`, `phi` in `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GivensParams {
    pub dim: usize,
    pub phis: Vec<f64>,
    pub thetas: Vec<f64>,
}

impl GivensParams {
    pub fn n_params(&self) -> usize {
        self.phis.len() + self.thetas.len()
    }

    /// All parameters as one flat vector, phases first. The tracking layer
    /// treats them uniformly.
    pub fn flat(&self) -> Vec<f64> {
        self.phis.iter().chain(self.thetas.iter()).copied().collect()
    }

    pub fn from_flat(dim: usize, flat: &[f64]) -> Result<Self> {
        let n_phi = dim * (dim + 1) / 2;
        let n_theta = dim * (dim - 1) / 2;
        if flat.len() != n_phi + n_theta {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters for dim {dim}, got {}",
                n_phi + n_theta,
                flat.len()
            )));
        }
        Ok(Self {
            dim,
            phis: flat[..n_phi].to_vec(),
            thetas: flat[n_phi..].to_vec(),
        })
    }
}

/// Decompose a unitary matrix into Givens phases and angles such that
/// [`givens_reconstruct`] rebuilds it.
///
/// Column by column: phases make the at-and-below-diagonal entries of the
/// current column real nonnegative, then plane rotations on adjacent row
/// pairs fold the column onto the diagonal from the bottom up. Both
/// operands of every rotation are nonnegative, so every angle lands in
/// `[0, pi/2]` by construction.
pub fn givens_decompose(v: &CMat) -> Result<GivensParams> {
    if !matcore::is_unitary(v, matcore::UNITARY_TOL) {
        return Err(Error::InvalidInput("givens_decompose: input not unitary".into()));
    }
    let m = v.nrows();
    let mut w = v.clone();
    let mut phis = Vec::with_capacity(m * (m + 1) / 2);
    let mut thetas = Vec::with_capacity(m * (m - 1) / 2);

    for k in 0..m.saturating_sub(1) {
        for r in k..m {
            let phi = w[(r, k)].arg();
            phis.push(phi);
            let rot = C64::from_polar(1.0, -phi);
            for c in k..m {
                w[(r, c)] *= rot;
            }
        }
        for l in (k + 1..m).rev() {
            let a = w[(l - 1, k)].re;
            let b = w[(l, k)].re;
            let theta = b.atan2(a);
            thetas.push(theta);
            let (s, c) = theta.sin_cos();
            for col in k..m {
                let top = w[(l - 1, col)];
                let bot = w[(l, col)];
                w[(l - 1, col)] = top.scale(c) + bot.scale(s);
                w[(l, col)] = -top.scale(s) + bot.scale(c);
            }
        }
    }
    phis.push(w[(m - 1, m - 1)].arg());
    Ok(GivensParams { dim: m, phis, thetas })
}

/// Product form: phases and rotations applied in the decomposition's
/// order, inverted. Unitary by construction for any parameter values.
pub fn givens_reconstruct(p: &GivensParams) -> CMat {
    let m = p.dim;
    let mut u = CMat::identity(m, m);
    let mut phi_idx = 0;
    let mut theta_idx = 0;

    for k in 0..m.saturating_sub(1) {
        for r in k..m {
            let rot = C64::from_polar(1.0, p.phis[phi_idx]);
            phi_idx += 1;
            for row in 0..m {
                u[(row, r)] *= rot;
            }
        }
        for l in (k + 1..m).rev() {
            let (s, c) = p.thetas[theta_idx].sin_cos();
            theta_idx += 1;
            for row in 0..m {
                let left = u[(row, l - 1)];
                let right = u[(row, l)];
                u[(row, l - 1)] = left.scale(c) + right.scale(s);
                u[(row, l)] = -left.scale(s) + right.scale(c);
            }
        }
    }
    let rot = C64::from_polar(1.0, p.phis[phi_idx]);
    for row in 0..m {
        u[(row, m - 1)] *= rot;
    }
    u
}

/// `Va exp(t log(Va^H Vb))` on the unitary group.
///
/// The logarithm comes from the Cayley transform: `A = i(I-W)(I+W)^{-1}`
/// is Hermitian for unitary `W` with eigenvalues `tan(theta/2)`, so a
/// Hermitian eigendecomposition gives the rotation angles without a
/// general Schur step. An eigenvalue of `W` at -1 (rotation angle pi)
/// makes the principal log undefined: the endpoints are re-phased
/// per-column once (which moves neither subspaces nor rates) and the
/// interpolation retried before giving up with `BranchCut`.
pub fn geodesic_interpolate(va: &CMat, vb: &CMat, t: f64) -> Result<CMat> {
    if va.shape() != vb.shape() {
        return Err(Error::InvalidInput("geodesic: shape mismatch".into()));
    }
    if !matcore::is_unitary(va, matcore::UNITARY_TOL)
        || !matcore::is_unitary(vb, matcore::UNITARY_TOL)
    {
        return Err(Error::InvalidInput("geodesic: inputs must be unitary".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput("geodesic: t must be finite".into()));
    }
    match unitary_power(va, vb, t) {
        Err(Error::BranchCut(_)) => {
            let aligned = phase_align_columns(va, vb);
            unitary_power(va, &aligned, t)
        }
        other => other,
    }
}

fn unitary_power(va: &CMat, vb: &CMat, t: f64) -> Result<CMat> {
    let m = va.nrows();
    let w = va.adjoint() * vb;
    let eye = CMat::identity(m, m);
    let c = &eye + &w;
    let smin = c
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(smin > 1e-6) {
        return Err(Error::BranchCut(format!(
            "rotation angle at pi (min singular value of I+W is {smin:.3e})"
        )));
    }
    let c_inv = c
        .try_inverse()
        .ok_or_else(|| Error::BranchCut("I + W not invertible".into()))?;
    let a = (&eye - &w).map(|z| z * C64::new(0.0, 1.0)) * c_inv;
    let herm = (&a + a.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let d = CMat::from_fn(m, m, |i, j| {
        if i == j {
            C64::from_polar(1.0, t * 2.0 * eig.eigenvalues[i].atan())
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(va * (&eig.eigenvectors * d * eig.eigenvectors.adjoint()))
}

/// Rotate each column of `v` so its inner product with the matching
/// column of `reference` is real nonnegative.
fn phase_align_columns(reference: &CMat, v: &CMat) -> CMat {
    let mut out = v.clone();
    for k in 0..v.ncols() {
        let inner: C64 = reference
            .column(k)
            .iter()
            .zip(v.column(k).iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let mag = inner.norm();
        if mag > 1e-12 {
            let rot = inner.conj() / mag;
            for r in 0..v.nrows() {
                out[(r, k)] *= rot;
            }
        }
    }
    out
}

/// Remove 2-pi jumps from a parameter series in place.
pub fn unwrap_phases(xs: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..xs.len() {
        let raw = xs[i] + offset;
        let mut d = raw - xs[i - 1];
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
            offset -= std::f64::consts::TAU;
        }
        while d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
            offset += std::f64::consts::TAU;
        }
        xs[i] = xs[i - 1] + d;
    }
}

/// Linear interpolation of every Givens parameter across the pilot grid,
/// after unwrapping, evaluated at every subcarrier. `pilot_pos` must be
/// strictly increasing and span the grid.
pub fn givens_interpolate_grid(
    pilot_params: &[GivensParams],
    pilot_pos: &[usize],
    n_fft: usize,
) -> Result<Vec<GivensParams>> {
    if pilot_params.len() < 2 {
        return Err(Error::InvalidInput("givens interpolation needs at least 2 pilots".into()));
    }
    if pilot_params.len() != pilot_pos.len() {
        return Err(Error::InvalidInput("pilot params/positions length mismatch".into()));
    }
    if pilot_pos.windows(2).any(|w| w[1] <= w[0]) || *pilot_pos.last().unwrap() >= n_fft {
        return Err(Error::InvalidInput("pilot positions must be increasing within the grid".into()));
    }
    let dim = pilot_params[0].dim;
    let n_params = pilot_params[0].n_params();
    if pilot_params.iter().any(|p| p.dim != dim) {
        return Err(Error::InvalidInput("ragged pilot parameters".into()));
    }

    // unwrap each parameter's series across pilots once
    let mut series: Vec<Vec<f64>> = (0..n_params)
        .map(|p| pilot_params.iter().map(|gp| gp.flat()[p]).collect())
        .collect();
    for s in series.iter_mut() {
        unwrap_phases(s);
    }

    let mut out = Vec::with_capacity(n_fft);
    let mut seg = 0usize;
    for k in 0..n_fft {
        while seg + 2 < pilot_pos.len() && k >= pilot_pos[seg + 1] {
            seg += 1;
        }
        let (k0, k1) = (pilot_pos[seg], pilot_pos[seg + 1]);
        let t = if k <= k0 {
            0.0
        } else if k >= k1 {
            1.0
        } else {
            (k - k0) as f64 / (k1 - k0) as f64
        };
        let flat: Vec<f64> =
            series.iter().map(|s| s[seg] + t * (s[seg + 1] - s[seg])).collect();
        out.push(GivensParams::from_flat(dim, &flat)?);
    }
    Ok(out)
}

/// Interpolated parameters at one subcarrier.
pub fn givens_interpolate(
    pilot_params: &[GivensParams],
    pilot_pos: &[usize],
    target: usize,
    n_fft: usize,
) -> Result<GivensParams> {
    if target >= n_fft {
        return Err(Error::InvalidInput(format!("target {target} outside grid {n_fft}")));
    }
    Ok(givens_interpolate_grid(pilot_params, pilot_pos, n_fft)?.swap_remove(target))
}

/// Truncated inverse-DFT representation of a precoder grid.
#[derive(Debug, Clone)]
pub struct AngleDelayPrecoder {
    pub taps: Vec<CMat>,
    pub n_fft: usize,
}

/// Entrywise inverse DFT of the grid across subcarriers, keeping the first
/// `n_taps` taps.
pub fn angle_delay_truncate(grid: &[CMat], n_taps: usize) -> Result<AngleDelayPrecoder> {
    let n_fft = grid.len();
    if n_fft == 0 || n_taps == 0 || n_taps > n_fft {
        return Err(Error::InvalidInput(format!(
            "angle_delay_truncate: {n_taps} taps from {n_fft} subcarriers"
        )));
    }
    let m = grid[0].nrows();
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n_fft);
    let mut taps = vec![CMat::zeros(m, m); n_taps];
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n_fft];
    for i in 0..m {
        for j in 0..m {
            for (k, g) in grid.iter().enumerate() {
                buf[k] = g[(i, j)];
            }
            ifft.process(&mut buf);
            for (n, tap) in taps.iter_mut().enumerate() {
                tap[(i, j)] = buf[n] / n_fft as f64;
            }
        }
    }
    Ok(AngleDelayPrecoder { taps, n_fft })
}

/// Forward DFT of the zero-padded taps: the grid the transmitter rebuilds.
/// Not unitary in general — the truncation is the approximation this
/// baseline lives with.
pub fn angle_delay_reconstruct(ad: &AngleDelayPrecoder) -> Vec<CMat> {
    let m = ad.taps.first().map_or(0, |t| t.nrows());
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(ad.n_fft);
    let mut grid = vec![CMat::zeros(m, m); ad.n_fft];
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); ad.n_fft];
    for i in 0..m {
        for j in 0..m {
            buf.fill(Complex::new(0.0, 0.0));
            for (n, tap) in ad.taps.iter().enumerate() {
                buf[n] = tap[(i, j)];
            }
            fft.process(&mut buf);
            for (k, g) in grid.iter_mut().enumerate() {
                g[(i, j)] = buf[k];
            }
        }
    }
    grid
}

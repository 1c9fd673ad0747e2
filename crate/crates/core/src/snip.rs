//! All-pass interpolation: fit a lattice filter through prescribed unitary
//! values at prescribed frequencies.
//!
//! The fit runs in lattice coordinates so every iterate is a stable
//! all-pass filter: reflections strictly contractive, residue unitary
//! (polar projection after each step). Internally each reflection is
//! charted as `K = X (I + X^H X)^{-1/2}` with `X` unconstrained, which
//! maps the open contraction ball onto all of matrix space. In that chart
//! the stage blocks collapse to
//!
//! ```text
//!   T21 = (I + X^H X)^{-1/2},   T12 = (I + X X^H)^{-1/2},
//! ```
//!
//! inverse roots of matrices with eigenvalues >= 1, so gradients stay
//! bounded arbitrarily close to the contractivity boundary — which is
//! where the optimum lives whenever the samples are nearly constant in
//! frequency (a low-order all-pass can only be near-constant at spread-out
//! frequencies with near-unimodular reflections). The objective
//! `sum_k ||G(w_k) - V_k||_F^2` is minimized by gradient descent with
//! multiplicative step control (grow on decrease, halve on non-decrease)
//! from a deterministic start: all reflections zero, residue equal to the
//! sample at the median node frequency.

use crate::error::{Error, Result};
use crate::lattice::{clip_contraction, LatticeParams, CONTRACTIVITY_MARGIN};
use crate::matcore::{self, C64, CMat};

/// Iteration cap for the descent. One objective evaluation per iteration.
pub const MAX_ITERS: usize = 2000;
/// Initial step size of the descent.
pub const INITIAL_STEP: f64 = 0.1;
/// Step growth factor after an accepted iterate.
pub const STEP_GROWTH: f64 = 1.25;
/// Default node residual target.
pub const DEFAULT_TOL: f64 = 1e-3;
/// Cap on the chart coordinate's largest singular value when re-entering
/// the chart from existing parameters (sigma_K = 1 - 5e-5 at the cap).
const CHART_SIGMA_CAP: f64 = 1e2;
/// Initial step for warm-started refits, which start near a solution.
const WARM_STEP: f64 = 0.02;
/// Weight of the proximal term tying a warm refit to its starting
/// reflections and residue. Breaks the tie among the many parameter sets
/// that interpolate equally well, in favor of the one closest to the
/// previous solution.
const PROX_WEIGHT: f64 = 1e-4;

/// Options for the interpolation fit.
#[derive(Debug, Clone)]
pub struct SnipOptions {
    /// Largest allowed `||G(w_k) - V_k||_F` over the nodes.
    pub tol: f64,
    /// Objective-evaluation budget.
    pub max_iters: usize,
    /// Group-delay matrices at the nodes. Accepted as design hints for
    /// interface completeness; the fit does not use them.
    pub group_delay: Option<Vec<CMat>>,
}

impl Default for SnipOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iters: MAX_ITERS, group_delay: None }
    }
}

/// Result of a converged fit.
#[derive(Debug, Clone)]
pub struct SnipReport {
    pub params: LatticeParams,
    /// Achieved `max_k ||G(w_k) - V_k||_F`.
    pub residual: f64,
    /// Objective evaluations spent.
    pub iterations: usize,
}

fn validate_nodes(nodes: &[(f64, CMat)]) -> Result<usize> {
    if nodes.is_empty() {
        return Err(Error::InvalidInput("snip_design: no interpolation nodes".into()));
    }
    let m = nodes[0].1.nrows();
    for (i, (w, v)) in nodes.iter().enumerate() {
        if !(*w > -std::f64::consts::PI - 1e-12 && *w <= std::f64::consts::PI + 1e-12) {
            return Err(Error::InvalidInput(format!("node {i}: omega {w} outside (-pi, pi]")));
        }
        if v.nrows() != m || v.ncols() != m {
            return Err(Error::InvalidInput("snip_design: ragged node matrices".into()));
        }
        if !matcore::is_unitary(v, 1e-8) {
            return Err(Error::InvalidInput(format!("node {i}: sample is not unitary")));
        }
        for (j, (w2, _)) in nodes.iter().enumerate().skip(i + 1) {
            if (w - w2).abs() < 1e-12 {
                return Err(Error::InvalidInput(format!("nodes {i} and {j} share omega {w}")));
            }
        }
    }
    Ok(m)
}

/// Design a stable order-`order` lattice all-pass filter with
/// `G(w_k) ~ V_k` at every node, to `opts.tol`.
///
/// `order` counts tracked matrices: `order - 1` reflections plus the
/// residue. It must be at least `nodes.len() - 1`. Returns
/// `DesignNotConverged` (carrying the achieved residual) if the budget
/// runs out above tolerance; callers may raise the order and retry.
pub fn snip_design(nodes: &[(f64, CMat)], order: usize, opts: &SnipOptions) -> Result<SnipReport> {
    let m = validate_nodes(nodes)?;
    if order == 0 {
        return Err(Error::InvalidInput("snip_design: order must be at least 1".into()));
    }
    if order + 1 < nodes.len() {
        return Err(Error::InvalidInput(format!(
            "snip_design: order {order} below nodes-1 = {}",
            nodes.len() - 1
        )));
    }
    // Lower median of the node frequencies anchors both starts.
    let mut idx: Vec<usize> = (0..nodes.len()).collect();
    idx.sort_by(|&a, &b| nodes[a].0.partial_cmp(&nodes[b].0).unwrap());
    let v_med = nodes[idx[(idx.len() - 1) / 2]].1.clone();

    // Start A: zero reflections, residue at the median sample.
    let zeros = Chart {
        xs: (0..order - 1).map(|_| CMat::zeros(m, m)).collect(),
        residue: v_med.clone(),
    };
    // Start B (order >= 2 only): outermost reflection pinned near the
    // median sample. When the samples barely vary with frequency the
    // optimum has a near-unimodular outer reflection, which the zero start
    // only reaches through a long shallow valley; pinning starts next to it.
    let pinned = (order >= 2).then(|| {
        let mut xs: Vec<CMat> = (0..order - 1).map(|_| CMat::zeros(m, m)).collect();
        xs[0] = v_med.scale(CHART_SIGMA_CAP);
        Chart { xs, residue: v_med.clone() }
    });

    let spread = nodes.iter().map(|(_, v)| (v - &v_med).norm()).fold(0.0, f64::max);
    let starts: Vec<Chart> = if spread < 0.05 {
        pinned.into_iter().chain([zeros]).collect()
    } else {
        [zeros].into_iter().chain(pinned).collect()
    };

    let mut best: Option<(f64, f64)> = None; // (residual, tol)
    for chart in starts {
        match optimize(chart, nodes, opts, None, INITIAL_STEP) {
            Ok(report) => return Ok(report),
            Err(Error::DesignNotConverged { residual, tol }) => {
                if best.map_or(true, |(r, _)| residual < r) {
                    best = Some((residual, tol));
                }
            }
            Err(e) => return Err(e),
        }
    }
    let (residual, tol) = best.expect("at least one start");
    Err(Error::DesignNotConverged { residual, tol })
}

/// Continue a fit from existing parameters (used when tracking a slowly
/// varying target: the previous frame's solution is the natural start).
pub fn refine_design(
    initial: &LatticeParams,
    nodes: &[(f64, CMat)],
    opts: &SnipOptions,
) -> Result<SnipReport> {
    let m = validate_nodes(nodes)?;
    if initial.dim() != m {
        return Err(Error::InvalidInput("refine_design: dimension mismatch".into()));
    }
    if !crate::lattice::stability_check(initial) {
        return Err(Error::UnstableLattice("refine_design: unstable starting point".into()));
    }
    let warm = Chart::from_params(initial)?;
    match optimize(warm, nodes, opts, Some(initial), WARM_STEP) {
        // the anchor can hold the fit back when the target moved far in
        // one step; retry unanchored from the same start, and if the warm
        // basin itself is lost (the target jumped), fall back to a fresh
        // design
        Err(Error::DesignNotConverged { .. }) => {
            match optimize(Chart::from_params(initial)?, nodes, opts, None, WARM_STEP) {
                Err(Error::DesignNotConverged { .. }) => {
                    snip_design(nodes, initial.order(), opts)
                }
                other => other,
            }
        }
        other => other,
    }
}

/// Forward-only node residual of existing parameters.
pub fn node_residual(params: &LatticeParams, nodes: &[(f64, CMat)]) -> Result<f64> {
    let omegas: Vec<f64> = nodes.iter().map(|(w, _)| *w).collect();
    let grid = crate::lattice::frequency_response_grid(params, &omegas)?;
    Ok(grid
        .iter()
        .zip(nodes.iter())
        .map(|(g, (_, v))| (g - v).norm())
        .fold(0.0, f64::max))
}

/// Optimizer state: unconstrained chart coordinates plus the unitary residue.
struct Chart {
    xs: Vec<CMat>,
    residue: CMat,
}

impl Chart {
    /// `X = K (I - K^H K)^{-1/2}`, the chart inverse, with the largest
    /// singular value capped so re-entry from a boundary-clipped reflection
    /// stays finite.
    fn from_params(params: &LatticeParams) -> Result<Self> {
        let xs = params
            .kappas
            .iter()
            .map(|k| {
                let dec = matcore::svd(k)?;
                let m = k.nrows();
                let scaled = CMat::from_fn(m, m, |i, j| {
                    if i == j {
                        let s = dec.s[i].min(1.0 - 1e-15);
                        let x = (s / (1.0 - s * s).sqrt()).min(CHART_SIGMA_CAP);
                        C64::new(x, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                Ok(&dec.u * scaled * dec.v.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { xs, residue: params.residue.clone() })
    }

    /// Reflections from the chart, clipped to the contractivity margin.
    fn to_params(&self) -> Result<LatticeParams> {
        let kappas = self
            .xs
            .iter()
            .map(|x| {
                let st = StageBlocks::new(x)?;
                Ok(clip_contraction(&st.k, CONTRACTIVITY_MARGIN))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LatticeParams::new(kappas, self.residue.clone()))
    }
}

/// Hermitian eigendecomposition with the inverse square root applied.
struct InvRoot {
    q: CMat,
    /// eigenvalues of the underlying Gram matrix (all >= 1)
    a: Vec<f64>,
    /// `a^{-1/2}` applied: the inverse root itself
    s: CMat,
}

impl InvRoot {
    fn new(gram: CMat) -> Self {
        let m = gram.nrows();
        let eig = gram.symmetric_eigen();
        let a: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(1.0)).collect();
        let d = CMat::from_fn(m, m, |i, j| {
            if i == j { C64::new(a[i].powf(-0.5), 0.0) } else { C64::new(0.0, 0.0) }
        });
        let s = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
        Self { q: eig.eigenvectors, a, s }
    }

    /// Adjoint of the Fréchet derivative of `A -> A^{-1/2}` at this point:
    /// `Q [ (Q^H C Q) o Psi ] Q^H` with `Psi` the divided differences of
    /// `a^{-1/2}`. Self-adjoint in the real Frobenius inner product.
    fn adjoint(&self, cot: &CMat) -> CMat {
        let m = self.q.nrows();
        let inner = self.q.adjoint() * cot * &self.q;
        let scaled = CMat::from_fn(m, m, |i, j| {
            let (ai, aj) = (self.a[i], self.a[j]);
            let psi = if (ai - aj).abs() > 1e-12 * ai.max(aj) {
                (ai.powf(-0.5) - aj.powf(-0.5)) / (ai - aj)
            } else {
                let mid = 0.5 * (ai + aj);
                -0.5 * mid.powf(-1.5)
            };
            inner[(i, j)] * C64::new(psi, 0.0)
        });
        &self.q * scaled * self.q.adjoint()
    }
}

/// Per-stage blocks in the chart: `K = X P`, `T21 = P = (I+X^H X)^{-1/2}`,
/// `T12 = (I+X X^H)^{-1/2}`, `T22 = -K^H`.
struct StageBlocks {
    k: CMat,
    t12: CMat,
    t21: CMat,
    t22: CMat,
    ra: InvRoot,
    rb: InvRoot,
}

impl StageBlocks {
    fn new(x: &CMat) -> Result<Self> {
        if !matcore::all_finite(x) {
            return Err(Error::NumericalInstability("non-finite chart coordinate".into()));
        }
        let m = x.nrows();
        let eye = CMat::identity(m, m);
        let ra = InvRoot::new(&eye + x.adjoint() * x);
        let rb = InvRoot::new(&eye + x * x.adjoint());
        let k = x * &ra.s;
        let t22 = -k.adjoint();
        Ok(Self { k, t12: rb.s.clone(), t21: ra.s.clone(), t22, ra, rb })
    }
}

struct Gradient {
    xs: Vec<CMat>,
    residue: CMat,
}

fn optimize(
    mut chart: Chart,
    nodes: &[(f64, CMat)],
    opts: &SnipOptions,
    anchor: Option<&LatticeParams>,
    start_step: f64,
) -> Result<SnipReport> {
    let (mut loss, mut residual, mut grad) = loss_and_grad(&chart, nodes, anchor)?;
    let mut step = start_step;
    let mut iterations = 1usize;

    while iterations < opts.max_iters && residual > opts.tol && step > 1e-14 {
        let trial = step_chart(&chart, &grad, step);
        iterations += 1;
        match trial.and_then(|t| loss_and_grad(&t, nodes, anchor).map(|r| (t, r))) {
            Ok((t, (t_loss, t_res, t_grad))) if t_loss < loss => {
                chart = t;
                loss = t_loss;
                residual = t_res;
                grad = t_grad;
                step = (step * STEP_GROWTH).min(1e8);
            }
            _ => step *= 0.5,
        }
    }

    // Report against the clipped output parameters, which are what the
    // caller gets.
    let params = chart.to_params()?;
    let out_residual = node_residual(&params, nodes)?;
    if out_residual <= opts.tol {
        Ok(SnipReport { params, residual: out_residual, iterations })
    } else {
        Err(Error::DesignNotConverged { residual: out_residual, tol: opts.tol })
    }
}

/// Move `step` along the normalized stacked gradient. Normalizing globally
/// makes the adaptive step control displacement rather than raw gradient
/// scale (the chart's far-from-zero coordinates have small gradients but
/// long distances to cover), while blocks with negligible gradients stay
/// put instead of wandering.
fn step_chart(chart: &Chart, grad: &Gradient, step: f64) -> Result<Chart> {
    let mut total = grad.residue.norm_squared();
    for g in &grad.xs {
        total += g.norm_squared();
    }
    let scale = step / (total.sqrt() + 1e-30);
    let xs = chart
        .xs
        .iter()
        .zip(grad.xs.iter())
        .map(|(x, g)| x - g.scale(scale))
        .collect();
    let residue = matcore::polar_unitary(&(&chart.residue - grad.residue.scale(scale)))?;
    Ok(Chart { xs, residue })
}

/// Objective, max node residual, and the Wirtinger gradient in the chart
/// (`d loss = 2 Re <grad, d coordinate>`).
fn loss_and_grad(
    chart: &Chart,
    nodes: &[(f64, CMat)],
    anchor: Option<&LatticeParams>,
) -> Result<(f64, f64, Gradient)> {
    let m = chart.residue.nrows();
    let n_stages = chart.xs.len();
    let eye = CMat::identity(m, m);

    let stages = chart.xs.iter().map(StageBlocks::new).collect::<Result<Vec<_>>>()?;

    let mut loss = 0.0;
    let mut residual = 0.0f64;
    let mut cot_t11 = vec![CMat::zeros(m, m); n_stages];
    let mut cot_t12 = vec![CMat::zeros(m, m); n_stages];
    let mut cot_t21 = vec![CMat::zeros(m, m); n_stages];
    let mut cot_t22 = vec![CMat::zeros(m, m); n_stages];
    let mut cot_residue = CMat::zeros(m, m);

    for (omega, target) in nodes {
        let w = C64::from_polar(1.0, -*omega);

        // forward, innermost stage (last coordinate) first; save intermediates
        let mut g = chart.residue.clone();
        let mut saved: Vec<(CMat, CMat, CMat)> = Vec::with_capacity(n_stages); // (e, s_inv, w_mat)
        for st in stages.iter().rev() {
            let e = g.map(|z| z * w);
            let q = &eye - &st.t22 * &e;
            let s_inv = q.try_inverse().ok_or_else(|| {
                Error::NumericalInstability("singular feedback closure in design".into())
            })?;
            let w_mat = &s_inv * &st.t21;
            g = &st.k + &st.t12 * &e * &w_mat;
            saved.push((e, s_inv, w_mat));
        }

        let diff = &g - target;
        let err = diff.norm();
        loss += err * err;
        residual = residual.max(err);

        // backward, outermost stage first
        let mut cg = diff;
        for (stage_idx, st) in stages.iter().enumerate() {
            let (e, s_inv, w_mat) = &saved[n_stages - 1 - stage_idx];
            let p = e * w_mat;

            cot_t11[stage_idx] += &cg;
            cot_t12[stage_idx] += &cg * p.adjoint();
            let cot_p = st.t12.adjoint() * &cg;
            let mut cot_e = &cot_p * w_mat.adjoint();
            let cot_w = e.adjoint() * &cot_p;
            cot_t21[stage_idx] += s_inv.adjoint() * &cot_w;
            let cot_s = &cot_w * st.t21.adjoint();
            let cot_q = -(s_inv.adjoint() * cot_s * s_inv.adjoint());
            cot_t22[stage_idx] += -(&cot_q * e.adjoint());
            cot_e += -(st.t22.adjoint() * &cot_q);
            cg = cot_e.map(|z| z * w.conj());
        }
        cot_residue += cg;
    }

    // pull the stage-block cotangents back to the chart coordinates
    let mut grad_xs = Vec::with_capacity(n_stages);
    for (idx, st) in stages.iter().enumerate() {
        let x = &chart.xs[idx];

        // K appears as T11 and (conjugated) as T22
        let mut cot_k = &cot_t11[idx] - cot_t22[idx].adjoint();
        if let Some(a) = anchor {
            let d = &st.k - &a.kappas[idx];
            loss += PROX_WEIGHT * d.norm_squared();
            cot_k += d.scale(PROX_WEIGHT);
        }

        // K = X P: direct X path and the P path
        let mut cot_x = &cot_k * &st.ra.s;
        let cot_p = x.adjoint() * cot_k + &cot_t21[idx];

        // P = (I + X^H X)^{-1/2}
        let cot_a = st.ra.adjoint(&cot_p);
        cot_x += x * (&cot_a + cot_a.adjoint());

        // T12 = (I + X X^H)^{-1/2}
        let cot_b = st.rb.adjoint(&cot_t12[idx]);
        cot_x += (&cot_b + cot_b.adjoint()) * x;

        grad_xs.push(cot_x);
    }

    if let Some(a) = anchor {
        let dr = &chart.residue - &a.residue;
        loss += PROX_WEIGHT * dr.norm_squared();
        cot_residue += dr.scale(PROX_WEIGHT);
    }

    Ok((loss, residual, Gradient { xs: grad_xs, residue: cot_residue }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{frequency_response, random_stable_params, stability_check};
    use crate::matcore::{random_contraction, random_unitary, unitarity_error};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut g = rng(50);
        let chart = Chart {
            xs: vec![random_contraction(2, 0.8, &mut g), random_contraction(2, 1.7, &mut g)],
            residue: random_unitary(2, &mut g),
        };
        let nodes: Vec<(f64, CMat)> = vec![
            (0.3, random_unitary(2, &mut g)),
            (-1.1, random_unitary(2, &mut g)),
            (2.0, random_unitary(2, &mut g)),
        ];
        let (_, _, grad) = loss_and_grad(&chart, &nodes, None).unwrap();
        let f = |ch: &Chart| loss_and_grad(ch, &nodes, None).unwrap().0;
        let h = 1e-6;

        for (xi, gx) in grad.xs.iter().enumerate() {
            for (i, j) in [(0usize, 0usize), (0, 1), (1, 1)] {
                for (part, expect) in
                    [(c(1.0, 0.0), 2.0 * gx[(i, j)].re), (c(0.0, 1.0), 2.0 * gx[(i, j)].im)]
                {
                    let mut plus = Chart { xs: chart.xs.clone(), residue: chart.residue.clone() };
                    plus.xs[xi][(i, j)] += part * h;
                    let mut minus = Chart { xs: chart.xs.clone(), residue: chart.residue.clone() };
                    minus.xs[xi][(i, j)] -= part * h;
                    let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                    assert!(
                        (fd - expect).abs() <= 1e-5 * (1.0 + expect.abs()),
                        "x{xi} ({i},{j}): fd {fd} vs analytic {expect}"
                    );
                }
            }
        }
        for (i, j) in [(0usize, 1usize), (1, 0)] {
            for (part, expect) in [
                (c(1.0, 0.0), 2.0 * grad.residue[(i, j)].re),
                (c(0.0, 1.0), 2.0 * grad.residue[(i, j)].im),
            ] {
                let mut plus = Chart { xs: chart.xs.clone(), residue: chart.residue.clone() };
                plus.residue[(i, j)] += part * h;
                let mut minus = Chart { xs: chart.xs.clone(), residue: chart.residue.clone() };
                minus.residue[(i, j)] -= part * h;
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                assert!(
                    (fd - expect).abs() <= 1e-5 * (1.0 + expect.abs()),
                    "residue ({i},{j}): fd {fd} vs analytic {expect}"
                );
            }
        }
    }

    #[test]
    fn chart_round_trips_reflections() {
        // interior reflections round-trip tightly; boundary ones are pulled
        // to the chart's sigma cap (5e-5 short of one)
        let mut g = rng(57);
        for (smax, tol) in [(0.3, 1e-12), (0.9, 1e-12), (0.999, 1e-10), (1.0 - 1e-9, 2e-4)] {
            let k = random_contraction(3, smax, &mut g);
            let params = LatticeParams::new(vec![k.clone()], random_unitary(3, &mut g));
            let chart = Chart::from_params(&params).unwrap();
            let back = chart.to_params().unwrap();
            let err = (&back.kappas[0] - &k).norm();
            assert!(err < tol, "smax {smax}: chart round trip err {err}");
        }
    }

    #[test]
    fn single_node_is_exact_immediately() {
        let mut g = rng(51);
        let v = random_unitary(3, &mut g);
        let report = snip_design(&[(0.7, v.clone())], 1, &SnipOptions::default()).unwrap();
        assert_eq!(report.residual, 0.0);
        assert!(report.params.kappas.is_empty());
        assert_eq!(report.params.residue, v);
    }

    #[test]
    fn scalar_two_node_first_order_fit() {
        // targets: G(0) = 1, G(pi) = j; a one-pole scalar all-pass through
        // them exists in closed form (see asserts below)
        let nodes = vec![
            (0.0, CMat::from_element(1, 1, c(1.0, 0.0))),
            (std::f64::consts::PI, CMat::from_element(1, 1, c(0.0, 1.0))),
        ];
        let opts = SnipOptions { tol: 1e-6, ..Default::default() };
        let report = snip_design(&nodes, 2, &opts).unwrap();
        assert!(report.residual <= 1e-6, "residual {}", report.residual);

        // closed-form structure of any interpolant G(w) = (k + wR)/(1 + conj(k) w R):
        // G(0)=1 forces R = (k-1)/conj(k-1); G(pi)=j forces R = (k-j)/(1-j conj(k)).
        // The designed parameters must satisfy both to the achieved residual scale.
        let k = report.params.kappas[0][(0, 0)];
        let r = report.params.residue[(0, 0)];
        let r1 = (k - c(1.0, 0.0)) / (k - c(1.0, 0.0)).conj();
        let r2 = (k - c(0.0, 1.0)) / (c(1.0, 0.0) - c(0.0, 1.0) * k.conj());
        assert!((r - r1).norm() < 1e-4, "R {r} vs oracle {r1}");
        assert!((r - r2).norm() < 1e-4, "R {r} vs oracle {r2}");
        assert!(k.norm() < 1.0);
    }

    #[test]
    fn recovers_a_representable_filter() {
        // targets sampled from an actual lattice filter: a fit of the same
        // order must reach deep residuals
        let mut g = rng(52);
        let truth = random_stable_params(2, 3, 0.5, &mut g);
        let omegas = [-2.0, -0.4, 1.3, 2.8];
        let nodes: Vec<(f64, CMat)> = omegas
            .iter()
            .map(|&w| (w, frequency_response(&truth, w).unwrap()))
            .collect();
        let opts = SnipOptions { tol: 1e-4, ..Default::default() };
        let report = snip_design(&nodes, 3, &opts).unwrap();
        assert!(report.residual <= 1e-4);
        assert!(stability_check(&report.params));
    }

    #[test]
    fn designed_filter_is_all_pass_everywhere() {
        let mut g = rng(53);
        let nodes: Vec<(f64, CMat)> = [-2.5, 0.1, 1.9]
            .iter()
            .map(|&w| (w, random_unitary(2, &mut g)))
            .collect();
        let opts = SnipOptions { tol: 0.5, max_iters: 300, group_delay: None };
        let report = snip_design(&nodes, 3, &opts).unwrap();
        for k in 0..512 {
            let w = -std::f64::consts::PI + (k as f64 + 0.5) * std::f64::consts::TAU / 512.0;
            let resp = frequency_response(&report.params, w).unwrap();
            assert!(unitarity_error(&resp) <= 1e-8);
        }
    }

    #[test]
    fn infeasible_constant_fit_reports_residual() {
        let mut g = rng(54);
        let nodes = vec![(0.0, random_unitary(2, &mut g)), (2.0, random_unitary(2, &mut g))];
        let opts = SnipOptions { tol: 1e-9, max_iters: 150, group_delay: None };
        match snip_design(&nodes, 1, &opts) {
            Err(Error::DesignNotConverged { residual, tol }) => {
                assert!(residual > tol);
            }
            other => panic!("expected DesignNotConverged, got {other:?}"),
        }
    }

    #[test]
    fn validates_inputs() {
        let mut g = rng(55);
        let v = random_unitary(2, &mut g);
        // duplicate node frequencies
        assert!(snip_design(
            &[(0.5, v.clone()), (0.5, v.clone())],
            2,
            &SnipOptions::default()
        )
        .is_err());
        // non-unitary sample
        assert!(snip_design(&[(0.5, v.scale(2.0))], 1, &SnipOptions::default()).is_err());
        // order too small for the node count
        let nodes: Vec<(f64, CMat)> =
            [(0.1), (0.9), (1.7), (2.5)].iter().map(|&w| (w, v.clone())).collect();
        assert!(snip_design(&nodes, 2, &SnipOptions::default()).is_err());
        // order zero
        assert!(snip_design(&[(0.5, v)], 0, &SnipOptions::default()).is_err());
    }

    #[test]
    fn refine_continues_from_previous_solution() {
        let mut g = rng(56);
        let truth = random_stable_params(2, 3, 0.5, &mut g);
        let omegas = [-1.8, 0.2, 1.1, 2.9];
        let nodes: Vec<(f64, CMat)> = omegas
            .iter()
            .map(|&w| (w, frequency_response(&truth, w).unwrap()))
            .collect();
        let opts = SnipOptions { tol: 1e-4, ..Default::default() };
        let report = snip_design(&nodes, 3, &opts).unwrap();

        // warm start on the same nodes converges immediately
        let again = refine_design(&report.params, &nodes, &opts).unwrap();
        assert!(again.iterations <= 2, "warm start took {} iterations", again.iterations);
        assert!(again.residual <= 1e-4);
    }
}

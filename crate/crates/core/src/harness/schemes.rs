//! Per-scheme tracking state: an encoder tracker bank (receiver side,
//! sees the truth) and an independent decoder bank (transmitter side,
//! sees only the bits). Reconstruction reads the decoder bank alone, so
//! the scoring path cannot touch true precoders by construction.

use crate::baselines::{
    angle_delay_reconstruct, angle_delay_truncate, givens_decompose, givens_interpolate_grid,
    givens_reconstruct, AngleDelayPrecoder, GivensParams,
};
use crate::error::Result;
use crate::feedback::{
    bit_budget, decode_update, decode_update_real, encode_update, encode_update_real,
    AdaptiveTrackerState, ClipPolicy, RealTrackerState, Scheme, Tracker,
};
use crate::lattice::{frequency_response_grid, LatticeParams};
use crate::matcore::{polar_unitary, CMat};
use crate::snip::{refine_design, snip_design, SnipOptions};

/// Common interface the runner drives once per frame.
pub trait SchemeState {
    /// Per-frame feedback budget in bits.
    fn budget(&self) -> usize;

    /// Receiver side: derive this frame's truth from the aligned precoder
    /// grid, emit the sign bits, and feed them to the decoder bank.
    fn track(&mut self, truth_grid: &[CMat]) -> Result<Vec<bool>>;

    /// Transmitter side: rebuild the full precoder grid from decoder
    /// state only.
    fn reconstruct(&self, omegas: &[f64]) -> Result<Vec<CMat>>;

    /// Frobenius distance between true and tracked lattice parameters
    /// (reflections only); `None` for schemes without lattice parameters.
    fn kappa_error(&self) -> Option<f64>;

    /// Decoder tracker bank snapshot, in bit order (for transcripts).
    fn decoder_snapshot(&self) -> Vec<Tracker>;
}

pub struct LatticeScheme {
    m: usize,
    node_idx: Vec<usize>,
    node_omegas: Vec<f64>,
    opts: SnipOptions,
    truth: LatticeParams,
    enc: Vec<AdaptiveTrackerState>,
    dec: Vec<AdaptiveTrackerState>,
}

impl LatticeScheme {
    /// Bootstrap from the frame-0 grid: design the initial filter and hand
    /// both tracker banks the same unquantized state.
    #[allow(clippy::too_many_arguments)]
    pub fn bootstrap(
        truth_grid: &[CMat],
        node_idx: Vec<usize>,
        node_omegas: Vec<f64>,
        order: usize,
        design_tol: f64,
        initial_step: f64,
        sigma: f64,
        cold: bool,
    ) -> Result<Self> {
        let m = truth_grid[0].nrows();
        let opts = SnipOptions { tol: design_tol, ..Default::default() };
        let nodes: Vec<(f64, CMat)> = node_omegas
            .iter()
            .zip(node_idx.iter())
            .map(|(&w, &k)| (w, truth_grid[k].clone()))
            .collect();
        let design = snip_design(&nodes, order, &opts)?;
        let truth = design.params;

        // cold trackers start at zero reflections and an identity residue
        // instead of the frame-0 design
        let mut enc = Vec::with_capacity(order);
        for k in &truth.kappas {
            let init = if cold { CMat::zeros(m, m) } else { k.clone() };
            enc.push(AdaptiveTrackerState::new(
                init,
                initial_step,
                sigma,
                ClipPolicy::Spectral { margin: crate::feedback::DEFAULT_CLIP_MARGIN },
            )?);
        }
        let r_init = if cold { CMat::identity(m, m) } else { truth.residue.clone() };
        enc.push(AdaptiveTrackerState::new(
            r_init,
            initial_step,
            sigma,
            ClipPolicy::PolarUnitary,
        )?);
        let dec = enc.clone();
        Ok(Self { m, node_idx, node_omegas, opts, truth, enc, dec })
    }

    fn decoder_params(&self) -> LatticeParams {
        let n_k = self.dec.len() - 1;
        LatticeParams::new(
            self.dec[..n_k].iter().map(|t| t.estimate.clone()).collect(),
            self.dec[n_k].estimate.clone(),
        )
    }
}

impl SchemeState for LatticeScheme {
    fn budget(&self) -> usize {
        bit_budget(Scheme::Lattice, self.m, self.enc.len()).expect("validated")
    }

    fn track(&mut self, truth_grid: &[CMat]) -> Result<Vec<bool>> {
        let nodes: Vec<(f64, CMat)> = self
            .node_omegas
            .iter()
            .zip(self.node_idx.iter())
            .map(|(&w, &k)| (w, truth_grid[k].clone()))
            .collect();
        self.truth = refine_design(&self.truth, &nodes, &self.opts)?.params;

        let mut bits = Vec::with_capacity(self.budget());
        let truths: Vec<&CMat> =
            self.truth.kappas.iter().chain(std::iter::once(&self.truth.residue)).collect();
        for ((truth, enc), dec) in truths.into_iter().zip(&mut self.enc).zip(&mut self.dec) {
            let b = encode_update(truth, enc)?;
            decode_update(&b, dec)?;
            debug_assert_eq!(enc, dec);
            bits.extend(b);
        }
        Ok(bits)
    }

    fn reconstruct(&self, omegas: &[f64]) -> Result<Vec<CMat>> {
        frequency_response_grid(&self.decoder_params(), omegas)
    }

    fn kappa_error(&self) -> Option<f64> {
        let n_k = self.truth.kappas.len();
        let err: f64 = self
            .truth
            .kappas
            .iter()
            .zip(self.dec[..n_k].iter())
            .map(|(t, d)| (t - &d.estimate).norm_squared())
            .sum();
        Some(err.sqrt())
    }

    fn decoder_snapshot(&self) -> Vec<Tracker> {
        self.dec.iter().cloned().map(Tracker::Complex).collect()
    }
}

pub struct GeodesicScheme {
    m: usize,
    pilot_idx: Vec<usize>,
    enc: Vec<AdaptiveTrackerState>,
    dec: Vec<AdaptiveTrackerState>,
}

impl GeodesicScheme {
    pub fn bootstrap(
        truth_grid: &[CMat],
        pilot_idx: Vec<usize>,
        initial_step: f64,
        sigma: f64,
        cold: bool,
    ) -> Result<Self> {
        let m = truth_grid[0].nrows();
        let enc = pilot_idx
            .iter()
            .map(|&k| {
                let init = if cold { CMat::identity(m, m) } else { truth_grid[k].clone() };
                AdaptiveTrackerState::new(init, initial_step, sigma, ClipPolicy::None)
            })
            .collect::<Result<Vec<_>>>()?;
        let dec = enc.clone();
        Ok(Self { m, pilot_idx, enc, dec })
    }
}

impl SchemeState for GeodesicScheme {
    fn budget(&self) -> usize {
        bit_budget(Scheme::Geodesic, self.m, self.pilot_idx.len()).expect("validated")
    }

    fn track(&mut self, truth_grid: &[CMat]) -> Result<Vec<bool>> {
        let mut bits = Vec::with_capacity(self.budget());
        for ((&k, enc), dec) in self.pilot_idx.iter().zip(&mut self.enc).zip(&mut self.dec) {
            let b = encode_update(&truth_grid[k], enc)?;
            decode_update(&b, dec)?;
            debug_assert_eq!(enc, dec);
            bits.extend(b);
        }
        Ok(bits)
    }

    fn reconstruct(&self, omegas: &[f64]) -> Result<Vec<CMat>> {
        let n_fft = omegas.len();
        // tracked pilot estimates live off the unitary group; project back
        // before interpolating along geodesics
        let pilots: Vec<CMat> =
            self.dec.iter().map(|t| polar_unitary(&t.estimate)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(n_fft);
        let mut seg = 0usize;
        for k in 0..n_fft {
            while seg + 2 < self.pilot_idx.len() && k >= self.pilot_idx[seg + 1] {
                seg += 1;
            }
            let (k0, k1) = (self.pilot_idx[seg], self.pilot_idx[seg + 1]);
            let t = if k <= k0 {
                0.0
            } else if k >= k1 {
                1.0
            } else {
                (k - k0) as f64 / (k1 - k0) as f64
            };
            out.push(crate::baselines::geodesic_interpolate(&pilots[seg], &pilots[seg + 1], t)?);
        }
        Ok(out)
    }

    fn kappa_error(&self) -> Option<f64> {
        None
    }

    fn decoder_snapshot(&self) -> Vec<Tracker> {
        self.dec.iter().cloned().map(Tracker::Complex).collect()
    }
}

pub struct GivensScheme {
    m: usize,
    n_fft: usize,
    pilot_idx: Vec<usize>,
    enc: Vec<RealTrackerState>,
    dec: Vec<RealTrackerState>,
}

impl GivensScheme {
    pub fn bootstrap(
        truth_grid: &[CMat],
        pilot_idx: Vec<usize>,
        n_fft: usize,
        initial_step: f64,
        sigma: f64,
        cold: bool,
    ) -> Result<Self> {
        let m = truth_grid[0].nrows();
        let enc = pilot_idx
            .iter()
            .map(|&k| {
                let flat = if cold {
                    vec![0.0; m * m]
                } else {
                    givens_decompose(&truth_grid[k])?.flat()
                };
                RealTrackerState::new(flat, initial_step, sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        let dec = enc.clone();
        Ok(Self { m, n_fft, pilot_idx, enc, dec })
    }
}

impl SchemeState for GivensScheme {
    fn budget(&self) -> usize {
        bit_budget(Scheme::Givens, self.m, self.pilot_idx.len()).expect("validated")
    }

    fn track(&mut self, truth_grid: &[CMat]) -> Result<Vec<bool>> {
        let mut bits = Vec::with_capacity(self.budget());
        for ((&k, enc), dec) in self.pilot_idx.iter().zip(&mut self.enc).zip(&mut self.dec) {
            let truth = givens_decompose(&truth_grid[k])?.flat();
            let b = encode_update_real(&truth, enc)?;
            decode_update_real(&b, dec)?;
            debug_assert_eq!(enc, dec);
            bits.extend(b);
        }
        Ok(bits)
    }

    fn reconstruct(&self, omegas: &[f64]) -> Result<Vec<CMat>> {
        debug_assert_eq!(omegas.len(), self.n_fft);
        let params: Vec<GivensParams> = self
            .dec
            .iter()
            .map(|t| GivensParams::from_flat(self.m, &t.estimate))
            .collect::<Result<_>>()?;
        let grid = givens_interpolate_grid(&params, &self.pilot_idx, self.n_fft)?;
        Ok(grid.iter().map(givens_reconstruct).collect())
    }

    fn kappa_error(&self) -> Option<f64> {
        None
    }

    fn decoder_snapshot(&self) -> Vec<Tracker> {
        self.dec.iter().cloned().map(Tracker::Real).collect()
    }
}

pub struct AngleDelayScheme {
    m: usize,
    n_fft: usize,
    n_taps: usize,
    enc: Vec<AdaptiveTrackerState>,
    dec: Vec<AdaptiveTrackerState>,
}

impl AngleDelayScheme {
    pub fn bootstrap(
        truth_grid: &[CMat],
        n_taps: usize,
        initial_step: f64,
        sigma: f64,
        cold: bool,
    ) -> Result<Self> {
        let m = truth_grid[0].nrows();
        let ad = angle_delay_truncate(truth_grid, n_taps)?;
        let enc = ad
            .taps
            .iter()
            .map(|t| {
                let init = if cold { CMat::zeros(m, m) } else { t.clone() };
                AdaptiveTrackerState::new(init, initial_step, sigma, ClipPolicy::None)
            })
            .collect::<Result<Vec<_>>>()?;
        let dec = enc.clone();
        Ok(Self { m, n_fft: truth_grid.len(), n_taps, enc, dec })
    }
}

impl SchemeState for AngleDelayScheme {
    fn budget(&self) -> usize {
        bit_budget(Scheme::AngleDelay, self.m, self.n_taps).expect("validated")
    }

    fn track(&mut self, truth_grid: &[CMat]) -> Result<Vec<bool>> {
        let truth = angle_delay_truncate(truth_grid, self.n_taps)?;
        let mut bits = Vec::with_capacity(self.budget());
        for ((tap, enc), dec) in truth.taps.iter().zip(&mut self.enc).zip(&mut self.dec) {
            let b = encode_update(tap, enc)?;
            decode_update(&b, dec)?;
            debug_assert_eq!(enc, dec);
            bits.extend(b);
        }
        Ok(bits)
    }

    fn reconstruct(&self, _omegas: &[f64]) -> Result<Vec<CMat>> {
        let ad = AngleDelayPrecoder {
            taps: self.dec.iter().map(|t| t.estimate.clone()).collect(),
            n_fft: self.n_fft,
        };
        Ok(angle_delay_reconstruct(&ad))
    }

    fn kappa_error(&self) -> Option<f64> {
        None
    }

    fn decoder_snapshot(&self) -> Vec<Tracker> {
        self.dec.iter().cloned().map(Tracker::Complex).collect()
    }
}

/// The perfect-CSI reference: no feedback, reconstruction is the truth.
pub struct PerfectScheme {
    grid: Vec<CMat>,
}

impl PerfectScheme {
    pub fn bootstrap(truth_grid: &[CMat]) -> Self {
        Self { grid: truth_grid.to_vec() }
    }
}

impl SchemeState for PerfectScheme {
    fn budget(&self) -> usize {
        0
    }

    fn track(&mut self, truth_grid: &[CMat]) -> Result<Vec<bool>> {
        self.grid = truth_grid.to_vec();
        Ok(Vec::new())
    }

    fn reconstruct(&self, _omegas: &[f64]) -> Result<Vec<CMat>> {
        Ok(self.grid.clone())
    }

    fn kappa_error(&self) -> Option<f64> {
        None
    }

    fn decoder_snapshot(&self) -> Vec<Tracker> {
        Vec::new()
    }
}



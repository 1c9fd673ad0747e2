//! Per-subcarrier SVD precoders and zero-forcing achievable rates.
//!
//! The optimal precoder for a linear receiver is the matrix of right
//! singular vectors of the channel at that subcarrier. Rates use the ZF
//! receiver: `F = (gamma H_eq^H H_eq)^{-1}`, `r = sum_k log2(1 + 1/F_kk)`.

use crate::error::{Error, Result};
use crate::matcore::{self, C64, CMat};

/// Unitary precoder per subcarrier, in subcarrier order.
#[derive(Debug, Clone)]
pub struct PrecoderGrid {
    pub mats: Vec<CMat>,
}

impl PrecoderGrid {
    pub fn n_fft(&self) -> usize {
        self.mats.len()
    }
}

/// Rate-scoring parameters: linear per-stream SNR and stream count.
#[derive(Debug, Clone, Copy)]
pub struct RateConfig {
    pub gamma: f64,
    pub n_streams: usize,
}

impl RateConfig {
    pub fn from_snr_db(snr_db: f64, n_streams: usize) -> Self {
        Self { gamma: 10f64.powf(snr_db / 10.0), n_streams }
    }
}

/// Phase-canonicalized right singular vectors of each channel snapshot.
pub fn optimal_precoders(h: &[CMat]) -> Result<PrecoderGrid> {
    let mats = h
        .iter()
        .map(|hk| matcore::svd(hk).map(|d| d.v))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrecoderGrid { mats })
}

/// Re-represent `v` as the member of its per-column phase/order family
/// closest to `reference`: columns are matched greedily by inner-product
/// magnitude and rotated so each matched inner product is real positive.
///
/// ZF rates, flag distances, and spanned subspaces are invariant under
/// this; what changes is only the representative. Tracking loops need it
/// because the canonical SVD representative is discontinuous in time
/// (dominant-entry phase anchors hop and singular-value order swaps), and
/// a sign tracker chasing those jumps would never settle.
pub fn align_precoder(reference: &CMat, v: &CMat) -> CMat {
    let m = v.ncols();
    // all pairwise |reference_i^H v_j|, matched greedily, largest first
    let mut scores: Vec<(usize, usize, f64, C64)> = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let inner: C64 = reference
                .column(i)
                .iter()
                .zip(v.column(j).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            scores.push((i, j, inner.norm(), inner));
        }
    }
    scores.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal));
    let mut ref_used = vec![false; m];
    let mut cur_used = vec![false; m];
    let mut assign: Vec<(usize, usize, C64)> = Vec::with_capacity(m);
    for (i, j, mag, inner) in scores {
        if !ref_used[i] && !cur_used[j] {
            ref_used[i] = true;
            cur_used[j] = true;
            let phase = if mag > 1e-12 { inner / mag } else { C64::new(1.0, 0.0) };
            assign.push((i, j, phase));
        }
    }
    let mut out = CMat::zeros(v.nrows(), m);
    for (i, j, phase) in assign {
        // place column j at position i, de-rotated so ref_i^H out_i >= 0
        let rot = phase.conj();
        for r in 0..v.nrows() {
            out[(r, i)] = v[(r, j)] * rot;
        }
    }
    out
}

/// ZF achievable rate in bits/s/Hz for one (channel, precoder) pair.
pub fn zf_rate(h: &CMat, p: &CMat, cfg: &RateConfig) -> Result<f64> {
    if h.ncols() != p.nrows() {
        return Err(Error::InvalidInput(format!(
            "zf_rate: channel is {}x{} but precoder is {}x{}",
            h.nrows(),
            h.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    if !(cfg.gamma > 0.0) || !cfg.gamma.is_finite() {
        return Err(Error::InvalidInput("zf_rate: gamma must be positive and finite".into()));
    }
    let h_eq = h * p;
    let gram = (h_eq.adjoint() * &h_eq).scale(cfg.gamma);
    let f = gram
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("H_eq^H H_eq is singular".into()))?;
    let n = cfg.n_streams.min(f.nrows());
    let mut rate = 0.0;
    for k in 0..n {
        let fkk = f[(k, k)].re;
        if !(fkk.is_finite() && fkk > 0.0) {
            return Err(Error::RankDeficient(format!("F[{k},{k}] = {fkk} not positive")));
        }
        rate += (1.0 + 1.0 / fkk).log2();
    }
    Ok(rate)
}

/// Mean ZF rate over a subcarrier grid. Rank-deficient subcarriers score
/// zero (and are logged) instead of aborting the run.
pub fn grid_rate(h: &[CMat], p: &[CMat], cfg: &RateConfig) -> Result<f64> {
    if h.len() != p.len() {
        return Err(Error::InvalidInput(format!(
            "grid_rate: {} channels vs {} precoders",
            h.len(),
            p.len()
        )));
    }
    if h.is_empty() {
        return Err(Error::InvalidInput("grid_rate: empty grid".into()));
    }
    let mut acc = 0.0;
    for (k, (hk, pk)) in h.iter().zip(p.iter()).enumerate() {
        match zf_rate(hk, pk, cfg) {
            Ok(r) => acc += r,
            Err(Error::RankDeficient(msg)) => {
                log::warn!("subcarrier {k}: rank deficient ({msg}); scoring 0");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(acc / h.len() as f64)
}

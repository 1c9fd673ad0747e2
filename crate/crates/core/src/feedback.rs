//! One-bit-per-dimension adaptive tracking of matrix and scalar
//! parameters, plus feedback-bit accounting and replayable transcripts.
//!
//! Per tracked real dimension (each complex entry counts twice) the
//! encoder sends `bit = sign(truth - estimate)`; both ends then apply the
//! identical recursion
//!
//! ```text
//!   estimate += bit * step
//!   step     *= sigma   if bit == previous bit, else step /= sigma
//! ```
//!
//! so the decoder's state is bit-identical to the encoder's at every
//! frame — the decoder literally runs the same `advance` code on the same
//! bits. Reflection-matrix targets are spectrally clipped after every
//! update so the lattice stability conditions survive quantization;
//! unitary targets are polar-projected back onto the unitary group.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::clip_contraction;
use crate::matcore::{polar_unitary, C64, CMat};
use crate::textfmt::{
    fmt_f64, parse_f64, read_cmat_block, read_f64_row, read_real_block, write_cmat_block,
    write_real_block, LineReader,
};

/// Default spectral-clip margin for reflection-matrix targets.
pub const DEFAULT_CLIP_MARGIN: f64 = 1e-3;
/// Default step adaptation factor.
pub const DEFAULT_SIGMA: f64 = 1.5;
/// Default initial step per tracked real dimension.
pub const DEFAULT_INITIAL_STEP: f64 = 0.05;

/// What keeps a tracked matrix estimate inside its feasible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClipPolicy {
    /// Free matrix (geodesic pilot precoders, angle-delay taps).
    None,
    /// Reflection matrix: rescale so `sigma_max <= 1 - margin`.
    Spectral { margin: f64 },
    /// Unitary matrix (lattice residue): nearest-unitary projection.
    PolarUnitary,
}

/// Tracker over a complex matrix: independent sign/step state per entry
/// and per real/imaginary part (two bits per complex entry per update).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveTrackerState {
    pub estimate: CMat,
    step_re: DMatrix<f64>,
    step_im: DMatrix<f64>,
    sign_re: DMatrix<f64>,
    sign_im: DMatrix<f64>,
    pub sigma: f64,
    pub policy: ClipPolicy,
}

impl AdaptiveTrackerState {
    /// Start tracking from an exact initial estimate. Signs start at +1,
    /// matching the sign(0) = +1 tie rule.
    pub fn new(initial: CMat, initial_step: f64, sigma: f64, policy: ClipPolicy) -> Result<Self> {
        if !(initial_step > 0.0) || !initial_step.is_finite() {
            return Err(Error::InvalidInput("initial step must be positive".into()));
        }
        if !(sigma > 1.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput("sigma must exceed 1".into()));
        }
        let (r, c) = initial.shape();
        Ok(Self {
            estimate: initial,
            step_re: DMatrix::from_element(r, c, initial_step),
            step_im: DMatrix::from_element(r, c, initial_step),
            sign_re: DMatrix::from_element(r, c, 1.0),
            sign_im: DMatrix::from_element(r, c, 1.0),
            sigma,
            policy,
        })
    }

    /// Bits consumed/produced per update: 2 per complex entry.
    pub fn bits_per_update(&self) -> usize {
        2 * self.estimate.nrows() * self.estimate.ncols()
    }

    /// Apply one update from its bit string; shared verbatim by encoder
    /// and decoder. Bit order: row-major entries, real part then
    /// imaginary part.
    fn advance(&mut self, bits: &[bool]) -> Result<()> {
        if bits.len() != self.bits_per_update() {
            return Err(Error::InvalidInput(format!(
                "expected {} bits, got {}",
                self.bits_per_update(),
                bits.len()
            )));
        }
        let (rows, cols) = self.estimate.shape();
        let mut idx = 0;
        for i in 0..rows {
            for j in 0..cols {
                let (bre, bim) = (bits[idx], bits[idx + 1]);
                idx += 2;
                let e = self.estimate[(i, j)];
                let re = step_part(
                    e.re,
                    bre,
                    &mut self.step_re[(i, j)],
                    &mut self.sign_re[(i, j)],
                    self.sigma,
                );
                let im = step_part(
                    e.im,
                    bim,
                    &mut self.step_im[(i, j)],
                    &mut self.sign_im[(i, j)],
                    self.sigma,
                );
                self.estimate[(i, j)] = C64::new(re, im);
            }
        }
        match self.policy {
            ClipPolicy::None => {}
            ClipPolicy::Spectral { margin } => {
                self.estimate = clip_contraction(&self.estimate, margin);
            }
            ClipPolicy::PolarUnitary => {
                self.estimate = polar_unitary(&self.estimate)?;
            }
        }
        Ok(())
    }
}

/// One scalar part: move by the current step, then adapt the step for the
/// next update.
fn step_part(value: f64, bit: bool, step: &mut f64, last_sign: &mut f64, sigma: f64) -> f64 {
    let sign = if bit { 1.0 } else { -1.0 };
    let moved = value + sign * *step;
    *step = if sign == *last_sign { *step * sigma } else { *step / sigma };
    *last_sign = sign;
    moved
}

/// Encoder side: derive the sign bits against `truth`, advance the state,
/// return the bits to feed back. `sign(0) = +1`.
pub fn encode_update(truth: &CMat, state: &mut AdaptiveTrackerState) -> Result<Vec<bool>> {
    if truth.shape() != state.estimate.shape() {
        return Err(Error::InvalidInput(format!(
            "truth is {:?}, tracker is {:?}",
            truth.shape(),
            state.estimate.shape()
        )));
    }
    let (rows, cols) = truth.shape();
    let mut bits = Vec::with_capacity(state.bits_per_update());
    for i in 0..rows {
        for j in 0..cols {
            let d = truth[(i, j)] - state.estimate[(i, j)];
            bits.push(d.re >= 0.0);
            bits.push(d.im >= 0.0);
        }
    }
    state.advance(&bits)?;
    Ok(bits)
}

/// Decoder side: identical recursion driven by the received bits.
pub fn decode_update(bits: &[bool], state: &mut AdaptiveTrackerState) -> Result<()> {
    state.advance(bits)
}

/// Tracker over a vector of real scalars (one bit per scalar): the Givens
/// parameter recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTrackerState {
    pub estimate: Vec<f64>,
    step: Vec<f64>,
    sign: Vec<f64>,
    pub sigma: f64,
}

impl RealTrackerState {
    pub fn new(initial: Vec<f64>, initial_step: f64, sigma: f64) -> Result<Self> {
        if !(initial_step > 0.0) || !initial_step.is_finite() {
            return Err(Error::InvalidInput("initial step must be positive".into()));
        }
        if !(sigma > 1.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput("sigma must exceed 1".into()));
        }
        let n = initial.len();
        Ok(Self { estimate: initial, step: vec![initial_step; n], sign: vec![1.0; n], sigma })
    }

    pub fn bits_per_update(&self) -> usize {
        self.estimate.len()
    }

    fn advance(&mut self, bits: &[bool]) -> Result<()> {
        if bits.len() != self.estimate.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} bits, got {}",
                self.estimate.len(),
                bits.len()
            )));
        }
        for (k, &bit) in bits.iter().enumerate() {
            self.estimate[k] =
                step_part(self.estimate[k], bit, &mut self.step[k], &mut self.sign[k], self.sigma);
        }
        Ok(())
    }
}

pub fn encode_update_real(truth: &[f64], state: &mut RealTrackerState) -> Result<Vec<bool>> {
    if truth.len() != state.estimate.len() {
        return Err(Error::InvalidInput("truth length mismatch".into()));
    }
    let bits: Vec<bool> =
        truth.iter().zip(state.estimate.iter()).map(|(t, e)| t - e >= 0.0).collect();
    state.advance(&bits)?;
    Ok(bits)
}

pub fn decode_update_real(bits: &[bool], state: &mut RealTrackerState) -> Result<()> {
    state.advance(bits)
}

/// Feedback schemes with a defined per-frame bit budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Geodesic,
    Givens,
    Lattice,
    AngleDelay,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::Geodesic => "geodesic",
            Scheme::Givens => "givens",
            Scheme::Lattice => "lattice",
            Scheme::AngleDelay => "angle_delay",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geodesic" => Ok(Scheme::Geodesic),
            "givens" => Ok(Scheme::Givens),
            "lattice" => Ok(Scheme::Lattice),
            "angle_delay" => Ok(Scheme::AngleDelay),
            other => Err(Error::InvalidInput(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Sign bits sent per frame.
///
/// * geodesic: 2 m^2 per pilot (re+im of each pilot precoder entry)
/// * givens: m^2 per pilot (one bit per real rotation parameter)
/// * lattice: 2 m^2 per tracked matrix (order = reflections plus residue)
/// * angle-delay: 2 m^2 per kept tap
pub fn bit_budget(scheme: Scheme, m: usize, pilots_or_order: usize) -> Result<usize> {
    if m == 0 || pilots_or_order == 0 {
        return Err(Error::InvalidInput("bit_budget: m and count must be positive".into()));
    }
    Ok(match scheme {
        Scheme::Geodesic | Scheme::Lattice | Scheme::AngleDelay => 2 * m * m * pilots_or_order,
        Scheme::Givens => m * m * pilots_or_order,
    })
}

/// MSB-first hex packing of a bit string (zero-padded to a nibble).
pub fn bits_to_hex(bits: &[bool]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(4) {
        let mut nibble = 0u8;
        for (k, &b) in chunk.iter().enumerate() {
            if b {
                nibble |= 1 << (3 - k);
            }
        }
        out.push(char::from_digit(nibble as u32, 16).unwrap());
    }
    out
}

/// Inverse of [`bits_to_hex`] given the original bit count.
pub fn hex_to_bits(hex: &str, n_bits: usize) -> Result<Vec<bool>> {
    if hex.len() != n_bits.div_ceil(4) {
        return Err(Error::Parse(format!(
            "hex length {} does not match {} bits",
            hex.len(),
            n_bits
        )));
    }
    let mut bits = Vec::with_capacity(n_bits);
    for ch in hex.chars() {
        let nibble =
            ch.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit '{ch}'")))? as u8;
        for k in 0..4 {
            bits.push(nibble & (1 << (3 - k)) != 0);
        }
    }
    for &b in &bits[n_bits..] {
        if b {
            return Err(Error::Parse("nonzero padding bits".into()));
        }
    }
    bits.truncate(n_bits);
    Ok(bits)
}

/// A tracker of either kind, in scheme update order.
#[derive(Debug, Clone, PartialEq)]
pub enum Tracker {
    Complex(AdaptiveTrackerState),
    Real(RealTrackerState),
}

impl Tracker {
    pub fn bits_per_update(&self) -> usize {
        match self {
            Tracker::Complex(t) => t.bits_per_update(),
            Tracker::Real(t) => t.bits_per_update(),
        }
    }

    pub fn decode(&mut self, bits: &[bool]) -> Result<()> {
        match self {
            Tracker::Complex(t) => decode_update(bits, t),
            Tracker::Real(t) => decode_update_real(bits, t),
        }
    }

    fn estimate_bits(&self) -> Vec<u64> {
        match self {
            Tracker::Complex(t) => t
                .estimate
                .row_iter()
                .flat_map(|r| {
                    r.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect::<Vec<_>>()
                })
                .collect(),
            Tracker::Real(t) => t.estimate.iter().map(|x| x.to_bits()).collect(),
        }
    }
}

/// A feedback session: initial decoder state, the per-frame bit strings,
/// and the final estimates for verification. Replaying the frames from
/// the initial state must land bit-exactly on the finals.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub scheme: String,
    pub trackers: Vec<Tracker>,
    pub frames: Vec<(u64, Vec<bool>)>,
    pub finals: Vec<Tracker>,
}

impl Transcript {
    pub fn bits_per_frame(&self) -> usize {
        self.trackers.iter().map(|t| t.bits_per_update()).sum()
    }

    /// Run the decoder over all frames and verify the final estimates
    /// match bit-for-bit.
    pub fn replay(&self) -> Result<()> {
        let mut trackers = self.trackers.clone();
        let per_frame = self.bits_per_frame();
        for (idx, bits) in &self.frames {
            if bits.len() != per_frame {
                return Err(Error::Parse(format!(
                    "frame {idx}: {} bits, expected {per_frame}",
                    bits.len()
                )));
            }
            let mut offset = 0;
            for t in trackers.iter_mut() {
                let n = t.bits_per_update();
                t.decode(&bits[offset..offset + n])?;
                offset += n;
            }
        }
        if trackers.len() != self.finals.len() {
            return Err(Error::Parse("final tracker count mismatch".into()));
        }
        for (k, (got, want)) in trackers.iter().zip(self.finals.iter()).enumerate() {
            if got.estimate_bits() != want.estimate_bits() {
                return Err(Error::NumericalInstability(format!(
                    "replay diverged: tracker {k} final estimate differs"
                )));
            }
        }
        Ok(())
    }
}

fn write_tracker(w: &mut impl Write, t: &Tracker) -> std::io::Result<()> {
    match t {
        Tracker::Complex(t) => {
            let policy = match t.policy {
                ClipPolicy::None => "none".to_string(),
                ClipPolicy::Spectral { margin } => format!("spectral {}", fmt_f64(margin)),
                ClipPolicy::PolarUnitary => "polar".to_string(),
            };
            writeln!(
                w,
                "tracker complex {} {} {} {}",
                t.estimate.nrows(),
                t.estimate.ncols(),
                fmt_f64(t.sigma),
                policy
            )?;
            write_cmat_block(w, &t.estimate)?;
            write_real_block(w, &t.step_re)?;
            write_real_block(w, &t.step_im)?;
            write_real_block(w, &t.sign_re)?;
            write_real_block(w, &t.sign_im)?;
        }
        Tracker::Real(t) => {
            writeln!(w, "tracker real {} {}", t.estimate.len(), fmt_f64(t.sigma))?;
            for chunk in [&t.estimate, &t.step, &t.sign] {
                let row: Vec<String> = chunk.iter().map(|x| fmt_f64(*x)).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
    }
    Ok(())
}

/// Write the versioned transcript record.
pub fn write_transcript(w: &mut impl Write, t: &Transcript) -> std::io::Result<()> {
    writeln!(w, "transcript v1")?;
    writeln!(w, "scheme {}", t.scheme)?;
    writeln!(w, "trackers {}", t.trackers.len())?;
    for tr in &t.trackers {
        write_tracker(w, tr)?;
    }
    writeln!(w, "frames {}", t.frames.len())?;
    for (idx, bits) in &t.frames {
        writeln!(w, "frame {} {} {}", idx, t.scheme, bits_to_hex(bits))?;
    }
    writeln!(w, "finals")?;
    for tr in &t.finals {
        write_tracker(w, tr)?;
    }
    writeln!(w, "end")?;
    Ok(())
}

fn read_tracker<R: BufRead>(r: &mut LineReader<R>) -> Result<Tracker> {
    let header = r.next()?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    match parts.as_slice() {
        ["tracker", "complex", rows, cols, sigma, rest @ ..] => {
            let rows: usize = rows.parse().map_err(|_| r.err("bad rows"))?;
            let cols: usize = cols.parse().map_err(|_| r.err("bad cols"))?;
            let sigma = parse_f64(sigma).map_err(|e| r.err(e))?;
            let policy = match rest {
                ["none"] => ClipPolicy::None,
                ["polar"] => ClipPolicy::PolarUnitary,
                ["spectral", margin] => {
                    ClipPolicy::Spectral { margin: parse_f64(margin).map_err(|e| r.err(e))? }
                }
                _ => return Err(r.err("bad clip policy")),
            };
            let estimate = read_cmat_block(r, rows, cols)?;
            let step_re = read_real_block(r, rows, cols)?;
            let step_im = read_real_block(r, rows, cols)?;
            let sign_re = read_real_block(r, rows, cols)?;
            let sign_im = read_real_block(r, rows, cols)?;
            Ok(Tracker::Complex(AdaptiveTrackerState {
                estimate,
                step_re,
                step_im,
                sign_re,
                sign_im,
                sigma,
                policy,
            }))
        }
        ["tracker", "real", len, sigma] => {
            let len: usize = len.parse().map_err(|_| r.err("bad length"))?;
            let sigma = parse_f64(sigma).map_err(|e| r.err(e))?;
            let estimate = read_f64_row(r, len)?;
            let step = read_f64_row(r, len)?;
            let sign = read_f64_row(r, len)?;
            Ok(Tracker::Real(RealTrackerState { estimate, step, sign, sigma }))
        }
        _ => Err(r.err("expected tracker header")),
    }
}

/// Parse a transcript written by [`write_transcript`].
pub fn read_transcript(reader: impl BufRead) -> Result<Transcript> {
    let mut r = LineReader::new(reader);
    r.expect("transcript v1")?;
    let scheme = r.keyed("scheme")?;
    let n_trackers: usize =
        r.keyed("trackers")?.parse().map_err(|_| r.err("bad tracker count"))?;
    let trackers: Vec<Tracker> =
        (0..n_trackers).map(|_| read_tracker(&mut r)).collect::<Result<_>>()?;
    let per_frame: usize = trackers.iter().map(|t| t.bits_per_update()).sum();

    let n_frames: usize =
        r.keyed("frames")?.parse().map_err(|_| r.err("bad frame count"))?;
    let mut frames = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        let line = r.next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [tag, idx, frame_scheme, hex] = parts.as_slice() else {
            return Err(r.err("expected 'frame <idx> <scheme> <hex>'"));
        };
        if *tag != "frame" || *frame_scheme != scheme {
            return Err(r.err("bad frame record"));
        }
        let idx: u64 = idx.parse().map_err(|_| r.err("bad frame index"))?;
        let bits = hex_to_bits(hex, per_frame).map_err(|e| r.err(e))?;
        frames.push((idx, bits));
    }
    r.expect("finals")?;
    let finals: Vec<Tracker> =
        (0..n_trackers).map(|_| read_tracker(&mut r)).collect::<Result<_>>()?;
    r.expect("end")?;
    Ok(Transcript { scheme, trackers, frames, finals })
}

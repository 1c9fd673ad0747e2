//! Tapped-delay MIMO channel: generation from a power-delay profile,
//! AR(1) temporal evolution with a Jakes-model coefficient, and frequency
//! response on the subcarrier grid.
//!
//! The channel at time t is a set of matrix taps `H_t[l]` with real delays
//! `tau_l` (in samples, fractional allowed); its frequency response is
//! `H_t(e^{jw}) = sum_l H_t[l] e^{-j w tau_l}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{all_finite, random_gaussian, C64, CMat};

/// Speed of light in free space, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Power-delay profile: powers in dB normalized to the first component,
/// delays in nanoseconds, strictly increasing, first entry zero for both.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub powers_db: Vec<f64>,
    pub delays_ns: Vec<f64>,
}

impl PowerDelayProfile {
    pub fn new(powers_db: Vec<f64>, delays_ns: Vec<f64>) -> Result<Self> {
        let pdp = Self { powers_db, delays_ns };
        pdp.validate()?;
        Ok(pdp)
    }

    /// Measurement-derived 28 GHz mmW profile used as the default channel.
    pub fn default_mmw() -> Self {
        Self {
            powers_db: vec![0.0, -112.0, -132.0, -142.0, -153.0],
            delays_ns: vec![0.0, 381.0, 407.0, 1433.0, 1500.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.powers_db.is_empty() {
            return Err(Error::InvalidInput("empty power-delay profile".into()));
        }
        if self.powers_db.len() != self.delays_ns.len() {
            return Err(Error::InvalidInput(
                "power-delay profile: powers and delays differ in length".into(),
            ));
        }
        if self.powers_db[0] != 0.0 || self.delays_ns[0] != 0.0 {
            return Err(Error::InvalidInput(
                "power-delay profile must be normalized to the first component".into(),
            ));
        }
        if self.delays_ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("delays must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Linear amplitude per tap: `10^(p_dB / 20)`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.powers_db.iter().map(|p| 10f64.powf(p / 20.0)).collect()
    }

    pub fn len(&self) -> usize {
        self.powers_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers_db.is_empty()
    }
}

/// Time-domain MIMO channel: one m-by-m matrix per tap plus per-tap delays
/// in samples. `amplitudes` keeps the nominal per-tap scale so AR(1)
/// innovations preserve the profile.
#[derive(Debug, Clone)]
pub struct TappedChannel {
    pub taps: Vec<CMat>,
    pub delays: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub time_index: u64,
}

impl TappedChannel {
    pub fn dim(&self) -> usize {
        self.taps.first().map_or(0, |t| t.nrows())
    }
}

/// Mobility parameters that set the AR(1) coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerParams {
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    pub symbol_s: f64,
}

/// Draw a fresh channel from a power-delay profile.
///
/// Tap `l` has iid circular complex Gaussian entries with standard
/// deviation `10^(p_l/20)`; delays are converted to samples via the channel
/// bandwidth (`tau_l = delay_ns * 1e-9 * bandwidth`), fractional values
/// kept. Entries are drawn tap-by-tap, row-major, so a fixed RNG seed
/// reproduces the channel bit-exactly.
pub fn pdp_to_taps<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    m: usize,
    bandwidth_hz: f64,
    rng: &mut R,
) -> Result<TappedChannel> {
    pdp.validate()?;
    if m == 0 {
        return Err(Error::InvalidInput("pdp_to_taps: m must be at least 1".into()));
    }
    if !(bandwidth_hz > 0.0) {
        return Err(Error::InvalidInput("pdp_to_taps: bandwidth must be positive".into()));
    }
    let amplitudes = pdp.amplitudes();
    let taps = amplitudes
        .iter()
        .map(|&a| random_gaussian(m, m, rng).scale(a))
        .collect();
    let delays = pdp.delays_ns.iter().map(|d| d * 1e-9 * bandwidth_hz).collect();
    Ok(TappedChannel { taps, delays, amplitudes, time_index: 0 })
}

/// `H(e^{jw}) = sum_l H[l] e^{-j w tau_l}` for `w` in `(-pi, pi]`.
pub fn freq_response(ch: &TappedChannel, omega: f64) -> CMat {
    let m = ch.dim();
    let mut h = CMat::zeros(m, m);
    for (tap, &tau) in ch.taps.iter().zip(ch.delays.iter()) {
        let rot = C64::from_polar(1.0, -omega * tau);
        h += tap.scale_complex(rot);
    }
    h
}

trait ScaleComplex {
    fn scale_complex(&self, z: C64) -> CMat;
}

impl ScaleComplex for CMat {
    fn scale_complex(&self, z: C64) -> CMat {
        self.map(|x| x * z)
    }
}

/// AR(1) coefficient `alpha = J_0(2 pi f_d T_s)` with `f_d = (v/c) F_c`.
///
/// The argument must stay below the first Bessel zero so that the
/// coefficient lies in `(0, 1]`.
pub fn doppler_alpha(p: &DopplerParams) -> Result<f64> {
    if p.speed_kmh < 0.0 || p.carrier_hz < 0.0 || p.symbol_s < 0.0 {
        return Err(Error::InvalidInput("doppler parameters must be nonnegative".into()));
    }
    let v = p.speed_kmh / 3.6;
    let f_d = v / SPEED_OF_LIGHT * p.carrier_hz;
    let x = 2.0 * std::f64::consts::PI * f_d * p.symbol_s;
    const FIRST_J0_ZERO: f64 = 2.404825557695773;
    if x >= FIRST_J0_ZERO {
        return Err(Error::AlphaOutOfRange(format!(
            "2*pi*f_d*T_s = {x:.6} reaches the first Bessel zero; alpha would leave (0,1)"
        )));
    }
    Ok(bessel_j0(x))
}

/// `J_0` by its power series, summed until terms fall below 1e-18.
fn bessel_j0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..200 {
        term *= -q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// One AR(1) step: per entry `h_t = alpha h_{t-1} + sqrt(1-alpha^2) w`,
/// with the innovation scaled to the tap's nominal amplitude so the
/// per-tap power profile is stationary. Delays are unchanged and the time
/// index advances by one.
pub fn evolve_ar1<R: Rng + ?Sized>(
    ch: &TappedChannel,
    alpha: f64,
    rng: &mut R,
) -> Result<TappedChannel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
    }
    if ch.taps.iter().any(|t| !all_finite(t)) {
        return Err(Error::InvalidInput("evolve_ar1: non-finite channel taps".into()));
    }
    let m = ch.dim();
    let innov_scale = (1.0 - alpha * alpha).sqrt();
    let taps = ch
        .taps
        .iter()
        .zip(ch.amplitudes.iter())
        .map(|(tap, &a)| tap.scale(alpha) + random_gaussian(m, m, rng).scale(a * innov_scale))
        .collect();
    Ok(TappedChannel {
        taps,
        delays: ch.delays.clone(),
        amplitudes: ch.amplitudes.clone(),
        time_index: ch.time_index + 1,
    })
}

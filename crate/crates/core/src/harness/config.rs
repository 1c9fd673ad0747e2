//! Experiment configuration: TOML-backed, strict about unknown keys.

use serde::Deserialize;

use crate::channel::PowerDelayProfile;
use crate::error::{Error, Result};

/// How tracker estimates start at frame 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    /// Unquantized frame-0 design conveyed out of band: trackers start
    /// exactly on the truth, so the run measures steady-state tracking.
    #[default]
    Design,
    /// Cold trackers (zero reflections, identity-like unitaries): the run
    /// shows the adaptation transient settling onto the truth.
    Cold,
}

/// Which reconstruction schemes a run compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Perfect,
    Lattice,
    Geodesic,
    Givens,
    AngleDelay,
}

impl SchemeKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SchemeKind::Perfect => "perfect",
            SchemeKind::Lattice => "lattice",
            SchemeKind::Geodesic => "geodesic",
            SchemeKind::Givens => "givens",
            SchemeKind::AngleDelay => "angle_delay",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdpConfig {
    pub powers_db: Vec<f64>,
    pub delays_ns: Vec<f64>,
}

impl Default for PdpConfig {
    fn default() -> Self {
        let pdp = PowerDelayProfile::default_mmw();
        Self { powers_db: pdp.powers_db, delays_ns: pdp.delays_ns }
    }
}

/// Full experiment description. Defaults give the published mmW profile
/// with a 4096-subcarrier grid; desk-scale runs shrink `n_fft` in the
/// config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub m: usize,
    #[serde(default = "default_n_fft")]
    pub n_fft: usize,
    #[serde(default = "default_n_pilots")]
    pub n_pilots: usize,
    #[serde(default = "default_lattice_order")]
    pub lattice_order: usize,
    #[serde(default)]
    pub pdp: PdpConfig,
    /// Channel bandwidth used to map profile delays (ns) to samples.
    /// The published profile does not state it; 400 MHz is this
    /// repository's documented assumption.
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_speeds")]
    pub speed_kmh: Vec<f64>,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default = "default_symbol")]
    pub symbol_s: f64,
    #[serde(default = "default_snr_grid")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_n_frames")]
    pub n_frames: usize,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeKind>,
    /// Step adaptation factor of the 1-bit trackers; tune per speed.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Initial tracker step per real dimension.
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    /// Taps kept by the angle-delay baseline; defaults to `n_pilots`.
    #[serde(default)]
    pub angle_delay_taps: Option<usize>,
    /// Node residual target for the lattice design/refits.
    #[serde(default = "default_design_tol")]
    pub design_tol: f64,
    /// Tracker initialization at frame 0.
    #[serde(default)]
    pub bootstrap: Bootstrap,
}

fn default_n_fft() -> usize {
    4096
}
fn default_n_pilots() -> usize {
    4
}
fn default_lattice_order() -> usize {
    3
}
fn default_bandwidth() -> f64 {
    400e6
}
fn default_speeds() -> Vec<f64> {
    vec![10.0]
}
fn default_carrier() -> f64 {
    28e9
}
fn default_symbol() -> f64 {
    75e-6
}
fn default_snr_grid() -> Vec<f64> {
    vec![0.0, 5.0, 10.0, 15.0, 20.0]
}
fn default_n_frames() -> usize {
    60
}
fn default_n_seeds() -> usize {
    20
}
fn default_schemes() -> Vec<SchemeKind> {
    vec![
        SchemeKind::Perfect,
        SchemeKind::Lattice,
        SchemeKind::Geodesic,
        SchemeKind::Givens,
        SchemeKind::AngleDelay,
    ]
}
fn default_sigma() -> f64 {
    crate::feedback::DEFAULT_SIGMA
}
fn default_initial_step() -> f64 {
    crate::feedback::DEFAULT_INITIAL_STEP
}
fn default_design_tol() -> f64 {
    crate::snip::DEFAULT_TOL
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pdp(&self) -> Result<PowerDelayProfile> {
        PowerDelayProfile::new(self.pdp.powers_db.clone(), self.pdp.delays_ns.clone())
    }

    pub fn angle_delay_taps(&self) -> usize {
        self.angle_delay_taps.unwrap_or(self.n_pilots)
    }

    /// Interpolation nodes used by the lattice design: one more than the
    /// filter order, spread over the grid like the pilot set.
    pub fn lattice_nodes(&self) -> usize {
        self.lattice_order + 1
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(format!("config: {msg}")));
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if self.n_fft == 0 {
            return fail("n_fft must be at least 1".into());
        }
        if self.n_pilots == 0 || self.n_pilots > self.n_fft {
            return fail(format!("n_pilots {} outside [1, n_fft]", self.n_pilots));
        }
        if self.lattice_order == 0 {
            return fail("lattice_order must be at least 1".into());
        }
        if self.lattice_nodes() > self.n_fft {
            return fail(format!(
                "lattice design needs {} nodes but the grid has {}",
                self.lattice_nodes(),
                self.n_fft
            ));
        }
        if self.schemes.is_empty() {
            return fail("schemes must be nonempty".into());
        }
        let mut seen = Vec::new();
        for s in &self.schemes {
            if seen.contains(s) {
                return fail(format!("duplicate scheme '{}'", s.tag()));
            }
            seen.push(*s);
        }
        let needs_pilot_pair = self.schemes.iter().any(|s| {
            matches!(s, SchemeKind::Geodesic | SchemeKind::Givens)
        });
        if needs_pilot_pair && self.n_pilots < 2 {
            return fail("geodesic/givens interpolation needs at least 2 pilots".into());
        }
        if self.speed_kmh.is_empty() || self.snr_db.is_empty() {
            return fail("speed_kmh and snr_db must be nonempty".into());
        }
        if self.n_frames == 0 || self.n_seeds == 0 {
            return fail("n_frames and n_seeds must be at least 1".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return fail("bandwidth_hz must be positive".into());
        }
        if !(self.sigma > 1.0) {
            return fail("sigma must exceed 1".into());
        }
        if !(self.initial_step > 0.0) {
            return fail("initial_step must be positive".into());
        }
        if !(self.design_tol > 0.0) {
            return fail("design_tol must be positive".into());
        }
        let taps = self.angle_delay_taps();
        if taps == 0 || taps > self.n_fft {
            return fail(format!("angle_delay_taps {taps} outside [1, n_fft]"));
        }
        self.pdp()?;
        Ok(())
    }

    /// Switch to the published full-scale profile for this MIMO size:
    /// 4096 subcarriers and the (pilots, lattice order) pairing of the
    /// simulation-parameter table. Sizes outside the table keep their
    /// configured pilots/order.
    pub fn apply_full_scale(&mut self) {
        self.n_fft = 4096;
        let pairing = match self.m {
            4 => Some((4, 3)),
            8 => Some((4, 5)),
            12 => Some((8, 7)),
            15 => Some((8, 7)),
            _ => None,
        };
        if let Some((pilots, order)) = pairing {
            self.n_pilots = pilots;
            self.lattice_order = order;
        }
    }
}

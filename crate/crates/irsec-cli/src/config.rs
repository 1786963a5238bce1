//! Experiment configuration: JSON parsing with strict keys, defaults
//! matching the reference deployment, validation, and the mapping onto
//! library parameter types.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use irsec::ao::AoOptions;
use irsec::chansim::{dbm_to_watt, Placement, SimParams};
use irsec::gda::{DescendMode, GdaOptions, GradientForm};
use irsec::game::DEFAULT_STRATEGY_CAP;
use irsec::model::PhaseDomain;

use crate::CliError;

// ---------------------------------------------------------------------------
// Document structure
// ---------------------------------------------------------------------------

/// One experiment, as read from a JSON document. Every field has a
/// default, so `{}` is a complete configuration; unknown keys are errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub dimensions: Dimensions,
    pub radio: Radio,
    pub pathloss: Pathloss,
    pub placement: PlacementConfig,
    pub domains: Domains,
    pub seed: u64,
    /// Which solvers `run-all` executes.
    pub solver: SolverChoice,
    pub output_dir: PathBuf,
    pub ao: AoParams,
    pub gda: GdaParams,
    pub game: GameParams,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dimensions: Dimensions::default(),
            radio: Radio::default(),
            pathloss: Pathloss::default(),
            placement: PlacementConfig::default(),
            domains: Domains::default(),
            seed: 1,
            solver: SolverChoice::All,
            output_dir: PathBuf::from("out"),
            ao: AoParams::default(),
            gda: GdaParams::default(),
            game: GameParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dimensions {
    /// Transmit antennas at Alice.
    pub tx_antennas: usize,
    /// Elements on the legitimate surface.
    pub bob_elements: usize,
    /// Elements on the adversarial surface.
    pub eve_elements: usize,
}

impl Default for Dimensions {
    fn default() -> Self {
        Self {
            tx_antennas: 3,
            bob_elements: 4,
            eve_elements: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Radio {
    pub p_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
}

impl Default for Radio {
    fn default() -> Self {
        Self {
            p_dbm: 46.0,
            bandwidth_hz: 5.0e6,
            noise_density_dbm_hz: -174.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Pathloss {
    /// Path gain at 1 m, in dB.
    pub reference_db: f64,
    pub direct_exponent: f64,
    pub surface_exponent: f64,
    /// Adjacent-element correlation of the transmitter-to-surface links.
    pub correlation: f64,
}

impl Default for Pathloss {
    fn default() -> Self {
        Self {
            reference_db: -30.0,
            direct_exponent: 4.0,
            surface_exponent: 2.0,
            correlation: 0.7,
        }
    }
}

/// Node coordinates in meters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementConfig {
    pub alice: [f64; 2],
    pub bob: [f64; 2],
    pub eve: [f64; 2],
    pub irs_bob: [f64; 2],
    pub irs_eve: [f64; 2],
}

impl Default for PlacementConfig {
    fn default() -> Self {
        let p = Placement::default();
        Self {
            alice: p.alice,
            bob: p.bob,
            eve: p.eve,
            irs_bob: p.irs_bob,
            irs_eve: p.irs_eve,
        }
    }
}

/// Phase quantization per surface. A missing field means the default of
/// five levels; an explicit `null` means a continuous phase domain.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Domains {
    pub l_b: Option<u32>,
    pub l_e: Option<u32>,
}

impl Default for Domains {
    fn default() -> Self {
        Self {
            l_b: Some(5),
            l_e: Some(5),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Ao,
    Gda,
    Game,
    All,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AoParams {
    pub max_iters: usize,
    pub tol: f64,
    pub randomizations: usize,
    pub record_timing: bool,
}

impl Default for AoParams {
    fn default() -> Self {
        let o = AoOptions::default();
        Self {
            max_iters: o.max_iters,
            tol: o.tol,
            randomizations: o.randomizations,
            record_timing: o.record_timing,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GdaParams {
    pub max_iters: usize,
    pub step_size: f64,
    pub tol: f64,
    pub record_timing: bool,
    pub gradient: GradientForm,
    pub descend: DescendMode,
}

impl Default for GdaParams {
    fn default() -> Self {
        let o = GdaOptions::default();
        Self {
            max_iters: o.max_iters,
            step_size: o.step_size,
            tol: o.tol,
            record_timing: o.record_timing,
            gradient: o.gradient,
            descend: o.descend,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameParams {
    /// Refuse strategy spaces larger than this, per player.
    pub strategy_cap: usize,
    /// Fill payoffs with the beamformer of a fresh alternating-optimization
    /// run instead of best-responding per strategy pair.
    pub fixed_beamformer: bool,
    pub record_timing: bool,
}

impl Default for GameParams {
    fn default() -> Self {
        Self {
            strategy_cap: DEFAULT_STRATEGY_CAP,
            fixed_beamformer: false,
            record_timing: false,
        }
    }
}

// ---------------------------------------------------------------------------
// Loading and validation
// ---------------------------------------------------------------------------

impl Config {
    /// Reads and validates a configuration file. A missing `path` of `None`
    /// yields the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg = match path {
            None => Config::default(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(CliError::io(p))?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Validation(format!("{}: {e}", p.display()))
                })?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.dimensions.tx_antennas == 0 {
            return fail("dimensions.tx_antennas: need at least one antenna".into());
        }
        for (name, value) in [
            ("radio.p_dbm", self.radio.p_dbm),
            ("radio.noise_density_dbm_hz", self.radio.noise_density_dbm_hz),
        ] {
            if !value.is_finite() {
                return fail(format!("{name}: must be finite, got {value}"));
            }
        }
        if !(self.radio.bandwidth_hz > 0.0 && self.radio.bandwidth_hz.is_finite()) {
            return fail(format!(
                "radio.bandwidth_hz: must be positive, got {}",
                self.radio.bandwidth_hz
            ));
        }
        for (name, value) in [
            ("pathloss.direct_exponent", self.pathloss.direct_exponent),
            ("pathloss.surface_exponent", self.pathloss.surface_exponent),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return fail(format!("{name}: must be nonnegative, got {value}"));
            }
        }
        if !(0.0..1.0).contains(&self.pathloss.correlation) {
            return fail(format!(
                "pathloss.correlation: must lie in [0, 1), got {}",
                self.pathloss.correlation
            ));
        }
        for (name, levels) in [("domains.l_b", self.domains.l_b), ("domains.l_e", self.domains.l_e)]
        {
            if let Some(l) = levels {
                if l < 2 {
                    return fail(format!("{name}: need at least 2 phase levels, got {l}"));
                }
            }
        }
        if self.ao.max_iters == 0 {
            return fail("ao.max_iters: need at least one iteration".into());
        }
        if !(self.ao.tol > 0.0) {
            return fail(format!("ao.tol: must be positive, got {}", self.ao.tol));
        }
        if self.ao.randomizations == 0 {
            return fail("ao.randomizations: need at least one sample".into());
        }
        if self.gda.max_iters == 0 {
            return fail("gda.max_iters: need at least one iteration".into());
        }
        if !(self.gda.step_size > 0.0) {
            return fail(format!(
                "gda.step_size: must be positive, got {}",
                self.gda.step_size
            ));
        }
        if !(self.gda.tol > 0.0) {
            return fail(format!("gda.tol: must be positive, got {}", self.gda.tol));
        }
        if self.game.strategy_cap == 0 {
            return fail("game.strategy_cap: must be at least 1".into());
        }
        Ok(())
    }

    // -- mappings onto library types ----------------------------------------

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            m: self.dimensions.tx_antennas,
            n_bob: self.dimensions.bob_elements,
            n_eve: self.dimensions.eve_elements,
            power: dbm_to_watt(self.radio.p_dbm),
            noise_bob: dbm_to_watt(self.radio.noise_density_dbm_hz) * self.radio.bandwidth_hz,
            noise_eve: dbm_to_watt(self.radio.noise_density_dbm_hz) * self.radio.bandwidth_hz,
            reference_loss_db: self.pathloss.reference_db,
            direct_exponent: self.pathloss.direct_exponent,
            surface_exponent: self.pathloss.surface_exponent,
            correlation: self.pathloss.correlation,
            placement: Placement {
                alice: self.placement.alice,
                bob: self.placement.bob,
                eve: self.placement.eve,
                irs_bob: self.placement.irs_bob,
                irs_eve: self.placement.irs_eve,
            },
        }
    }

    pub fn domain_bob(&self) -> PhaseDomain {
        match self.domains.l_b {
            Some(l) => PhaseDomain::Discrete(l),
            None => PhaseDomain::Continuous,
        }
    }

    pub fn domain_eve(&self) -> PhaseDomain {
        match self.domains.l_e {
            Some(l) => PhaseDomain::Discrete(l),
            None => PhaseDomain::Continuous,
        }
    }

    pub fn ao_options(&self) -> AoOptions {
        AoOptions {
            max_iters: self.ao.max_iters,
            tol: self.ao.tol,
            randomizations: self.ao.randomizations,
            record_timing: self.ao.record_timing,
        }
    }

    pub fn gda_options(&self) -> GdaOptions {
        GdaOptions {
            max_iters: self.gda.max_iters,
            step_size: self.gda.step_size,
            tol: self.gda.tol,
            record_timing: self.gda.record_timing,
            gradient: self.gda.gradient,
            descend: self.gda.descend,
        }
    }
}

// ---------------------------------------------------------------------------

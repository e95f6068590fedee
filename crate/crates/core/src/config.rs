//! Experiment configuration, read from a single TOML file.
//!
//! ```toml
//! mass = 1.0
//! t0 = 0.0
//! orders = [0, 1, 2, 3]
//! positivity_action = { mode = "clamped", floor = 1e-6 }
//!
//! [background]
//! kind = "exponential"
//! hubble = 1.0
//!
//! [modes]
//! k_min = 20
//! k_max = 400
//! ```
//!
//! Every other section is optional; `particles` and `detector` enable the
//! corresponding suites.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adiabatic::{log_grid, PositivityAction};
use crate::background::ScaleFactorModel;
use crate::detector::WindowFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mass: f64,
    /// Cauchy time at which the adiabatic states are prepared.
    pub t0: f64,
    pub orders: Vec<usize>,
    #[serde(default)]
    pub positivity_action: PositivityAction,
    /// Relative to the working directory; `--out` takes precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub background: ScaleFactorModel,
    pub modes: ModeRange,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub bogoliubov: BogoliubovConfig,
    #[serde(default)]
    pub particles: Option<ParticlesConfig>,
    #[serde(default)]
    pub detector: Option<DetectorConfig>,
    #[serde(default)]
    pub invariants: InvariantsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRange {
    /// Inclusive range scanned by the Bogoliubov and particle-number suites.
    pub k_min: u32,
    pub k_max: u32,
    /// Channels tabulated by the frequency and mode suites; defaults to a
    /// log-spaced selection of the range.
    #[serde(default)]
    pub channels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    /// Working interval; defaults to ten mass periods after `t0`.
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    /// Largest accepted Wronskian drift per unit time.
    pub max_drift_rate: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, t_start: None, t_end: None, max_drift_rate: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// Accepted excess of the fitted slope over `-2n`.
    pub slope_margin: f64,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self { omega_min: 1e2, omega_max: 1e5, points: 24, slope_margin: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BogoliubovConfig {
    /// Required increase of the decay exponent between consecutive order pairs.
    pub min_exponent_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesConfig {
    /// Time at which the evolved state is compared with the fresh one.
    pub t1: f64,
    /// `N_k` below this is not resolved by the transported modes; spectra
    /// reaching it in the fitted range are left out of the slope ordering.
    #[serde(default = "default_resolution_floor")]
    pub resolution_floor: f64,
    /// Transport tolerance for this suite; falls back to the solver's.
    #[serde(default)]
    pub tol: Option<f64>,
}

fn default_resolution_floor() -> f64 {
    1e-24
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl EnergyGrid {
    pub fn values(&self) -> Vec<f64> {
        log_grid(self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub orders: Vec<usize>,
    pub cutoff: u32,
    #[serde(default = "default_detector_tol")]
    pub tol: f64,
    pub window: WindowFunction,
    pub energies: EnergyGrid,
    /// Energy interval of the slope fit.
    pub fit: [f64; 2],
    /// Also evaluate at cutoff `2K` and require < 1% change over the fit interval.
    #[serde(default)]
    pub check_doubling: bool,
    /// Optional upper bound on every fitted slope.
    #[serde(default)]
    pub max_slope: Option<f64>,
    /// Required steepening of the slope between consecutive orders.
    #[serde(default)]
    pub min_slope_gap: f64,
}

fn default_detector_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantsConfig {
    pub seed: u64,
    pub purity_samples: usize,
    pub pair_samples: usize,
    pub ensemble: usize,
    pub sobolev_k_max: u32,
    pub sobolev_ratio_max: f64,
    /// Orders entering the Sobolev comparison; all configured orders if unset.
    pub sobolev_orders: Option<Vec<usize>>,
}

impl Default for InvariantsConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            purity_samples: 10_000,
            pair_samples: 10_000,
            ensemble: 2_000,
            sobolev_k_max: 500,
            sobolev_ratio_max: 100.0,
            sobolev_orders: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        finite("mass", self.mass)?;
        finite("t0", self.t0)?;
        if !(self.mass > 0.0) {
            return Err(invalid("mass must be positive"));
        }
        if self.orders.is_empty() {
            return Err(invalid("orders must not be empty"));
        }
        if let PositivityAction::Clamped { floor } = self.positivity_action {
            if !(floor > 0.0 && floor < 1.0) {
                return Err(invalid("positivity floor must lie in (0, 1)"));
            }
        }
        self.background.validate().map_err(|e| invalid(format!("background: {e}")))?;
        self.background.jet_at(self.t0, 0).map_err(|e| invalid(format!("background at t0: {e}")))?;
        if self.modes.k_min > self.modes.k_max {
            return Err(invalid("modes: k_min exceeds k_max"));
        }
        let s = &self.solver;
        finite("solver.tol", s.tol)?;
        finite("solver.max_drift_rate", s.max_drift_rate)?;
        if !(s.tol > 0.0) || !(s.max_drift_rate > 0.0) {
            return Err(invalid("solver tolerances must be positive"));
        }
        let (lo, hi) = self.working_interval();
        finite("solver.t_start", lo)?;
        finite("solver.t_end", hi)?;
        if !(lo <= self.t0 && self.t0 <= hi && lo < hi) {
            return Err(invalid("solver working interval must contain t0"));
        }
        let y = &self.symbol;
        finite("symbol.omega_min", y.omega_min)?;
        finite("symbol.omega_max", y.omega_max)?;
        finite("symbol.slope_margin", y.slope_margin)?;
        if !(y.omega_min > 0.0 && y.omega_min < y.omega_max) || y.points < 2 {
            return Err(invalid("symbol: need 0 < omega_min < omega_max and at least 2 points"));
        }
        finite("bogoliubov.min_exponent_gap", self.bogoliubov.min_exponent_gap)?;
        if let Some(p) = &self.particles {
            finite("particles.t1", p.t1)?;
            finite("particles.resolution_floor", p.resolution_floor)?;
            if !(p.t1 >= self.t0) || !(p.resolution_floor >= 0.0) {
                return Err(invalid("particles.t1 must not precede t0, resolution_floor must be non-negative"));
            }
            if let Some(tol) = p.tol {
                finite("particles.tol", tol)?;
                if !(tol > 0.0) {
                    return Err(invalid("particles.tol must be positive"));
                }
            }
        }
        if let Some(d) = &self.detector {
            if d.orders.is_empty() {
                return Err(invalid("detector.orders must not be empty"));
            }
            finite("detector.tol", d.tol)?;
            if !(d.tol > 0.0) {
                return Err(invalid("detector.tol must be positive"));
            }
            d.window.validate().map_err(|e| invalid(format!("detector.window: {e}")))?;
            let e = &d.energies;
            finite("detector.energies.min", e.min)?;
            finite("detector.energies.max", e.max)?;
            if !(e.min > 0.0 && e.min < e.max) || e.count < 2 {
                return Err(invalid("detector.energies: need 0 < min < max and at least 2 points"));
            }
            finite("detector.fit", d.fit[0])?;
            finite("detector.fit", d.fit[1])?;
            if !(d.fit[0] < d.fit[1]) {
                return Err(invalid("detector.fit must be an increasing interval"));
            }
            if let Some(s) = d.max_slope {
                finite("detector.max_slope", s)?;
            }
            finite("detector.min_slope_gap", d.min_slope_gap)?;
        }
        let inv = &self.invariants;
        finite("invariants.sobolev_ratio_max", inv.sobolev_ratio_max)?;
        if !(inv.sobolev_ratio_max > 1.0) {
            return Err(invalid("invariants.sobolev_ratio_max must exceed 1"));
        }
        Ok(())
    }

    /// `(t_start, t_end)` of the mode solves.
    pub fn working_interval(&self) -> (f64, f64) {
        let lo = self.solver.t_start.unwrap_or(self.t0);
        let hi = self.solver.t_end.unwrap_or(self.t0 + 20.0 * std::f64::consts::PI / self.mass);
        (lo, hi)
    }

    /// Sorted, deduplicated orders.
    pub fn sorted_orders(&self) -> Vec<usize> {
        let mut o = self.orders.clone();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Channels tabulated by the frequency and mode suites.
    pub fn channels(&self) -> Vec<u32> {
        let mut ks = if self.modes.channels.is_empty() {
            let (lo, hi) = (self.modes.k_min, self.modes.k_max);
            log_grid(lo as f64 + 1.0, hi as f64 + 1.0, 6).into_iter().map(|x| (x.round() as u32).max(1) - 1).collect()
        } else {
            self.modes.channels.clone()
        };
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
mass = 1.0
t0 = 0.0
orders = [0, 1]

[background]
kind = "constant"
a = 1.0

[modes]
k_min = 0
k_max = 50
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.positivity_action, PositivityAction::Strict);
        assert_eq!(cfg.solver, SolverConfig::default());
        let (lo, hi) = cfg.working_interval();
        assert_eq!(lo, 0.0);
        assert!((hi - 20.0 * std::f64::consts::PI).abs() < 1e-12);
        let ch = cfg.channels();
        assert_eq!(ch.first(), Some(&0));
        assert_eq!(ch.last(), Some(&50));
    }

    #[test]
    fn rejects_bad_values() {
        let neg = MINIMAL.replace("mass = 1.0", "mass = -1.0");
        assert!(matches!(ExperimentConfig::from_toml(&neg), Err(Error::ConfigInvalid(_))));
        let empty = MINIMAL.replace("orders = [0, 1]", "orders = []");
        assert!(matches!(ExperimentConfig::from_toml(&empty), Err(Error::ConfigInvalid(_))));
        let range = MINIMAL.replace("k_min = 0", "k_min = 60");
        assert!(matches!(ExperimentConfig::from_toml(&range), Err(Error::ConfigInvalid(_))));
        let unknown = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(Error::ConfigInvalid(_))));
        let nan = MINIMAL.replace("t0 = 0.0", "t0 = nan");
        assert!(matches!(ExperimentConfig::from_toml(&nan), Err(Error::ConfigInvalid(_))));
        let tol = format!("{MINIMAL}\n[particles]\nt1 = 1.0\ntol = -1e-10\n");
        assert!(matches!(ExperimentConfig::from_toml(&tol), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn detector_section() {
        let text = format!(
            "{MINIMAL}\n[detector]\norders = [0]\ncutoff = 100\nfit = [5.0, 20.0]\n\
             [detector.window]\nkind = \"gaussian_truncated\"\nsigma = 0.2\nstart = -1.0\nend = 1.0\n\
             [detector.energies]\nmin = 1.0\nmax = 20.0\ncount = 8\n"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let d = cfg.detector.unwrap();
        assert_eq!(d.tol, 1e-12);
        assert_eq!(d.energies.values().len(), 8);
    }
}

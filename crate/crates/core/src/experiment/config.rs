//! Experiment configuration: TOML text, dotted-path overrides, validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fluctuation::PhysicsParams;
use crate::lattice::Grid;

/// A configuration problem. Reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Evolve,
    VerifyFisherLimit,
    VerifyUncertainty,
    VerifyMinimizer,
    VerifyMadelung,
    SweepAlpha,
    TransformCheck,
    MomentumDivergence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Evolve,
        ExperimentKind::VerifyFisherLimit,
        ExperimentKind::VerifyUncertainty,
        ExperimentKind::VerifyMinimizer,
        ExperimentKind::VerifyMadelung,
        ExperimentKind::SweepAlpha,
        ExperimentKind::TransformCheck,
        ExperimentKind::MomentumDivergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::VerifyFisherLimit => "verify-fisher-limit",
            ExperimentKind::VerifyUncertainty => "verify-uncertainty",
            ExperimentKind::VerifyMinimizer => "verify-minimizer",
            ExperimentKind::VerifyMadelung => "verify-madelung",
            ExperimentKind::SweepAlpha => "sweep-alpha",
            ExperimentKind::TransformCheck => "transform-check",
            ExperimentKind::MomentumDivergence => "momentum-divergence",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "evolve a packet with the split-step or Crank-Nicolson solver and write snapshots",
            ExperimentKind::VerifyFisherLimit => "kernel-averaged KL divergence against its Fisher-information limit",
            ExperimentKind::VerifyUncertainty => "exact uncertainty relation of the fluctuation kernel, closed form and Monte Carlo",
            ExperimentKind::VerifyMinimizer => "gradient-descent minimizer of the kernel functional against the closed-form Gaussian",
            ExperimentKind::VerifyMadelung => "hydrodynamic (rho, S) evolution against split-step over one oscillator period",
            ExperimentKind::SweepAlpha => "order-alpha equation against the standard one with hbar -> sqrt(alpha) hbar",
            ExperimentKind::TransformCheck => "position/momentum transform: round trip, momentum, commuting square, commutator",
            ExperimentKind::MomentumDivergence => "momentum-kernel divergence growth and loss of density dependence as dt shrinks",
        }
    }

    /// Default `(n, length)` of the experiment's position grid, if it uses one.
    pub fn default_grid(self) -> Option<(usize, f64)> {
        match self {
            ExperimentKind::Evolve => Some((1024, 60.0)),
            ExperimentKind::VerifyFisherLimit => Some((16384, 24.0)),
            ExperimentKind::VerifyUncertainty | ExperimentKind::VerifyMinimizer => None,
            ExperimentKind::VerifyMadelung | ExperimentKind::SweepAlpha => Some((256, 20.0)),
            ExperimentKind::TransformCheck => Some((512, 40.0)),
            ExperimentKind::MomentumDivergence => Some((10000, 1000.0)),
        }
    }

    /// The relation each experiment exercises.
    pub fn anchor(self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "i hbar dpsi/dt = [-(hbar^2/2m) d^2 + V] psi",
            ExperimentKind::VerifyFisherLimit => "E_w[D_KL(rho(x) || rho(x+w))] -> (hbar dt/4m) int (rho')^2/rho",
            ExperimentKind::VerifyUncertainty => "<dx dp> = hbar/2, <w^2> = hbar dt/2m",
            ExperimentKind::VerifyMinimizer => "P(w) = Z^-1 exp(-m w^2 / hbar dt)",
            ExperimentKind::VerifyMadelung => "dS/dt + S'^2/2m + V - (hbar^2/2m)(sqrt rho)''/sqrt rho = 0",
            ExperimentKind::SweepAlpha => "hbar_alpha = sqrt(alpha) hbar",
            ExperimentKind::TransformCheck => "psi(p) = (2 pi hbar)^-1/2 int Psi(x) exp(-i p x/hbar) dx, [x, p] = i hbar",
            ExperimentKind::MomentumDivergence => "<omega^2> = m hbar/2dt, E_omega[D_KL] diverges as dt -> 0",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Option<usize>,
    pub length: Option<f64>,
    pub x0: Option<f64>,
}

impl GridConfig {
    /// Grid with per-experiment defaults for missing entries. `x0` defaults
    /// to `-length/2`.
    pub fn build(&self, n: usize, length: f64) -> Result<Grid, ConfigError> {
        let n = self.n.unwrap_or(n);
        let length = self.length.unwrap_or(length);
        let x0 = self.x0.unwrap_or(-length / 2.0);
        Grid::new(n, length, x0).map_err(|e| cfg_err(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    pub alpha: f64,
    pub charge: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { hbar: 1.0, mass: 1.0, dt: 0.1, alpha: 1.0, charge: 0.0 }
    }
}

impl PhysicsConfig {
    pub fn params(&self) -> Result<PhysicsParams, ConfigError> {
        PhysicsParams::new(self.hbar, self.mass, self.dt)
            .and_then(|p| p.with_alpha(self.alpha))
            .and_then(|p| p.with_charge(self.charge))
            .map_err(|e| cfg_err(format!("physics: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        x_center: f64,
        #[serde(default)]
        k0: f64,
    },
    Coherent {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        displacement: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Gaussian { sigma: 1.0, x_center: 0.0, k0: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
    },
    Constant {
        #[serde(default)]
        v0: f64,
    },
    Em {
        #[serde(default, rename = "A0")]
        a0: f64,
        #[serde(default)]
        phi0: f64,
        #[serde(default = "one")]
        q: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dt_step: Option<f64>,
    pub n_steps: Option<usize>,
    pub output_every: Option<usize>,
    pub samples: Option<usize>,
}

/// Pass/fail thresholds. Defaults are the acceptance values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub minimizer_pointwise: f64,
    pub minimizer_variance_rel: f64,
    pub uncertainty_exact_rel: f64,
    pub uncertainty_mc_rel: f64,
    pub fisher_rel_coarse: f64,
    pub fisher_rel_fine: f64,
    pub fisher_decay_min: f64,
    pub fisher_decay_max: f64,
    pub madelung_l2: f64,
    pub split_return_l2: f64,
    pub alpha_l2: f64,
    pub round_trip: f64,
    pub momentum_consistency: f64,
    pub commuting_square: f64,
    pub commutator_rel: f64,
    pub norm_drift_per_step: f64,
    pub cn_norm_drift_per_1000: f64,
    pub dispersion_rel: f64,
    pub em_drift: f64,
    pub momentum_growth_nats: f64,
    pub momentum_spread: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            minimizer_pointwise: 1e-8,
            minimizer_variance_rel: 5e-3,
            uncertainty_exact_rel: 1e-10,
            uncertainty_mc_rel: 0.02,
            fisher_rel_coarse: 0.05,
            fisher_rel_fine: 0.01,
            fisher_decay_min: 0.3,
            fisher_decay_max: 0.7,
            madelung_l2: 1e-3,
            split_return_l2: 1e-8,
            alpha_l2: 1e-10,
            round_trip: 1e-12,
            momentum_consistency: 1e-10,
            commuting_square: 1e-10,
            commutator_rel: 1e-6,
            norm_drift_per_step: 1e-12,
            cn_norm_drift_per_1000: 1e-10,
            dispersion_rel: 1e-6,
            em_drift: 1e-4,
            momentum_growth_nats: 2.0,
            momentum_spread: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { alphas: vec![0.5, 1.0, 2.0, 4.0], betas: vec![1.0, 2.0] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub dt_list: Option<Vec<f64>>,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub initial_state: Option<InitialState>,
    #[serde(default)]
    pub potential: Option<PotentialConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub scan: ScanConfig,
}

/// Parse `text`, apply `key=value` overrides, and deserialize.
///
/// Override keys are dotted table paths (`physics.mass`, `grid.n`). Values
/// are read as TOML scalars or arrays; anything that does not parse is taken
/// as a bare string.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| cfg_err(format!("parse error: {e}")))?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    let config: ExperimentConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| cfg_err(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| cfg_err(format!("override '{item}' is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(cfg_err(format!("bad override key '{key}'")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| cfg_err(format!("override '{key}': '{part}' is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(cfg_err(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Re-check the guards of every module the experiment will call.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.physics.params()?;
        if let Some(n) = self.grid.n {
            if n < 8 || !n.is_multiple_of(2) {
                return Err(cfg_err(format!("grid.n must be even and >= 8, got {n}")));
            }
        }
        if let Some(l) = self.grid.length {
            positive("grid.length", l)?;
        }
        if let Some((n, length)) = self.experiment.default_grid() {
            self.grid.build(n, length)?;
        }
        match self.initial_state.clone().unwrap_or_default() {
            InitialState::Gaussian { sigma, x_center, k0 } => {
                positive("initial_state.sigma", sigma)?;
                if !(x_center.is_finite() && k0.is_finite()) {
                    return Err(cfg_err("initial_state values must be finite"));
                }
            }
            InitialState::Coherent { omega, displacement } => {
                positive("initial_state.omega", omega)?;
                if !displacement.is_finite() {
                    return Err(cfg_err("initial_state.displacement must be finite"));
                }
            }
        }
        match self.potential.clone().unwrap_or_default() {
            PotentialConfig::Zero => {}
            PotentialConfig::Harmonic { omega } => positive("potential.omega", omega)?,
            PotentialConfig::Constant { v0 } => {
                if !v0.is_finite() {
                    return Err(cfg_err("potential.v0 must be finite"));
                }
            }
            PotentialConfig::Em { a0, phi0, q } => {
                if !(a0.is_finite() && phi0.is_finite() && q.is_finite()) {
                    return Err(cfg_err("potential.em values must be finite"));
                }
            }
        }
        if let Some(dt) = self.run.dt_step {
            positive("run.dt_step", dt)?;
        }
        if self.run.output_every == Some(0) {
            return Err(cfg_err("run.output_every must be >= 1"));
        }
        if self.run.samples == Some(0) {
            return Err(cfg_err("run.samples must be >= 1"));
        }
        for &a in &self.sweep.alphas {
            positive("sweep.alphas entry", a)?;
        }
        for &b in &self.sweep.betas {
            positive("sweep.betas entry", b)?;
        }
        if let Some(list) = &self.scan.dt_list {
            if list.is_empty() {
                return Err(cfg_err("scan.dt_list must not be empty"));
            }
            for &d in list {
                positive("scan.dt_list entry", d)?;
            }
        }
        let c = &self.checks;
        for (name, v) in [
            ("minimizer_pointwise", c.minimizer_pointwise),
            ("minimizer_variance_rel", c.minimizer_variance_rel),
            ("uncertainty_exact_rel", c.uncertainty_exact_rel),
            ("uncertainty_mc_rel", c.uncertainty_mc_rel),
            ("fisher_rel_coarse", c.fisher_rel_coarse),
            ("fisher_rel_fine", c.fisher_rel_fine),
            ("madelung_l2", c.madelung_l2),
            ("split_return_l2", c.split_return_l2),
            ("alpha_l2", c.alpha_l2),
            ("round_trip", c.round_trip),
            ("momentum_consistency", c.momentum_consistency),
            ("commuting_square", c.commuting_square),
            ("commutator_rel", c.commutator_rel),
            ("norm_drift_per_step", c.norm_drift_per_step),
            ("cn_norm_drift_per_1000", c.cn_norm_drift_per_1000),
            ("dispersion_rel", c.dispersion_rel),
            ("em_drift", c.em_drift),
            ("momentum_spread", c.momentum_spread),
        ] {
            positive(&format!("checks.{name}"), v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config("experiment = \"verify-uncertainty\"\n", &[]).unwrap();
        assert_eq!(c.experiment, ExperimentKind::VerifyUncertainty);
        assert_eq!(c.physics, PhysicsConfig::default());
        assert_eq!(c.checks, Checks::default());
    }

    #[test]
    fn overrides_and_families() {
        let text = r#"
experiment = "evolve"
[initial_state]
family = "coherent"
omega = 2.0
[potential]
family = "em"
A0 = 0.5
"#;
        let c = parse_config(text, &["physics.mass=2.5".into(), "initial_state.displacement = 1".into()]).unwrap();
        assert_eq!(c.physics.mass, 2.5);
        assert_eq!(c.initial_state, Some(InitialState::Coherent { omega: 2.0, displacement: 1.0 }));
        assert_eq!(c.potential, Some(PotentialConfig::Em { a0: 0.5, phi0: 0.0, q: 1.0 }));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_config("experiment = \"nope\"", &[]).is_err());
        assert!(parse_config("experiment = \"evolve\"\nbogus = 1", &[]).is_err());
        assert!(parse_config("experiment = \"evolve\"\n[physics]\nmass = -1.0", &[]).is_err());
        assert!(parse_config("experiment = \"evolve\"\n[physics]\nmas = 1.0", &[]).is_err());
        assert!(parse_config("experiment = \"evolve\"\n[potential]\nfamily = \"harmonic\"\nomeg = 1", &[]).is_err());
        assert!(parse_config("experiment = \"evolve\"", &["grid.n=7".into()]).is_err());
        assert!(parse_config("experiment = \"evolve\"", &["novalue".into()]).is_err());
    }
}

//! Experiment configuration: a single TOML file, strictly validated.
//!
//! The config format is versioned through `schema_version`; unknown keys
//! are rejected so typos surface as errors naming the offending key.

use anyhow::{bail, Context, Result};
use cns_core::diagnostics::InvariantTolerances;
use cns_core::integrator::DiffusionMode;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub grid: GridSection,
    pub scheme: SchemeSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub wiener: WienerSection,
    #[serde(default)]
    pub jumps: JumpSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub points: usize,
    pub cutoff: usize,
    #[serde(default)]
    pub dealias_rule: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub dt: f64,
    pub horizon: f64,
    pub stop_radius: f64,
    #[serde(default = "default_diffusion")]
    pub diffusion: DiffusionMode,
}

fn default_diffusion() -> DiffusionMode {
    DiffusionMode::IntegratingFactor
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub preset: String,
    #[serde(default)]
    pub n_floor: Option<f64>,
    #[serde(default)]
    pub bump_amplitude: Option<f64>,
    #[serde(default)]
    pub bump_concentration: Option<f64>,
    #[serde(default)]
    pub c_level: Option<f64>,
    #[serde(default)]
    pub velocity_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: String,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            kind: "sine-y".into(),
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WienerSection {
    #[serde(default)]
    pub modes: usize,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_wiener_kind")]
    pub kind: String,
    #[serde(default)]
    pub gradient_scale: f64,
}

fn default_wiener_kind() -> String {
    "c-waves".into()
}

impl Default for WienerSection {
    fn default() -> Self {
        Self {
            modes: 0,
            amplitude: 0.0,
            kind: default_wiener_kind(),
            gradient_scale: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSection {
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "two")]
    pub beta_alpha: f64,
    #[serde(default = "two")]
    pub beta_beta: f64,
}

fn two() -> f64 {
    2.0
}

impl Default for JumpSection {
    fn default() -> Self {
        Self {
            rate: 0.0,
            beta_alpha: 2.0,
            beta_beta: 2.0,
        }
    }
}

/// Experiment kinds. Beyond the five study kinds, four check kinds make
/// every acceptance gate runnable from a shipped config: `decay-order`,
/// `transport`, `jump-stats` and `isometry`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: String,
    pub master_seed: u64,
    /// ensemble / escape: number of trajectories.
    #[serde(default)]
    pub paths: Option<usize>,
    /// convergence: strictly increasing Galerkin cutoffs.
    #[serde(default)]
    pub cutoffs: Option<Vec<usize>>,
    /// uniqueness: perturbation size and seed.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub perturbation_seed: Option<u64>,
    /// escape: strictly increasing radius thresholds.
    #[serde(default)]
    pub thresholds: Option<Vec<f64>>,
    /// decay-order / transport / jump-stats / isometry knobs.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub velocity: Option<f64>,
    #[serde(default)]
    pub mode: Option<i64>,
    /// Ensemble/escape worker threads (trajectories are independent; the
    /// merge is single-threaded and index-ordered, so results do not
    /// depend on the worker count).
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    #[serde(default)]
    pub snapshot_stride: u64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    #[serde(default = "default_mass_drift")]
    pub mass_drift: f64,
    #[serde(default = "default_linf_overshoot")]
    pub linf_overshoot: f64,
}

fn default_mass_drift() -> f64 {
    1e-10
}

fn default_linf_overshoot() -> f64 {
    1e-6
}

impl Default for TolerancesSection {
    fn default() -> Self {
        Self {
            mass_drift: default_mass_drift(),
            linf_overshoot: default_linf_overshoot(),
        }
    }
}

impl TolerancesSection {
    pub fn invariants(&self) -> InvariantTolerances {
        InvariantTolerances {
            mass_drift: self.mass_drift,
            linf_overshoot: self.linf_overshoot,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// "frozen": use the stored constants; "calibrate": fit them on this
    /// run and report (no budget/envelope gating).
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_c_budget")]
    pub c_budget: f64,
    #[serde(default = "one")]
    pub c_tilde2: f64,
    #[serde(default = "one")]
    pub c_uniq: f64,
    /// Gradient coefficient entering lambda_1, lambda_2; `None` means the
    /// closed-form threshold implied by `||c_0||_inf`.
    #[serde(default)]
    pub lambda0: Option<f64>,
}

fn default_mode() -> String {
    "frozen".into()
}

fn default_c_budget() -> f64 {
    1.0
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            c_budget: default_c_budget(),
            c_tilde2: 1.0,
            c_uniq: 1.0,
            lambda0: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        config.validate()?;
        Ok(config)
    }

    /// Cross-field validation beyond what serde can express.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            );
        }
        if !(self.scheme.dt > 0.0) {
            bail!("scheme.dt: must be positive, got {}", self.scheme.dt);
        }
        if !(self.scheme.horizon >= 0.0) {
            bail!("scheme.horizon: must be nonnegative");
        }
        if !(self.scheme.stop_radius > 0.0) {
            bail!("scheme.stop_radius: must be positive");
        }
        match self.experiment.kind.as_str() {
            "single" | "decay-order" | "transport" | "jump-stats" | "isometry" => {}
            "ensemble" | "escape" => {
                let paths = self
                    .experiment
                    .paths
                    .ok_or_else(|| anyhow::anyhow!("experiment.paths: required for kind `{}`", self.experiment.kind))?;
                if paths == 0 {
                    bail!("experiment.paths: must be positive");
                }
                if self.experiment.kind == "escape" {
                    let thresholds = self.experiment.thresholds.as_deref().ok_or_else(|| {
                        anyhow::anyhow!("experiment.thresholds: required for kind `escape`")
                    })?;
                    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
                        bail!("experiment.thresholds: must be strictly increasing and nonempty");
                    }
                }
            }
            "convergence" => {
                let cutoffs = self.experiment.cutoffs.as_deref().ok_or_else(|| {
                    anyhow::anyhow!("experiment.cutoffs: required for kind `convergence`")
                })?;
                if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
                    bail!("experiment.cutoffs: need at least two strictly increasing cutoffs");
                }
            }
            "uniqueness" => {
                let delta = self
                    .experiment
                    .delta
                    .ok_or_else(|| anyhow::anyhow!("experiment.delta: required for kind `uniqueness`"))?;
                if !(delta > 0.0) {
                    bail!("experiment.delta: must be positive");
                }
            }
            other => bail!(
                "experiment.kind: unknown kind `{other}` (expected single, ensemble, \
                 convergence, uniqueness, escape, decay-order, transport, jump-stats, isometry)"
            ),
        }
        match self.calibration.mode.as_str() {
            "frozen" | "calibrate" => {}
            other => bail!("calibration.mode: unknown mode `{other}`"),
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<std::sync::Arc<cns_core::spectral::TorusGrid>> {
        let grid = match self.grid.dealias_rule {
            Some(rule) => cns_core::spectral::TorusGrid::with_dealias_rule(
                self.grid.length,
                self.grid.points,
                self.grid.cutoff,
                rule,
            )?,
            None => cns_core::spectral::TorusGrid::new(
                self.grid.length,
                self.grid.points,
                self.grid.cutoff,
            )?,
        };
        Ok(grid)
    }

    pub fn build_scheme(&self) -> Result<cns_core::integrator::StepScheme> {
        Ok(cns_core::integrator::StepScheme::new(
            self.scheme.dt,
            self.scheme.diffusion,
            self.scheme.stop_radius,
            self.scheme.horizon,
        )?)
    }
}

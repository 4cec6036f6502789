//! Stochastic forcing: truncated Wiener noise of gradient type and
//! finite-activity compensated-Poisson jumps, with empirical verification
//! of the hypotheses they must satisfy.

mod hypotheses;
mod increment;
mod jump;
mod wiener;

pub use hypotheses::{lambda0_threshold, verify_hypotheses, HypothesisFlag, HypothesisReport};
pub use increment::{sample_increment, JumpEvent, NoiseIncrement, TrajectoryRng};
pub use jump::{apply_jump, beta_raw_moment, compensator_drift, JumpDriverConfig};
pub use wiener::{WienerDriverConfig, WienerMode};

/// The two drivers a trajectory consumes.
#[derive(Debug, Clone)]
pub struct NoiseDrivers {
    pub wiener: WienerDriverConfig,
    pub jumps: JumpDriverConfig,
    /// Record the per-step quadratic variation `dt * sum_i <G_i(u), u>^2`
    /// in the ledger (costs one operator application per mode per step).
    pub track_quadratic_variation: bool,
}

impl NoiseDrivers {
    pub fn new(wiener: WienerDriverConfig, jumps: JumpDriverConfig) -> Self {
        Self {
            wiener,
            jumps,
            track_quadratic_variation: false,
        }
    }

    pub fn off(grid: std::sync::Arc<crate::spectral::TorusGrid>) -> Self {
        Self::new(WienerDriverConfig::off(grid), JumpDriverConfig::off())
    }

    /// Whether any stochastic forcing is active.
    pub fn active(&self) -> bool {
        (self.wiener.mode_count() > 0 && self.wiener.amplitude() != 0.0)
            || self.jumps.rate > 0.0
    }
}

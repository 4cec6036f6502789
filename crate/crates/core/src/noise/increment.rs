//! Sampling of per-step noise increments.
//!
//! One increment holds the Wiener draws (each `N(0, dt)`), the jump events
//! of the step (intra-step times in arrival order with their radii), and the
//! compensator scale `mu_1 * dt`. The RNG consumption order is fixed —
//! Wiener draws, then the Poisson count, then per-jump time and radius —
//! so that runs at different Galerkin cutoffs sharing a seed consume
//! identical streams.

use super::jump::JumpDriverConfig;
use super::wiener::WienerDriverConfig;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution, Poisson, StandardNormal};

/// Per-trajectory random number generator.
pub type TrajectoryRng = ChaCha12Rng;

/// One jump event inside a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    /// Arrival time measured from the start of the step, in `[0, dt)`.
    pub time_in_step: f64,
    /// Radius `r = ||z||` in `(0, 1)`.
    pub radius: f64,
}

/// Sampled noise increment for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    /// Wiener increments, each `N(0, dt)`.
    pub dw: Vec<f64>,
    /// Jump events sorted by arrival time.
    pub jumps: Vec<JumpEvent>,
    /// Compensator scale `mu_1 * dt`.
    pub compensator_scale: f64,
}

impl NoiseIncrement {
    pub fn zero(mode_count: usize) -> Self {
        Self {
            dw: vec![0.0; mode_count],
            jumps: Vec::new(),
            compensator_scale: 0.0,
        }
    }
}

/// Sample the increment for one step of size `dt`.
pub fn sample_increment(
    wiener: &WienerDriverConfig,
    jumps: &JumpDriverConfig,
    dt: f64,
    rng: &mut TrajectoryRng,
) -> NoiseIncrement {
    if dt == 0.0 {
        return NoiseIncrement::zero(wiener.mode_count());
    }
    let sqrt_dt = dt.sqrt();
    let dw: Vec<f64> = (0..wiener.mode_count())
        .map(|_| sqrt_dt * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();

    let mut events = Vec::new();
    let lambda = jumps.rate * dt;
    if lambda > 0.0 {
        let count = Poisson::new(lambda)
            .expect("lambda > 0")
            .sample(rng) as usize;
        let law = Beta::new(jumps.beta_alpha, jumps.beta_beta).expect("validated shapes");
        for _ in 0..count {
            let time_in_step: f64 = rng.gen_range(0.0..dt);
            // Beta samples hit the endpoints only by floating underflow;
            // clamp into the open interval required by the jump map.
            let radius = law
                .sample(rng)
                .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            events.push(JumpEvent {
                time_in_step,
                radius,
            });
        }
        events.sort_by(|a, b| a.time_in_step.total_cmp(&b.time_in_step));
    }

    NoiseIncrement {
        dw,
        jumps: events,
        compensator_scale: jumps.mu1 * dt,
    }
}

//! Finite-activity compensated-Poisson jump forcing.
//!
//! Jumps form a compound Poisson process: events arrive with intensity
//! `rate`, each carrying a radius `r` drawn from a Beta law on `(0, 1)`
//! (the jump sizes live in the unit ball). The jump map is multiplicative,
//! `F(u; z) = r(z) * u`, so the state jumps from `u` to `(1 + r) u`.
//! Compensation subtracts the mean drift `mu_1 * u * dt`.

use crate::spectral::SolenoidalVelocityField;
use crate::{CnsError, Result};
use serde::Serialize;

/// Moment-consistency tolerance for the cached `mu_p`.
const MOMENT_TOL: f64 = 1e-12;

/// Configuration of the jump driver.
#[derive(Debug, Clone, Serialize)]
pub struct JumpDriverConfig {
    /// Total intensity `nu(Z)` (finite activity).
    pub rate: f64,
    /// Beta shape parameters of the radius law on `(0, 1)`.
    pub beta_alpha: f64,
    pub beta_beta: f64,
    /// Cached moments `mu_p = rate * E[r^p]` for `p` in {1, 2, 4}.
    pub mu1: f64,
    pub mu2: f64,
    pub mu4: f64,
}

impl JumpDriverConfig {
    pub fn new(rate: f64, beta_alpha: f64, beta_beta: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(CnsError::InvalidParameter {
                name: "rate",
                message: format!("jump intensity must be finite and nonnegative, got {rate}"),
            });
        }
        if beta_alpha <= 0.0 || beta_beta <= 0.0 {
            return Err(CnsError::InvalidParameter {
                name: "radius_law",
                message: format!("Beta shapes must be positive, got ({beta_alpha}, {beta_beta})"),
            });
        }
        let cfg = Self {
            rate,
            beta_alpha,
            beta_beta,
            mu1: rate * beta_raw_moment(beta_alpha, beta_beta, 1),
            mu2: rate * beta_raw_moment(beta_alpha, beta_beta, 2),
            mu4: rate * beta_raw_moment(beta_alpha, beta_beta, 4),
        };
        cfg.check_moments()?;
        Ok(cfg)
    }

    /// The default radius law Beta(2, 2): `mu1 = rate/2`, `mu2 = 0.3 rate`,
    /// `mu4 = rate/7`.
    pub fn with_default_law(rate: f64) -> Result<Self> {
        Self::new(rate, 2.0, 2.0)
    }

    /// Driver with no jumps.
    pub fn off() -> Self {
        Self {
            rate: 0.0,
            beta_alpha: 2.0,
            beta_beta: 2.0,
            mu1: 0.0,
            mu2: 0.0,
            mu4: 0.0,
        }
    }

    /// Cached moments must match the closed form of the radius law.
    pub fn check_moments(&self) -> Result<()> {
        for (p, cached) in [(1u32, self.mu1), (2, self.mu2), (4, self.mu4)] {
            let exact = self.rate * beta_raw_moment(self.beta_alpha, self.beta_beta, p);
            let scale = exact.abs().max(1.0);
            if (cached - exact).abs() > MOMENT_TOL * scale {
                return Err(CnsError::InvalidParameter {
                    name: "moments",
                    message: format!(
                        "cached mu_{p} = {cached} inconsistent with radius law value {exact}"
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Raw moment `E[r^p]` of a Beta(alpha, beta) law.
pub fn beta_raw_moment(alpha: f64, beta: f64, p: u32) -> f64 {
    let mut value = 1.0;
    for j in 0..p {
        let jf = j as f64;
        value *= (alpha + jf) / (alpha + beta + jf);
    }
    value
}

/// Jump map of one event: returns the increment `F(u; z) = r * u`.
///
/// The radius must lie strictly inside `(0, 1)` (the unit ball of jump
/// amplitudes, excluding the origin).
pub fn apply_jump(u: &SolenoidalVelocityField, radius: f64) -> Result<SolenoidalVelocityField> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(CnsError::InvalidParameter {
            name: "radius",
            message: format!("jump radius must lie in (0, 1), got {radius}"),
        });
    }
    let mut out = u.clone();
    out.scale(radius);
    Ok(out)
}

/// Compensator drift over a step: `-mu_1 * u * dt`.
pub fn compensator_drift(
    u: &SolenoidalVelocityField,
    cfg: &JumpDriverConfig,
    dt: f64,
) -> SolenoidalVelocityField {
    let mut out = u.clone();
    out.scale(-cfg.mu1 * dt);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{energy, SolenoidalVelocityField, TorusGrid};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_u(scale: f64) -> SolenoidalVelocityField {
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        let mut u = SolenoidalVelocityField::from_fns(
            g,
            |x, y| x.sin() * y.cos(),
            |x, y| -x.cos() * y.sin(),
        );
        let norm = energy(&u).sqrt();
        u.scale(scale / norm);
        u
    }

    #[test]
    fn default_law_closed_form_moments() {
        let cfg = JumpDriverConfig::with_default_law(2.0).unwrap();
        assert_relative_eq!(cfg.mu1, 1.0, max_relative = 1e-14);
        assert_relative_eq!(cfg.mu2, 0.6, max_relative = 1e-14);
        assert_relative_eq!(cfg.mu4, 2.0 / 7.0, max_relative = 1e-14);
        cfg.check_moments().unwrap();
    }

    #[test]
    fn jump_scales_the_state() {
        let u = unit_u(2.0);
        let f = apply_jump(&u, 0.5).unwrap();
        assert_relative_eq!(energy(&f).sqrt(), 1.0, max_relative = 1e-12);

        let zero = SolenoidalVelocityField::zero(u.grid().clone());
        let fz = apply_jump(&zero, 0.5).unwrap();
        assert!(energy(&fz) == 0.0);

        assert!(apply_jump(&u, 0.0).is_err());
        assert!(apply_jump(&u, 1.0).is_err());
        assert!(apply_jump(&u, -0.3).is_err());
        assert!(apply_jump(&u, 1.7).is_err());
    }

    #[test]
    fn second_moment_identity() {
        // integral of ||F(u; z)||^2 nu(dz) = ||u||^2 * mu2; with ||u|| = 2,
        // mu2 = 0.5 the value is 2.0.
        let rate = 0.5 / 0.3; // Beta(2,2): E[r^2] = 0.3, so mu2 = 0.5
        let cfg = JumpDriverConfig::with_default_law(rate).unwrap();
        assert_relative_eq!(cfg.mu2, 0.5, max_relative = 1e-14);
        let u = unit_u(2.0);
        let value = energy(&u) * cfg.mu2;
        assert_relative_eq!(value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn compensator_trivial_scalings() {
        let u = unit_u(1.0);
        let off = JumpDriverConfig::off();
        assert!(energy(&compensator_drift(&u, &off, 0.1)) == 0.0);

        let cfg = JumpDriverConfig::with_default_law(2.0).unwrap(); // mu1 = 1
        let d = compensator_drift(&u, &cfg, 0.01);
        let mut expected = u.clone();
        expected.scale(-0.01);
        let mut diff = d;
        diff.add_scaled(&expected, -1.0);
        assert!(energy(&diff) < 1e-28);
    }
}

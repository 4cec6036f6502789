//! Trajectory- and ensemble-level reports: conservation invariants, the
//! exponential `L^2` envelope, escape probabilities, and moment estimates.

use super::ledger::EntropyLedgerRow;
use crate::{CnsError, Result};
use serde::Serialize;

/// Tolerances for the conservation-invariant gates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvariantTolerances {
    /// Allowed relative drift of the mass of `n`.
    pub mass_drift: f64,
    /// Allowed overshoot of `||c||_inf` above its initial value.
    pub linf_overshoot: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        Self {
            mass_drift: 1e-10,
            linf_overshoot: 1e-6,
        }
    }
}

/// Mass conservation and maximum-principle report for one trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvariantReport {
    pub max_mass_drift_rel: f64,
    pub max_linf_overshoot: f64,
    pub min_n: f64,
    pub min_c: f64,
    pub mass_pass: bool,
    pub linf_pass: bool,
    /// Time of the first violated row, if any.
    pub first_violation_t: Option<f64>,
}

impl InvariantReport {
    pub fn pass(&self) -> bool {
        self.mass_pass && self.linf_pass
    }
}

/// Check the conserved quantities of a completed ledger.
pub fn lemma31_check(
    rows: &[EntropyLedgerRow],
    tol: &InvariantTolerances,
) -> Result<InvariantReport> {
    let first = rows
        .first()
        .ok_or_else(|| CnsError::DegenerateInput("empty trajectory".into()))?;
    let mass0 = first.mass_n;
    let linf0 = first.linf_c;
    let mass_scale = mass0.abs().max(f64::MIN_POSITIVE);

    let mut max_drift = 0.0_f64;
    let mut max_overshoot = 0.0_f64;
    let mut min_n = f64::INFINITY;
    let mut min_c = f64::INFINITY;
    let mut first_violation: Option<f64> = None;
    for row in rows {
        let drift = (row.mass_n - mass0).abs() / mass_scale;
        let overshoot = (row.linf_c - linf0).max(0.0);
        max_drift = max_drift.max(drift);
        max_overshoot = max_overshoot.max(overshoot);
        min_n = min_n.min(row.min_n);
        min_c = min_c.min(row.min_c);
        if (drift > tol.mass_drift || overshoot > tol.linf_overshoot) && first_violation.is_none() {
            first_violation = Some(row.t);
        }
    }
    Ok(InvariantReport {
        max_mass_drift_rel: max_drift,
        max_linf_overshoot: max_overshoot,
        min_n,
        min_c,
        mass_pass: max_drift <= tol.mass_drift,
        linf_pass: max_overshoot <= tol.linf_overshoot,
        first_violation_t: first_violation,
    })
}

/// Exponential `L^2` envelope report:
/// `sup_s ||n||^2 + ∫ ||grad n||^2 <= C1 * exp(C2 * ∫ ||Δc||^2)` with
/// `C1 = 1 + ||n_0||^2` pinned by the Gronwall derivation and a calibrated
/// `C2` (the interpolation constant differs on the torus).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundReport {
    pub c_tilde1: f64,
    pub c_tilde2: f64,
    /// Largest `LHS / envelope` ratio over the trajectory.
    pub max_ratio: f64,
    pub violations: u64,
    pub first_violation_t: Option<f64>,
    pub final_lhs: f64,
    pub final_envelope: f64,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

pub fn cor32_bound(rows: &[EntropyLedgerRow], c_tilde2: f64) -> Result<BoundReport> {
    let first = rows
        .first()
        .ok_or_else(|| CnsError::DegenerateInput("empty trajectory".into()))?;
    let c1 = 1.0 + first.l2_n * first.l2_n;
    let mut running_sup = 0.0_f64;
    let mut int_grad_n = 0.0_f64;
    let mut prev_t = first.t;
    let mut max_ratio = 0.0_f64;
    let mut violations = 0u64;
    let mut first_violation = None;
    let mut final_lhs = 0.0;
    let mut final_env = c1;
    for row in rows {
        int_grad_n += row.grad_n_sq * (row.t - prev_t);
        prev_t = row.t;
        running_sup = running_sup.max(row.l2_n * row.l2_n);
        let lhs = running_sup + int_grad_n;
        let envelope = c1 * (c_tilde2 * row.int_lap_c_sq).exp();
        let ratio = lhs / envelope;
        max_ratio = max_ratio.max(ratio);
        if ratio > 1.0 {
            violations += 1;
            if first_violation.is_none() {
                first_violation = Some(row.t);
            }
        }
        final_lhs = lhs;
        final_env = envelope;
    }
    Ok(BoundReport {
        c_tilde1: c1,
        c_tilde2,
        max_ratio,
        violations,
        first_violation_t: first_violation,
        final_lhs,
        final_envelope: final_env,
    })
}

/// Empirical escape fractions over an ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct EscapeReport {
    pub thresholds: Vec<f64>,
    /// Fraction of trajectories whose radius ever reached each threshold.
    pub fractions: Vec<f64>,
    pub paths: usize,
    pub monotone_nonincreasing: bool,
}

/// Minimum ensemble size for the escape and moment estimators.
pub const MIN_ENSEMBLE: usize = 30;

pub fn escape_probability(
    ensemble: &[Vec<EntropyLedgerRow>],
    thresholds: &[f64],
) -> Result<EscapeReport> {
    if ensemble.len() < MIN_ENSEMBLE {
        return Err(CnsError::DegenerateInput(format!(
            "escape probability needs at least {MIN_ENSEMBLE} trajectories, got {}",
            ensemble.len()
        )));
    }
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CnsError::InvalidParameter {
            name: "thresholds",
            message: "threshold list must be nonempty and strictly increasing".into(),
        });
    }
    let sup_radii: Vec<f64> = ensemble
        .iter()
        .map(|rows| rows.iter().map(|r| r.radius).fold(0.0_f64, f64::max))
        .collect();
    let fractions: Vec<f64> = thresholds
        .iter()
        .map(|d| sup_radii.iter().filter(|r| **r >= *d).count() as f64 / ensemble.len() as f64)
        .collect();
    let monotone = fractions.windows(2).all(|w| w[1] <= w[0]);
    Ok(EscapeReport {
        thresholds: thresholds.to_vec(),
        fractions,
        paths: ensemble.len(),
        monotone_nonincreasing: monotone,
    })
}

/// One Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub mean: f64,
    pub std_err: f64,
}

impl MomentEstimate {
    fn from_samples(p: f64, samples: &[f64]) -> Self {
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        Self {
            p,
            mean,
            std_err: (var / k).sqrt(),
        }
    }

    /// Whether two estimates agree within the combined 3-sigma band.
    pub fn overlaps_3sigma(&self, other: &Self) -> bool {
        (self.mean - other.mean).abs() <= 3.0 * (self.std_err + other.std_err)
    }
}

/// Ensemble moment estimates of the Lyapunov functional and its dissipation.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub paths: usize,
    /// `E[(sup_t F)^p]` per requested `p`.
    pub sup_f: Vec<MomentEstimate>,
    /// `E[(∫ G dt)^p]`.
    pub int_g: Vec<MomentEstimate>,
    /// `E[sup_t ||c||_{H^1}^{2p}]`.
    pub sup_h1_c: Vec<MomentEstimate>,
    /// `E[sup_t ||u||_H^{2p}]`.
    pub sup_energy_u: Vec<MomentEstimate>,
    pub all_finite: bool,
}

pub fn moment_estimates(ensemble: &[Vec<EntropyLedgerRow>], p_list: &[f64]) -> Result<MomentReport> {
    if ensemble.len() < 2 {
        return Err(CnsError::DegenerateInput(
            "moment estimates need at least two trajectories".into(),
        ));
    }
    if p_list.iter().any(|p| !(1.0..=3.0).contains(p)) {
        return Err(CnsError::InvalidParameter {
            name: "p_list",
            message: "moment orders must lie in [1, 3]".into(),
        });
    }
    let mut sup_f = Vec::with_capacity(ensemble.len());
    let mut int_g = Vec::with_capacity(ensemble.len());
    let mut sup_h1 = Vec::with_capacity(ensemble.len());
    let mut sup_eu = Vec::with_capacity(ensemble.len());
    for rows in ensemble {
        if rows.is_empty() {
            return Err(CnsError::DegenerateInput("empty trajectory in ensemble".into()));
        }
        sup_f.push(rows.iter().map(|r| r.f_val).fold(f64::MIN, f64::max));
        sup_h1.push(rows.iter().map(|r| r.h1_c).fold(0.0_f64, f64::max));
        sup_eu.push(rows.iter().map(|r| r.energy_u).fold(0.0_f64, f64::max));
        let mut integral = 0.0;
        for pair in rows.windows(2) {
            integral += pair[1].g_val * (pair[1].t - pair[0].t);
        }
        int_g.push(integral);
    }

    let collect = |samples: &[f64], transform: &dyn Fn(f64, f64) -> f64| -> Vec<MomentEstimate> {
        p_list
            .iter()
            .map(|&p| {
                let powered: Vec<f64> = samples.iter().map(|&v| transform(v, p)).collect();
                MomentEstimate::from_samples(p, &powered)
            })
            .collect()
    };
    let plain_pow = |v: f64, p: f64| v.powf(p);
    let sq_pow = |v: f64, p: f64| v.powf(2.0 * p);

    let report = MomentReport {
        paths: ensemble.len(),
        sup_f: collect(&sup_f, &plain_pow),
        int_g: collect(&int_g, &plain_pow),
        sup_h1_c: collect(&sup_h1, &sq_pow),
        sup_energy_u: collect(&sup_eu, &plain_pow),
        all_finite: true,
    };
    let all_finite = report
        .sup_f
        .iter()
        .chain(&report.int_g)
        .chain(&report.sup_h1_c)
        .chain(&report.sup_energy_u)
        .all(|e| e.mean.is_finite() && e.std_err.is_finite());
    Ok(MomentReport {
        all_finite,
        ..report
    })
}

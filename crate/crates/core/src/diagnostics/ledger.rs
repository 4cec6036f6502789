//! Per-step entropy-energy ledger.
//!
//! Each row records the Lyapunov functional
//! `F = ∫(n+1)ln(n+1) + ||grad sqrt(c)||^2 + ||u||_H^2`,
//! its dissipation
//! `G = ||grad sqrt(n+1)||^2 + ||Δ sqrt(c)||^2 + || |grad sqrt(c)|^2 / sqrt(c) ||^2
//!      + ∫ n |grad sqrt(c)|^2 + ||grad u||^2`
//! (all five terms, stored separately), the conserved quantities, the noise
//! and jump work, and the discrete budget residual
//!
//! `residual = ΔF + λ1·G·dt − C_budget·(1 + F)·dt − λ2·noise_work − (λ2/2)·jump_work`
//!
//! with `λ1 = min(1/24, 2 − λ0)` and `λ2 = 2 + 16||c0||_inf/(2 − λ0)`.
//! A nonpositive residual is the discrete trace of the entropy-energy
//! inequality; `C_budget` is calibrated once on a reference run and frozen.

use crate::integrator::SimulationState;
use crate::spectral::{
    energy, full_spectrum, grad_sq, l2_sq, laplacian_sq, norms, quadrature, sqrt_c_gradient,
    velocity_grad_sq, EPS_SQRT_FLOOR,
};
use serde::Serialize;

/// Constants entering the discrete budget.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BudgetParams {
    /// Gradient coefficient `λ0` of the noise growth bound.
    pub lambda0: f64,
    /// `||c_0||_inf` of the initial data.
    pub c0_linf: f64,
    /// Calibrated budget constant (frozen after the reference run).
    pub c_budget: f64,
}

impl BudgetParams {
    /// `λ1 = min(1/24, 2 − λ0)`.
    pub fn lambda1(&self) -> f64 {
        (1.0_f64 / 24.0).min(2.0 - self.lambda0)
    }

    /// `λ2 = 2 + 16 ||c_0||_inf / (2 − λ0)`.
    pub fn lambda2(&self) -> f64 {
        2.0 + 16.0 * self.c0_linf / (2.0 - self.lambda0)
    }

    /// Squared BDG absorption constant of the `p`-th moment estimate:
    /// `(27 · 2^{p−1} · λ2^p · λ0^{p/2} / (2 sqrt 2))^2
    ///  = 3^6 · 2^{2p−2} · λ2^{2p} · λ0^p / 8`.
    pub fn martingale_absorption_sq(&self, p: f64) -> f64 {
        3.0_f64.powi(6) * (2.0 * p - 2.0).exp2() * self.lambda2().powf(2.0 * p)
            * self.lambda0.powf(p)
            / 8.0
    }

    /// The absorption margin: the squared BDG constant must stay strictly
    /// below `λ1^p`, which the smallness condition on `λ0` guarantees for
    /// every `p` in `[1, 3]`.
    pub fn martingale_margin_ok(&self, p: f64) -> bool {
        self.martingale_absorption_sq(p) < self.lambda1().powf(p)
    }
}

/// The five dissipation terms.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct GTerms {
    /// `||grad sqrt(n+1)||_{L^2}^2`
    pub grad_sqrt_n1: f64,
    /// `||Δ sqrt(c)||_{L^2}^2`
    pub lap_sqrt_c: f64,
    /// `|| |grad sqrt(c)|^2 / sqrt(c) ||_{L^2}^2`
    pub quartic: f64,
    /// `∫ n |grad sqrt(c)|^2 dx`
    pub cross: f64,
    /// `||grad u||_{L^2}^2`
    pub grad_u: f64,
}

impl GTerms {
    pub fn total(&self) -> f64 {
        self.grad_sqrt_n1 + self.lap_sqrt_c + self.quartic + self.cross + self.grad_u
    }
}

/// Noise bookkeeping handed over by the stepper.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepWork {
    /// `<G(u) dW, u>` of the step.
    pub noise_work: f64,
    /// Quadratic variation increment `dt * sum_i <G_i(u), u>^2`
    /// (zero unless tracking is enabled).
    pub noise_qv: f64,
    /// Realized jump contribution to `||u||^2` plus compensator work.
    pub jump_work: f64,
    pub jump_count: usize,
}

/// One ledger row.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyLedgerRow {
    pub step: u64,
    pub t: f64,
    pub f_val: f64,
    pub g_val: f64,
    pub g_grad_sqrt_n1: f64,
    pub g_lap_sqrt_c: f64,
    pub g_quartic: f64,
    pub g_cross: f64,
    pub g_grad_u: f64,
    pub phi_n: f64,
    pub grad_sqrt_c_sq: f64,
    pub energy_u: f64,
    pub mass_n: f64,
    pub min_n: f64,
    pub min_c: f64,
    pub linf_c: f64,
    pub l2_n: f64,
    pub grad_n_sq: f64,
    pub h1_c: f64,
    pub lap_c_sq: f64,
    /// Running `∫ ||n||_{H^1}^2 ds`.
    pub int_h1_n_sq: f64,
    /// Running `∫ ||Δc||_{L^2}^2 ds`.
    pub int_lap_c_sq: f64,
    /// `sqrt(||n||_{L^2}^2 + ||c||_{H^1}^2 + ||u||_H^2)`, the stopping radius.
    pub radius: f64,
    pub noise_work: f64,
    pub noise_qv: f64,
    pub jump_work: f64,
    pub jump_count: u64,
    pub budget_residual: f64,
    /// Grid points with `n <= -1` (excluded from `phi_n`).
    pub neg_n_cells: u64,
    /// Grid points with `c` below the square-root floor.
    pub neg_c_cells: u64,
    pub stopped: bool,
}

impl EntropyLedgerRow {
    /// Column names in CSV order.
    pub const COLUMNS: &'static [&'static str] = &[
        "step",
        "t",
        "f_val",
        "g_val",
        "g_grad_sqrt_n1",
        "g_lap_sqrt_c",
        "g_quartic",
        "g_cross",
        "g_grad_u",
        "phi_n",
        "grad_sqrt_c_sq",
        "energy_u",
        "mass_n",
        "min_n",
        "min_c",
        "linf_c",
        "l2_n",
        "grad_n_sq",
        "h1_c",
        "lap_c_sq",
        "int_h1_n_sq",
        "int_lap_c_sq",
        "radius",
        "noise_work",
        "noise_qv",
        "jump_work",
        "jump_count",
        "budget_residual",
        "neg_n_cells",
        "neg_c_cells",
        "stopped",
    ];
}

/// Evaluate the five dissipation terms at a state.
pub fn g_terms(state: &SimulationState) -> GTerms {
    let n_phys = state.n.to_physical();
    let c_phys = state.c.to_physical();

    // sqrt(n+1) via the full (untruncated) spectrum of the root.
    let sqrt_n1_phys = n_phys.mapv(|v| (v + 1.0).max(EPS_SQRT_FLOOR).sqrt());
    let sqrt_n1 = full_spectrum(&state.n, &sqrt_n1_phys);
    let grad_sqrt_n1 = grad_sq(&sqrt_n1);

    let sqrt_c_phys = c_phys.mapv(|v| v.max(EPS_SQRT_FLOOR).sqrt());
    let sqrt_c = full_spectrum(&state.c, &sqrt_c_phys);
    let lap_sqrt_c = laplacian_sq(&sqrt_c);

    let (gx, gy, _, _) = sqrt_c_gradient(&state.c, &c_phys, EPS_SQRT_FLOOR);
    let grad_sq_point = ndarray::Array2::from_shape_fn(gx.dim(), |idx| {
        gx[idx] * gx[idx] + gy[idx] * gy[idx]
    });
    // | |grad sqrt c|^2 / sqrt c |^2 integrates (sqrt c)^-2 |grad sqrt c|^4.
    let quartic_point = ndarray::Array2::from_shape_fn(gx.dim(), |idx| {
        let s = sqrt_c_phys[idx];
        let g = grad_sq_point[idx];
        (g / s) * (g / s)
    });
    let quartic = quadrature(&state.c, &quartic_point);
    let cross_point = &grad_sq_point * &n_phys;
    let cross = quadrature(&state.c, &cross_point);

    GTerms {
        grad_sqrt_n1,
        lap_sqrt_c,
        quartic,
        cross,
        grad_u: velocity_grad_sq(&state.u),
    }
}

/// Assemble a ledger row for `state`.
///
/// `prev` is the previous row (None for the initial row); `work` is the
/// stepper's noise bookkeeping; `dt` is the step that led to this state
/// (ignored for the initial row).
pub fn entropy_row(
    state: &SimulationState,
    prev: Option<&EntropyLedgerRow>,
    work: StepWork,
    dt: f64,
    params: &BudgetParams,
) -> EntropyLedgerRow {
    let ent = crate::spectral::entropy_integrals(&state.n, &state.c, EPS_SQRT_FLOOR);
    let g = g_terms(state);
    let energy_u = energy(&state.u);
    let f_val = ent.phi_n + ent.grad_sqrt_c_sq + energy_u;
    let g_val = g.total();

    let n_norms = norms(&state.n);
    let c_norms = norms(&state.c);
    let min_n = crate::spectral::grid_min(&state.n);
    let min_c = crate::spectral::grid_min(&state.c);
    let grad_n_sq = grad_sq(&state.n);
    let lap_c_sq = laplacian_sq(&state.c);
    let l2_n_sq = l2_sq(&state.n);
    let h1_c_sq = c_norms.h1 * c_norms.h1;
    let radius = (l2_n_sq + h1_c_sq + energy_u).sqrt();

    let (step, int_h1_n_sq, int_lap_c_sq, budget_residual) = match prev {
        None => (0, 0.0, 0.0, 0.0),
        Some(p) => {
            let lambda1 = params.lambda1();
            let lambda2 = params.lambda2();
            let delta_f = f_val - p.f_val;
            let residual = delta_f + lambda1 * g_val * dt
                - params.c_budget * (1.0 + p.f_val) * dt
                - lambda2 * work.noise_work
                - 0.5 * lambda2 * work.jump_work;
            (
                p.step + 1,
                p.int_h1_n_sq + (l2_n_sq + grad_n_sq) * dt,
                p.int_lap_c_sq + lap_c_sq * dt,
                residual,
            )
        }
    };

    EntropyLedgerRow {
        step,
        t: state.t,
        f_val,
        g_val,
        g_grad_sqrt_n1: g.grad_sqrt_n1,
        g_lap_sqrt_c: g.lap_sqrt_c,
        g_quartic: g.quartic,
        g_cross: g.cross,
        g_grad_u: g.grad_u,
        phi_n: ent.phi_n,
        grad_sqrt_c_sq: ent.grad_sqrt_c_sq,
        energy_u,
        mass_n: n_norms.mass,
        min_n,
        min_c,
        linf_c: c_norms.linf,
        l2_n: l2_n_sq.sqrt(),
        grad_n_sq,
        h1_c: c_norms.h1,
        lap_c_sq,
        int_h1_n_sq,
        int_lap_c_sq,
        radius,
        noise_work: work.noise_work,
        noise_qv: work.noise_qv,
        jump_work: work.jump_work,
        jump_count: work.jump_count as u64,
        budget_residual,
        neg_n_cells: ent.n_below_minus_one as u64,
        neg_c_cells: ent.c_below_floor as u64,
        stopped: state.stopped_at.is_some(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::SimulationState;
    use crate::noise::TrajectoryRng;
    use crate::spectral::{SolenoidalVelocityField, SpectralScalarField, TorusGrid};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn params() -> BudgetParams {
        BudgetParams {
            lambda0: 1e-9,
            c0_linf: 1.0,
            c_budget: 1.0,
        }
    }

    fn state_from(
        n: SpectralScalarField,
        c: SpectralScalarField,
        u: SolenoidalVelocityField,
    ) -> SimulationState {
        SimulationState::from_parts(n, c, u, 0.0, TrajectoryRng::seed_from_u64(0), None)
    }

    #[test]
    fn lambda_constants_verbatim() {
        let p = params();
        assert_relative_eq!(p.lambda1(), 1.0 / 24.0, max_relative = 1e-15);
        assert_relative_eq!(
            p.lambda2(),
            2.0 + 16.0 / (2.0 - 1e-9),
            max_relative = 1e-15
        );
        let big = BudgetParams {
            lambda0: 1.99,
            c0_linf: 0.0,
            c_budget: 1.0,
        };
        assert_relative_eq!(big.lambda1(), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn martingale_margin_holds_below_threshold_and_fails_above() {
        // At the closed-form threshold for ||c0||_inf = 1 the margin holds
        // with room for every p in [1, 3].
        let threshold = crate::noise::lambda0_threshold(1.0);
        let p_at = BudgetParams {
            lambda0: threshold * 0.999,
            c0_linf: 1.0,
            c_budget: 1.0,
        };
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!(
                p_at.martingale_margin_ok(p),
                "margin must hold at the admissible lambda0, p = {p}"
            );
            assert!(p_at.martingale_absorption_sq(p) < p_at.lambda1().powf(p));
        }
        // Closed form at p = 1:
        // 3^6 * lambda2^2 * lambda0 / 8.
        let l2 = p_at.lambda2();
        assert_relative_eq!(
            p_at.martingale_absorption_sq(1.0),
            729.0 * l2 * l2 * p_at.lambda0 / 8.0,
            max_relative = 1e-13
        );

        // A gradient coefficient far above the threshold loses the margin.
        let p_big = BudgetParams {
            lambda0: 1e-3,
            c0_linf: 1.0,
            c_budget: 1.0,
        };
        assert!(!p_big.martingale_margin_ok(1.0));
    }

    #[test]
    fn zero_state_zero_functionals() {
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        // c = 0 is degenerate under the sqrt floor; a zero state means all
        // fields zero, for which every functional vanishes.
        let st = state_from(
            SpectralScalarField::zero(g.clone()),
            SpectralScalarField::zero(g.clone()),
            SolenoidalVelocityField::zero(g),
        );
        let row = entropy_row(&st, None, StepWork::default(), 0.0, &params());
        assert!(row.f_val.abs() < 1e-12);
        assert!(row.g_val.abs() < 1e-12);
        assert_eq!(row.step, 0);
    }

    #[test]
    fn constant_state_closed_form_f() {
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        let st = state_from(
            SpectralScalarField::from_fn(g.clone(), |_, _| 1.0),
            SpectralScalarField::from_fn(g.clone(), |_, _| 1.0),
            SolenoidalVelocityField::zero(g),
        );
        let row = entropy_row(&st, None, StepWork::default(), 0.0, &params());
        let expected = 8.0 * PI * PI * 2.0_f64.ln();
        assert_relative_eq!(row.f_val, expected, max_relative = 1e-10);
        assert!(row.g_val.abs() < 1e-10);
    }

    #[test]
    fn all_five_dissipation_terms_present() {
        // A state exercising every term; the row total must equal the sum
        // of the five named terms exactly.
        let g = TorusGrid::new(2.0 * PI, 64, 21).unwrap();
        let st = state_from(
            SpectralScalarField::from_fn(g.clone(), |x, y| 1.0 + 0.5 * (x + y).cos()),
            SpectralScalarField::from_fn(g.clone(), |x, y| 1.0 + 0.4 * x.sin() * y.cos()),
            SolenoidalVelocityField::from_fns(
                g,
                |x, y| 0.3 * x.sin() * y.cos(),
                |x, y| -0.3 * x.cos() * y.sin(),
            ),
        );
        let terms = g_terms(&st);
        for (name, v) in [
            ("grad_sqrt_n1", terms.grad_sqrt_n1),
            ("lap_sqrt_c", terms.lap_sqrt_c),
            ("quartic", terms.quartic),
            ("cross", terms.cross),
            ("grad_u", terms.grad_u),
        ] {
            assert!(v > 0.0, "dissipation term {name} vanished on a generic state");
        }
        let row = entropy_row(&st, None, StepWork::default(), 0.0, &params());
        let total = row.g_grad_sqrt_n1 + row.g_lap_sqrt_c + row.g_quartic + row.g_cross + row.g_grad_u;
        assert_relative_eq!(row.g_val, total, max_relative = 1e-14);
    }

    #[test]
    fn radius_consistent_with_components() {
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        let st = state_from(
            SpectralScalarField::from_fn(g.clone(), |x, _| 1.0 + 0.2 * x.cos()),
            SpectralScalarField::from_fn(g.clone(), |_, y| 1.0 + 0.1 * y.sin()),
            SolenoidalVelocityField::from_fns(
                g,
                |x, y| 0.2 * x.sin() * y.cos(),
                |x, y| -0.2 * x.cos() * y.sin(),
            ),
        );
        let row = entropy_row(&st, None, StepWork::default(), 0.0, &params());
        let reconstructed = (row.l2_n * row.l2_n + row.h1_c * row.h1_c + row.energy_u).sqrt();
        assert_relative_eq!(row.radius, reconstructed, max_relative = 1e-12);
    }
}

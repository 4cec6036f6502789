//! Trajectory-level invariants exercised through the full stepper:
//! divergence-freeness after noisy steps, mass invariance with noise on,
//! the decoupled heat-decay envelope, and stopped-state freezing.

use cns_core::diagnostics::{cor32_bound, entropy_row, BudgetParams, StepWork};
use cns_core::dynamics::PotentialField;
use cns_core::integrator::{
    initialize, run, step, DiffusionMode, InitialData, SimulationState, StepScheme,
};
use cns_core::noise::{
    JumpDriverConfig, NoiseDrivers, TrajectoryRng, WienerDriverConfig, WienerMode,
};
use cns_core::spectral::{energy, SolenoidalVelocityField, SpectralScalarField, TorusGrid};
use ndarray::Array2;
use rand::SeedableRng;
use std::f64::consts::PI;
use std::sync::Arc;

fn grid32() -> Arc<TorusGrid> {
    TorusGrid::new(2.0 * PI, 32, 10).unwrap()
}

fn budget() -> BudgetParams {
    BudgetParams {
        lambda0: 1e-9,
        c0_linf: 1.0,
        c_budget: 1.0,
    }
}

fn noisy_drivers(grid: &Arc<TorusGrid>) -> NoiseDrivers {
    let n = grid.points();
    let modes = vec![
        WienerMode {
            b_x: Array2::from_elem((n, n), 0.2),
            b_y: Array2::from_elem((n, n), -0.1),
            c: Array2::ones((n, n)),
        },
        WienerMode {
            b_x: Array2::zeros((n, n)),
            b_y: Array2::zeros((n, n)),
            c: Array2::from_shape_fn((n, n), |(i, _)| {
                0.5 * (2.0 * PI * i as f64 / n as f64).cos()
            }),
        },
    ];
    NoiseDrivers::new(
        WienerDriverConfig::new(grid.clone(), 0.3, modes).unwrap(),
        JumpDriverConfig::with_default_law(10.0).unwrap(),
    )
}

fn bump_data(grid: &Arc<TorusGrid>) -> InitialData {
    let n = grid.points();
    let q = 2.0 * PI / grid.length();
    InitialData {
        n0: Array2::from_shape_fn((n, n), |(i, j)| {
            let x = grid.coordinate(j);
            let y = grid.coordinate(i);
            0.1 + (2.0 * ((q * x).cos() + (q * y).cos() - 2.0)).exp()
        }),
        c0: Array2::from_elem((n, n), 1.0),
        u0_x: Array2::from_shape_fn((n, n), |(i, j)| {
            0.3 * (q * grid.coordinate(j)).sin() * (q * grid.coordinate(i)).cos()
        }),
        u0_y: Array2::from_shape_fn((n, n), |(i, j)| {
            -0.3 * (q * grid.coordinate(j)).cos() * (q * grid.coordinate(i)).sin()
        }),
    }
}

#[test]
fn velocity_stays_divergence_free_under_noise_and_jumps() {
    let g = grid32();
    let (mut state, _) = initialize(g.clone(), &bump_data(&g), TrajectoryRng::seed_from_u64(11))
        .unwrap();
    let scheme = StepScheme::new(1e-3, DiffusionMode::IntegratingFactor, 1e6, 1.0).unwrap();
    let phi = PotentialField::default_sine(g.clone(), 1.0);
    let drivers = noisy_drivers(&g);
    for _ in 0..50 {
        step(&mut state, &scheme, &phi, &drivers).unwrap();
        let norm = energy(&state.u).sqrt();
        assert!(
            state.u.max_mode_divergence() <= 1e-14 * norm.max(1.0),
            "divergence leaked at t = {}",
            state.t
        );
    }
}

#[test]
fn mass_exact_with_noise_on() {
    // Noise forces only the fluid, so the mass of n is conserved exactly.
    let g = grid32();
    let (state, _) =
        initialize(g.clone(), &bump_data(&g), TrajectoryRng::seed_from_u64(5)).unwrap();
    let scheme = StepScheme::new(1e-3, DiffusionMode::IntegratingFactor, 1e6, 0.05).unwrap();
    let phi = PotentialField::default_sine(g.clone(), 1.0);
    let record = run(state, &scheme, &phi, &noisy_drivers(&g), &budget());
    assert!(record.fault.is_none());
    let mass0 = record.rows[0].mass_n;
    for row in &record.rows {
        assert!(
            (row.mass_n - mass0).abs() <= 1e-10 * mass0.abs(),
            "mass drifted at step {}",
            row.step
        );
    }
}

#[test]
fn decoupled_heat_decay_stays_under_constant_envelope() {
    // Forced decoupling (grad c = 0 throughout): the trajectory is the
    // exact heat flow of n with c frozen at a constant, so the envelope
    // degenerates to the constant 1 + ||n_0||^2.
    let g = grid32();
    let c0 = SpectralScalarField::from_fn(g.clone(), |_, _| 1.0);
    let params = budget();
    let dt = 1e-3;
    let mut rows = Vec::new();
    for k in 0..=200usize {
        let t = k as f64 * dt;
        let n_t = SpectralScalarField::from_fn(g.clone(), move |x, y| {
            0.2 * ((-t).exp() * x.cos() + (-4.0 * t).exp() * (2.0 * y).sin())
        });
        assert!(cns_core::spectral::l2_sq(&n_t) < 2.0);
        let state = SimulationState::from_parts(
            n_t,
            c0.clone(),
            SolenoidalVelocityField::zero(g.clone()),
            t,
            TrajectoryRng::seed_from_u64(0),
            None,
        );
        let row = entropy_row(&state, rows.last(), StepWork::default(), dt, &params);
        rows.push(row);
    }
    // n decays monotonically in L^2 under pure diffusion.
    for pair in rows.windows(2) {
        assert!(pair[1].l2_n <= pair[0].l2_n + 1e-14);
    }
    let report = cor32_bound(&rows, 1.0).unwrap();
    assert!(report.pass(), "heat decay exceeded the constant envelope");
    assert!((report.final_envelope - report.c_tilde1).abs() < 1e-9 * report.c_tilde1);
}

#[test]
fn stopped_trajectory_rejects_further_steps() {
    let g = grid32();
    let (mut state, _) =
        initialize(g.clone(), &bump_data(&g), TrajectoryRng::seed_from_u64(3)).unwrap();
    state.stopped_at = Some(state.t);
    let scheme = StepScheme::new(1e-3, DiffusionMode::IntegratingFactor, 1e6, 1.0).unwrap();
    let phi = PotentialField::default_sine(g.clone(), 1.0);
    assert!(step(&mut state, &scheme, &phi, &NoiseDrivers::off(g)).is_err());
}

#[test]
fn zero_equilibrium_is_admitted_and_inert() {
    let g = grid32();
    let n = g.points();
    let zero = InitialData {
        n0: Array2::zeros((n, n)),
        c0: Array2::zeros((n, n)),
        u0_x: Array2::zeros((n, n)),
        u0_y: Array2::zeros((n, n)),
    };
    let (state, report) = initialize(g.clone(), &zero, TrajectoryRng::seed_from_u64(0)).unwrap();
    assert_eq!(report.c0_linf, 0.0);
    let scheme = StepScheme::new(1e-2, DiffusionMode::IntegratingFactor, 1e6, 0.05).unwrap();
    let phi = PotentialField::default_sine(g.clone(), 1.0);
    let record = run(state, &scheme, &phi, &NoiseDrivers::off(g.clone()), &budget());
    for row in &record.rows {
        assert_eq!(row.f_val, 0.0);
        assert_eq!(row.mass_n, 0.0);
        assert_eq!(row.radius, 0.0);
    }

    // A merely nonnegative (not strictly positive) profile is still rejected.
    let mut half = zero;
    half.n0.fill(1.0);
    half.n0[[0, 0]] = 0.0;
    half.c0.fill(1.0);
    assert!(initialize(g, &half, TrajectoryRng::seed_from_u64(0)).is_err());
}

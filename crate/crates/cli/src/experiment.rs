//! Experiment orchestration: build the machinery from a config, run the
//! requested study, emit artifacts and evaluate every PASS/FAIL gate.

use crate::config::ExperimentConfig;
use crate::presets;
use crate::reports::{
    failed_gates, ledger_csv, resolve_output_dir, write_bytes, write_summary, write_text, Gate,
};
use crate::seeds::trajectory_rng;
use anyhow::{anyhow, bail, Context as _, Result};
use cns_core::diagnostics::{
    cor32_bound, entropy_row, escape_probability, lemma31_check, moment_estimates,
    uniqueness_metrics, BudgetParams, EntropyLedgerRow, StepWork,
};
use cns_core::dynamics::PotentialField;
use cns_core::integrator::{
    checkpoint, initialize, run, step, step_with_increment, InitReport, InitialData,
    SimulationState, StepScheme, TrajectoryRecord,
};
use cns_core::noise::{sample_increment, NoiseDrivers};
use cns_core::spectral::{l2_sq, SolenoidalVelocityField, SpectralScalarField, TorusGrid};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Process exit codes of the CLI contract.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_GATE_FAILURE: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_RUNTIME_FAULT: i32 = 3;

/// Gates, kind-specific reports, artifact names, and an optional fault.
pub type KindResult = (Vec<Gate>, Value, Vec<String>, Option<String>);

/// Everything a study needs, built once from the config.
pub struct Context {
    pub config: ExperimentConfig,
    pub grid: Arc<TorusGrid>,
    pub scheme: StepScheme,
    pub phi: PotentialField,
    pub drivers: NoiseDrivers,
    pub data: InitialData,
    pub init: InitReport,
    pub budget: BudgetParams,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn build(config: ExperimentConfig) -> Result<Self> {
        let grid = config.build_grid()?;
        let scheme = config.build_scheme()?;
        let phi = presets::potential(&grid, &config.potential)?;
        let wiener = presets::wiener_driver(&grid, &config.wiener)?;
        let jumps = cns_core::noise::JumpDriverConfig::new(
            config.jumps.rate,
            config.jumps.beta_alpha,
            config.jumps.beta_beta,
        )?;
        let drivers = NoiseDrivers::new(wiener, jumps);
        let data = presets::initial_data(&grid, &config.initial)?;
        // Probe initialization: validates the data and yields ||c_0||_inf.
        let (_, init) = initialize(grid.clone(), &data, trajectory_rng(0, 0))?;
        let lambda0 = config.calibration.lambda0.unwrap_or(init.lambda0_threshold);
        let budget = BudgetParams {
            lambda0,
            c0_linf: init.c0_linf,
            c_budget: config.calibration.c_budget,
        };
        let out_dir = resolve_output_dir(&config.output.directory);
        Ok(Self {
            config,
            grid,
            scheme,
            phi,
            drivers,
            data,
            init,
            budget,
            out_dir,
        })
    }

    pub fn state_for(&self, index: u32) -> Result<SimulationState> {
        let (state, _) = initialize(
            self.grid.clone(),
            &self.data,
            trajectory_rng(self.config.experiment.master_seed, index),
        )?;
        Ok(state)
    }

    fn constants_json(&self) -> Value {
        json!({
            "lambda0": self.budget.lambda0,
            "lambda1": self.budget.lambda1(),
            "lambda2": self.budget.lambda2(),
            "martingale_margin_ok": {
                "p1": self.budget.martingale_margin_ok(1.0),
                "p2": self.budget.martingale_margin_ok(2.0),
                "p3": self.budget.martingale_margin_ok(3.0),
            },
            "c_budget": self.budget.c_budget,
            "c_tilde2": self.config.calibration.c_tilde2,
            "c_uniq": self.config.calibration.c_uniq,
            "calibration_mode": self.config.calibration.mode,
        })
    }

    fn init_json(&self) -> Value {
        serde_json::to_value(self.init).expect("serializable")
    }

    fn config_json(&self) -> Value {
        serde_json::to_value(&self.config).expect("serializable")
    }

    /// Whether the budget and envelope gates are enforced for this run:
    /// deterministic runs against frozen constants only.
    fn deterministic_gates(&self) -> bool {
        !self.drivers.active() && self.config.calibration.mode == "frozen"
    }
}

/// Drive one trajectory, optionally writing field snapshots every
/// `stride` steps (0 disables).
pub fn drive_with_snapshots(
    mut state: SimulationState,
    scheme: &StepScheme,
    phi: &PotentialField,
    drivers: &NoiseDrivers,
    budget: &BudgetParams,
    stride: u64,
    snap_dir: Option<&Path>,
) -> Result<TrajectoryRecord> {
    let snapshot = |state: &SimulationState, step_index: u64| -> Result<()> {
        if stride > 0 && step_index % stride == 0 {
            if let Some(dir) = snap_dir {
                write_bytes(
                    &dir.join(format!("step_{step_index:06}.ckpt")),
                    &checkpoint(state),
                )?;
            }
        }
        Ok(())
    };

    if state.stopped_at.is_none()
        && (state.stopping_radius() >= scheme.stop_radius || state.t >= scheme.stop_radius)
    {
        state.stopped_at = Some(state.t);
    }
    let mut rows = vec![entropy_row(&state, None, StepWork::default(), 0.0, budget)];
    snapshot(&state, 0)?;

    while state.stopped_at.is_none() && state.t < scheme.horizon - 0.5 * scheme.dt {
        let backup = state.clone();
        match step(&mut state, scheme, phi, drivers) {
            Ok(work) => {
                let row = entropy_row(&state, rows.last(), work, scheme.dt, budget);
                snapshot(&state, row.step)?;
                rows.push(row);
            }
            Err(err) => {
                return Ok(TrajectoryRecord {
                    rows,
                    final_state: backup,
                    stopped_at: None,
                    fault: Some(err.to_string()),
                });
            }
        }
    }
    Ok(TrajectoryRecord {
        stopped_at: state.stopped_at,
        rows,
        final_state: state,
        fault: None,
    })
}

/// Budget-residual scan: every step after the first must have a
/// nonpositive residual; rows with flagged negativity are excluded from
/// the gate and counted separately.
fn budget_scan(rows: &[EntropyLedgerRow]) -> (bool, Value) {
    let mut max_residual = f64::NEG_INFINITY;
    let mut excluded = 0u64;
    let mut positive = 0u64;
    let mut checked = 0u64;
    for row in rows.iter().skip(1) {
        if row.neg_c_cells > 0 || row.neg_n_cells > 0 {
            excluded += 1;
            continue;
        }
        checked += 1;
        max_residual = max_residual.max(row.budget_residual);
        if row.budget_residual > 0.0 {
            positive += 1;
        }
    }
    let pass = positive == 0;
    (
        pass,
        json!({
            "max_residual": if checked > 0 { max_residual } else { f64::NAN },
            "steps_checked": checked,
            "steps_excluded_negativity": excluded,
            "positive_residual_steps": positive,
        }),
    )
}

/// Constants a calibration run would freeze: the smallest `C_budget` and
/// `C_tilde2` making their gates pass on this trajectory, with margin.
fn calibration_suggestions(rows: &[EntropyLedgerRow], budget: &BudgetParams) -> Value {
    let lambda1 = budget.lambda1();
    let mut c_budget_req = 0.0_f64;
    for pair in rows.windows(2) {
        let (prev, row) = (&pair[0], &pair[1]);
        if row.neg_c_cells > 0 || row.neg_n_cells > 0 {
            continue;
        }
        let dt = row.t - prev.t;
        if dt <= 0.0 {
            continue;
        }
        let needed = (row.f_val - prev.f_val + lambda1 * row.g_val * dt
            - budget.lambda2() * row.noise_work
            - 0.5 * budget.lambda2() * row.jump_work)
            / ((1.0 + prev.f_val) * dt);
        c_budget_req = c_budget_req.max(needed);
    }

    let first = &rows[0];
    let c1 = 1.0 + first.l2_n * first.l2_n;
    let mut running_sup = 0.0_f64;
    let mut int_grad = 0.0_f64;
    let mut prev_t = first.t;
    let mut c2_req = 0.0_f64;
    for row in rows {
        int_grad += row.grad_n_sq * (row.t - prev_t);
        prev_t = row.t;
        running_sup = running_sup.max(row.l2_n * row.l2_n);
        let lhs = running_sup + int_grad;
        if lhs > c1 && row.int_lap_c_sq > 1e-14 {
            c2_req = c2_req.max((lhs / c1).ln() / row.int_lap_c_sq);
        }
    }
    json!({
        "c_budget_required": c_budget_req,
        "c_budget_suggested": (1.25 * c_budget_req).max(1.0),
        "c_tilde2_required": c2_req,
        "c_tilde2_suggested": if c2_req > 0.0 { 1.25 * c2_req } else { 1.0 },
    })
}

fn single_gates(ctx: &Context, rows: &[EntropyLedgerRow]) -> Result<Vec<Gate>> {
    let mut gates = Vec::new();
    let inv = lemma31_check(rows, &ctx.config.tolerances.invariants())?;
    gates.push(Gate::enforced(
        "mass_conservation",
        inv.mass_pass,
        json!({"max_rel_drift": inv.max_mass_drift_rel, "tolerance": ctx.config.tolerances.mass_drift}),
    ));
    gates.push(Gate::enforced(
        "c_maximum_principle",
        inv.linf_pass,
        json!({"max_overshoot": inv.max_linf_overshoot, "tolerance": ctx.config.tolerances.linf_overshoot,
               "min_n": inv.min_n, "min_c": inv.min_c}),
    ));

    let enforced = ctx.deterministic_gates();
    let (budget_pass, budget_details) = budget_scan(rows);
    gates.push(if enforced {
        Gate::enforced("entropy_budget", budget_pass, budget_details)
    } else {
        Gate::observational("entropy_budget", budget_pass, budget_details)
    });

    let bound = cor32_bound(rows, ctx.config.calibration.c_tilde2)?;
    let bound_details = serde_json::to_value(bound).expect("serializable");
    gates.push(if enforced {
        Gate::enforced("exponential_l2_envelope", bound.pass(), bound_details)
    } else {
        Gate::observational("exponential_l2_envelope", bound.pass(), bound_details)
    });
    Ok(gates)
}

/// `single`: one trajectory, full ledger, invariant gates.
fn run_single(ctx: &Context) -> Result<KindResult> {
    let state = ctx.state_for(0)?;
    let stride = ctx.config.output.snapshot_stride;
    let snap_dir = ctx.out_dir.join("snapshots");
    let record = drive_with_snapshots(
        state,
        &ctx.scheme,
        &ctx.phi,
        &ctx.drivers,
        &ctx.budget,
        stride,
        Some(&snap_dir),
    )?;

    write_text(&ctx.out_dir.join("ledger.csv"), &ledger_csv(&record.rows))?;
    write_bytes(
        &ctx.out_dir.join("final.ckpt"),
        &checkpoint(&record.final_state),
    )?;
    let mut artifacts = vec!["ledger.csv".into(), "final.ckpt".into(), "summary.json".into()];
    if stride > 0 {
        artifacts.push("snapshots/".into());
    }

    if let Some(fault) = &record.fault {
        return Ok((Vec::new(), json!({}), artifacts, Some(fault.clone())));
    }

    let gates = single_gates(ctx, &record.rows)?;
    let mut reports = json!({
        "steps": record.rows.len() - 1,
        "stopped_at": record.stopped_at,
        "final_radius": record.rows.last().map(|r| r.radius),
    });
    if ctx.config.calibration.mode == "calibrate" {
        reports["calibration"] = calibration_suggestions(&record.rows, &ctx.budget);
    }
    Ok((gates, reports, artifacts, None))
}

/// Run `paths` independent trajectories, fanned out over the configured
/// worker count. Trajectories own their seeds, so the index-ordered merge
/// is independent of scheduling.
fn run_trajectories(
    ctx: &Context,
    drivers: &NoiseDrivers,
    paths: usize,
) -> Result<Vec<TrajectoryRecord>> {
    let workers = ctx.config.experiment.workers.max(1).min(paths.max(1));
    if workers == 1 {
        return (0..paths)
            .map(|k| Ok(run(ctx.state_for(k as u32)?, &ctx.scheme, &ctx.phi, drivers, &ctx.budget)))
            .collect();
    }
    let mut slots: Vec<Option<TrajectoryRecord>> = (0..paths).map(|_| None).collect();
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (worker, chunk) in slots.chunks_mut(paths.div_ceil(workers)).enumerate() {
            let base = worker * paths.div_ceil(workers);
            handles.push(scope.spawn(move || -> Result<()> {
                for (offset, slot) in chunk.iter_mut().enumerate() {
                    let k = (base + offset) as u32;
                    let state = ctx.state_for(k)?;
                    *slot = Some(run(state, &ctx.scheme, &ctx.phi, drivers, &ctx.budget));
                }
                Ok(())
            }));
        }
        for handle in handles {
            handle.join().expect("worker thread panicked")?;
        }
        Ok(())
    })?;
    Ok(slots.into_iter().map(|s| s.expect("filled")).collect())
}

/// `ensemble`: K noise-coupled-seed trajectories, moment estimates and
/// martingale/isometry statistics.
fn run_ensemble(ctx: &Context) -> Result<KindResult> {
    let paths = ctx.config.experiment.paths.expect("validated");
    let mut drivers = ctx.drivers.clone();
    drivers.track_quadratic_variation = drivers.wiener.mode_count() > 0;

    let mut artifacts = vec!["summary.json".into()];
    let records = run_trajectories(ctx, &drivers, paths)?;
    let mut ensemble_rows: Vec<Vec<EntropyLedgerRow>> = Vec::with_capacity(paths);
    for (k, record) in records.into_iter().enumerate() {
        if let Some(fault) = record.fault {
            return Ok((
                Vec::new(),
                json!({"failed_path": k}),
                artifacts,
                Some(fault),
            ));
        }
        let name = format!("traj_{k:03}.csv");
        write_text(&ctx.out_dir.join(&name), &ledger_csv(&record.rows))?;
        artifacts.push(name);
        ensemble_rows.push(record.rows);
    }

    let moments = moment_estimates(&ensemble_rows, &[1.0, 2.0, 3.0])?;
    let mut gates = vec![Gate::enforced(
        "moments_finite",
        moments.all_finite,
        json!({"paths": moments.paths}),
    )];

    // Mass conservation holds path by path (noise forces only u).
    let mut worst_drift = 0.0_f64;
    for rows in &ensemble_rows {
        let inv = lemma31_check(rows, &ctx.config.tolerances.invariants())?;
        worst_drift = worst_drift.max(inv.max_mass_drift_rel);
    }
    gates.push(Gate::enforced(
        "mass_conservation_all_paths",
        worst_drift <= ctx.config.tolerances.mass_drift,
        json!({"max_rel_drift": worst_drift}),
    ));

    gates.extend(ensemble_statistics(ctx, &ensemble_rows));

    let reports = json!({
        "moments": moments,
        "paths": paths,
    });
    Ok((gates, reports, artifacts, None))
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Martingale and Ito-isometry checks on the ledger columns of a
/// completed ensemble.
fn ensemble_statistics(ctx: &Context, ensemble: &[Vec<EntropyLedgerRow>]) -> Vec<Gate> {
    let mut gates = Vec::new();
    let wiener_on = ctx.drivers.wiener.mode_count() > 0;
    let jumps_on = ctx.drivers.jumps.rate > 0.0;
    let dt = ctx.scheme.dt;
    let mu2 = ctx.drivers.jumps.mu2;

    if wiener_on {
        let totals: Vec<f64> = ensemble
            .iter()
            .map(|rows| rows.iter().skip(1).map(|r| r.noise_work).sum())
            .collect();
        let (mean, se) = mean_and_se(&totals);
        gates.push(Gate::enforced(
            "wiener_work_martingale",
            mean.abs() <= 3.0 * se,
            json!({"mean": mean, "three_sigma": 3.0 * se}),
        ));

        let qv_totals: Vec<f64> = ensemble
            .iter()
            .map(|rows| rows.iter().skip(1).map(|r| r.noise_qv).sum())
            .collect();
        let (qv_mean, qv_se) = mean_and_se(&qv_totals);
        let k = totals.len() as f64;
        let var = totals
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (k - 1.0);
        // Gaussian approximation for the variance estimator's spread.
        let band = 3.0 * (var * (2.0 / k).sqrt() + qv_se);
        gates.push(Gate::enforced(
            "ito_isometry_ensemble",
            (var - qv_mean).abs() <= band,
            json!({"empirical_variance": var, "mean_quadratic_variation": qv_mean, "band": band}),
        ));
    }

    if jumps_on {
        let totals: Vec<f64> = ensemble
            .iter()
            .map(|rows| {
                rows.windows(2)
                    .map(|pair| pair[1].jump_work - mu2 * pair[0].energy_u * dt)
                    .sum()
            })
            .collect();
        let (mean, se) = mean_and_se(&totals);
        gates.push(Gate::enforced(
            "jump_martingale",
            mean.abs() <= 3.0 * se,
            json!({"mean": mean, "three_sigma": 3.0 * se}),
        ));
    }
    gates
}

/// Energy of the coefficient-wise difference of two velocity fields that
/// share `N` but not necessarily the Galerkin cutoff.
fn velocity_diff_energy(a: &SolenoidalVelocityField, b: &SolenoidalVelocityField, area: f64) -> f64 {
    let sum: f64 = a
        .coeffs_x()
        .iter()
        .zip(b.coeffs_x().iter())
        .chain(a.coeffs_y().iter().zip(b.coeffs_y().iter()))
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    area * sum
}

/// `convergence`: noise-coupled runs at increasing cutoffs; emits the
/// pairwise `L^2(0,T;H)` distance table.
fn run_convergence(ctx: &Context) -> Result<KindResult> {
    let cutoffs = ctx.config.experiment.cutoffs.clone().expect("validated");
    let length = ctx.config.grid.length;
    let points = ctx.config.grid.points;

    let mut grids = Vec::new();
    let mut states = Vec::new();
    let mut drivers = Vec::new();
    let mut potentials = Vec::new();
    for &m in &cutoffs {
        let grid = TorusGrid::new(length, points, m)
            .with_context(|| format!("convergence cutoff m = {m}"))?;
        let (state, _) = initialize(
            grid.clone(),
            &ctx.data,
            trajectory_rng(ctx.config.experiment.master_seed, 0),
        )?;
        let wiener = presets::wiener_driver(&grid, &ctx.config.wiener)?;
        drivers.push(NoiseDrivers::new(wiener, ctx.drivers.jumps.clone()));
        potentials.push(presets::potential(&grid, &ctx.config.potential)?);
        grids.push(grid);
        states.push(state);
    }

    // One master stream; every cutoff consumes identical increments.
    let mut master = trajectory_rng(ctx.config.experiment.master_seed, 0);
    let area = length * length;
    let mut err_sq = vec![0.0_f64; cutoffs.len() - 1];
    let steps = (ctx.scheme.horizon / ctx.scheme.dt).round() as usize;
    for _ in 0..steps {
        let inc = sample_increment(
            &drivers.last().expect("nonempty").wiener,
            &ctx.drivers.jumps,
            ctx.scheme.dt,
            &mut master,
        );
        for ((state, driver), phi) in states.iter_mut().zip(drivers.iter()).zip(potentials.iter()) {
            step_with_increment(state, &ctx.scheme, phi, driver, &inc)
                .map_err(|e| anyhow!("convergence step failed: {e}"))?;
        }
        for (i, pair) in err_sq.iter_mut().enumerate() {
            *pair +=
                velocity_diff_energy(&states[i + 1].u, &states[i].u, area) * ctx.scheme.dt;
        }
    }

    let errors: Vec<f64> = err_sq.iter().map(|e| e.sqrt()).collect();
    let mut table = String::from("m_coarse,m_fine,l2_time_h_error\n");
    for (i, err) in errors.iter().enumerate() {
        table.push_str(&format!("{},{},{}\n", cutoffs[i], cutoffs[i + 1], err));
    }
    write_text(&ctx.out_dir.join("convergence.csv"), &table)?;

    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let gates = vec![Gate::enforced(
        "galerkin_errors_strictly_decreasing",
        decreasing,
        json!({"cutoffs": cutoffs, "errors": errors}),
    )];
    let reports = json!({"cutoffs": cutoffs, "errors": errors, "steps": steps});
    Ok((
        gates,
        reports,
        vec!["convergence.csv".into(), "summary.json".into()],
        None,
    ))
}

/// `uniqueness`: twin runs (bit-identical gate) plus a delta-perturbed
/// pair integrated in lockstep against its Gronwall envelope.
fn run_uniqueness(ctx: &Context) -> Result<KindResult> {
    let delta = ctx.config.experiment.delta.expect("validated");
    let perturbation_seed = ctx.config.experiment.perturbation_seed.unwrap_or(1);

    // Twin runs: same seed, same config.
    let twin_a = run(
        ctx.state_for(0)?,
        &ctx.scheme,
        &ctx.phi,
        &ctx.drivers,
        &ctx.budget,
    );
    let twin_b = run(
        ctx.state_for(0)?,
        &ctx.scheme,
        &ctx.phi,
        &ctx.drivers,
        &ctx.budget,
    );
    for record in [&twin_a, &twin_b] {
        if let Some(fault) = &record.fault {
            return Ok((Vec::new(), json!({}), vec![], Some(fault.clone())));
        }
    }
    let csv_a = ledger_csv(&twin_a.rows);
    let csv_b = ledger_csv(&twin_b.rows);
    write_text(&ctx.out_dir.join("twin_a.csv"), &csv_a)?;
    write_text(&ctx.out_dir.join("twin_b.csv"), &csv_b)?;
    let twins_identical = csv_a == csv_b;
    let twin_metrics = uniqueness_metrics(&twin_a.final_state, &twin_b.final_state)?;

    // Perturbed pair: unit-L^2 band-limited perturbation of n_0.
    let perturbation = unit_perturbation(&ctx.grid, perturbation_seed);
    let mut perturbed_data = ctx.data.clone();
    let p_phys = perturbation.to_physical();
    perturbed_data.n0 = &perturbed_data.n0 + &p_phys.mapv(|v| v * delta);
    let (mut base, _) = initialize(
        ctx.grid.clone(),
        &ctx.data,
        trajectory_rng(ctx.config.experiment.master_seed, 0),
    )?;
    let (mut pert, _) = initialize(
        ctx.grid.clone(),
        &perturbed_data,
        trajectory_rng(ctx.config.experiment.master_seed, 0),
    )?;

    let m0 = uniqueness_metrics(&base, &pert)?;
    let a0 = m0.a;
    let mut int_c = 0.0;
    let mut track = String::from("step,t,a,c_coeff,int_c_dt\n");
    track.push_str(&format!("0,{},{},{},{int_c}\n", base.t, m0.a, m0.c));
    let steps = (ctx.scheme.horizon / ctx.scheme.dt).round() as usize;
    for k in 0..steps {
        let m = uniqueness_metrics(&base, &pert)?;
        int_c += m.c * ctx.scheme.dt;
        step(&mut base, &ctx.scheme, &ctx.phi, &ctx.drivers)
            .map_err(|e| anyhow!("uniqueness base step failed: {e}"))?;
        step(&mut pert, &ctx.scheme, &ctx.phi, &ctx.drivers)
            .map_err(|e| anyhow!("uniqueness perturbed step failed: {e}"))?;
        let m_new = uniqueness_metrics(&base, &pert)?;
        track.push_str(&format!(
            "{},{},{},{},{int_c}\n",
            k + 1,
            base.t,
            m_new.a,
            m_new.c
        ));
    }
    write_text(&ctx.out_dir.join("uniqueness.csv"), &track)?;

    let a_final = uniqueness_metrics(&base, &pert)?.a;
    let envelope = (ctx.config.calibration.c_uniq * int_c).exp();
    let growth = a_final / a0;

    let gates = vec![
        Gate::enforced(
            "twin_ledgers_bit_identical",
            twins_identical && twin_metrics.a == 0.0,
            json!({"a_final_twins": twin_metrics.a}),
        ),
        Gate::enforced(
            "perturbation_quadratic_at_t0",
            (a0 / (delta * delta) - 1.0).abs() <= 1e-3,
            json!({"a0": a0, "delta_sq": delta * delta}),
        ),
        Gate::enforced(
            "gronwall_envelope",
            growth <= envelope,
            json!({"growth": growth, "envelope": envelope, "int_c_dt": int_c}),
        ),
    ];
    let reports = json!({
        "a0": a0,
        "a_final": a_final,
        "growth": growth,
        "envelope": envelope,
        "int_c_dt": int_c,
        "delta": delta,
    });
    Ok((
        gates,
        reports,
        vec![
            "twin_a.csv".into(),
            "twin_b.csv".into(),
            "uniqueness.csv".into(),
            "summary.json".into(),
        ],
        None,
    ))
}

/// Band-limited random field with unit `L^2` norm, reproducible from the
/// perturbation seed.
fn unit_perturbation(grid: &Arc<TorusGrid>, seed: u64) -> SpectralScalarField {
    use rand::Rng;
    let mut rng = trajectory_rng(seed, u32::MAX);
    let n = grid.points();
    let raw = ndarray::Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
    let mut field = SpectralScalarField::from_physical(grid.clone(), &raw).expect("shape");
    let norm = l2_sq(&field).sqrt();
    field.scale(1.0 / norm);
    field
}

/// `escape`: ensemble of trajectories, empirical exceedance fractions per
/// threshold.
fn run_escape(ctx: &Context) -> Result<KindResult> {
    let paths = ctx.config.experiment.paths.expect("validated");
    let thresholds = ctx.config.experiment.thresholds.clone().expect("validated");
    let records = run_trajectories(ctx, &ctx.drivers, paths)?;
    let mut ensemble = Vec::with_capacity(paths);
    for (k, record) in records.into_iter().enumerate() {
        if let Some(fault) = record.fault {
            return Ok((Vec::new(), json!({"failed_path": k}), vec![], Some(fault)));
        }
        ensemble.push(record.rows);
    }
    let report = escape_probability(&ensemble, &thresholds)?;
    let mut csv = String::from("threshold,fraction\n");
    for (d, f) in report.thresholds.iter().zip(report.fractions.iter()) {
        csv.push_str(&format!("{d},{f}\n"));
    }
    write_text(&ctx.out_dir.join("escape.csv"), &csv)?;
    let gates = vec![Gate::enforced(
        "escape_fractions_monotone",
        report.monotone_nonincreasing,
        json!({"fractions": report.fractions}),
    )];
    let reports = serde_json::to_value(&report).expect("serializable");
    Ok((
        gates,
        reports,
        vec!["escape.csv".into(), "summary.json".into()],
        None,
    ))
}

/// Dispatch a `run` invocation. Returns the process exit code.
pub fn run_experiment(config: ExperimentConfig) -> Result<i32> {
    // Everything the context derives comes from the config; failures here
    // are configuration errors, not runtime faults.
    let ctx = match Context::build(config) {
        Ok(ctx) => ctx,
        Err(err) => {
            eprintln!("config error: {err:#}");
            return Ok(EXIT_CONFIG_ERROR);
        }
    };
    std::fs::create_dir_all(&ctx.out_dir)
        .with_context(|| format!("cannot create {}", ctx.out_dir.display()))?;

    let kind = ctx.config.experiment.kind.clone();
    let (gates, reports, artifacts, fault) = match kind.as_str() {
        "single" => run_single(&ctx)?,
        "ensemble" => run_ensemble(&ctx)?,
        "convergence" => run_convergence(&ctx)?,
        "uniqueness" => run_uniqueness(&ctx)?,
        "escape" => run_escape(&ctx)?,
        "decay-order" => crate::checks::run_decay_order(&ctx)?,
        "transport" => crate::checks::run_transport(&ctx)?,
        "jump-stats" => crate::checks::run_jump_stats(&ctx)?,
        "isometry" => crate::checks::run_isometry(&ctx)?,
        other => bail!("unhandled experiment kind {other}"),
    };

    write_summary(
        &ctx.out_dir,
        &kind,
        ctx.config_json(),
        ctx.init_json(),
        ctx.constants_json(),
        &gates,
        reports,
        fault.as_deref(),
        &artifacts,
    )?;

    if let Some(fault) = fault {
        // Keep the last valid state next to the fault report.
        eprintln!("runtime fault: {fault}");
        return Ok(EXIT_RUNTIME_FAULT);
    }
    for gate in &gates {
        let status = if gate.pass { "PASS" } else { "FAIL" };
        let scope = if gate.enforced { "" } else { " (observational)" };
        println!("[{status}] {}{scope}", gate.name);
    }
    Ok(if failed_gates(&gates) == 0 {
        EXIT_PASS
    } else {
        EXIT_GATE_FAILURE
    })
}

//! The non-`run` subcommands: hypothesis reports, ledger re-verification,
//! and checkpoint resume.

use crate::config::ExperimentConfig;
use crate::experiment::{
    drive_with_snapshots, Context, EXIT_CONFIG_ERROR, EXIT_GATE_FAILURE, EXIT_PASS,
    EXIT_RUNTIME_FAULT,
};
use crate::reports::{
    failed_gates, ledger_csv, parse_ledger_csv, write_bytes, write_summary, write_text, Gate,
};
use crate::seeds::trajectory_rng;
use anyhow::{Context as _, Result};
use cns_core::diagnostics::{cor32_bound, lemma31_check};
use cns_core::integrator::{checkpoint, restore};
use cns_core::noise::verify_hypotheses;
use cns_core::spectral::SolenoidalVelocityField;
use rand::Rng;
use serde_json::{json, Value};
use std::path::Path;

/// `hypotheses <config>`: empirical (A2)/(A3) verification report.
pub fn run_hypotheses(config: ExperimentConfig) -> Result<i32> {
    let ctx = match Context::build(config) {
        Ok(ctx) => ctx,
        Err(err) => {
            eprintln!("config error: {err:#}");
            return Ok(EXIT_CONFIG_ERROR);
        }
    };
    std::fs::create_dir_all(&ctx.out_dir)?;

    // Sample states: the configured initial velocity plus a spread of
    // seeded random solenoidal fields with nontrivial gradients.
    let mut samples = Vec::new();
    samples.push(ctx.state_for(0)?.u);
    let n = ctx.grid.points();
    for k in 0..7u32 {
        let mut rng = trajectory_rng(ctx.config.experiment.master_seed ^ 0xA5A5, k);
        let fx = ndarray::Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let fy = ndarray::Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let sx = cns_core::spectral::SpectralScalarField::from_physical(ctx.grid.clone(), &fx)?;
        let sy = cns_core::spectral::SpectralScalarField::from_physical(ctx.grid.clone(), &fy)?;
        samples.push(SolenoidalVelocityField::leray_project(&sx, &sy)?);
    }

    let c_zero = ctx.drivers.wiener.gradient_free_constant();
    let report = verify_hypotheses(
        &ctx.drivers.wiener,
        &ctx.drivers.jumps,
        ctx.init.c0_linf,
        c_zero,
        &samples,
    )?;
    write_text(
        &ctx.out_dir.join("hypotheses.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;

    for (name, flag) in [
        ("gaussian_growth_lambda0", report.gaussian_growth),
        ("gaussian_lipschitz_LG", report.gaussian_lipschitz),
        ("jump_moments", report.jump_hypothesis),
    ] {
        println!("[{flag:?}] {name}");
    }
    println!(
        "lambda0 threshold = {} (||c0||_inf = {})",
        report.lambda0_threshold, report.c0_linf
    );
    Ok(if report.all_pass() {
        EXIT_PASS
    } else {
        EXIT_GATE_FAILURE
    })
}

/// `verify <ledger-dir>`: re-run the ledger diagnostics of a stored run.
pub fn run_verify(dir: &Path) -> Result<i32> {
    let summary_path = dir.join("summary.json");
    if !summary_path.exists() {
        eprintln!("no summary.json in {}", dir.display());
        return Ok(EXIT_CONFIG_ERROR);
    }
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(&summary_path).context("reading summary.json")?,
    )?;
    let config: ExperimentConfig = serde_json::from_value(
        summary
            .get("config")
            .cloned()
            .context("summary.json lacks a config echo")?,
    )
    .context("config echo does not match the schema")?;

    let tolerances = config.tolerances.invariants();
    let deterministic = (config.wiener.modes == 0 || config.wiener.amplitude == 0.0)
        && config.jumps.rate == 0.0
        && config.calibration.mode == "frozen";

    let mut gates: Vec<Gate> = Vec::new();
    let single_ledger = dir.join("ledger.csv");
    if single_ledger.exists() {
        let rows = parse_ledger_csv(&std::fs::read_to_string(&single_ledger)?)?;
        let inv = lemma31_check(&rows, &tolerances)?;
        gates.push(Gate::enforced(
            "mass_conservation",
            inv.mass_pass,
            json!({"max_rel_drift": inv.max_mass_drift_rel}),
        ));
        gates.push(Gate::enforced(
            "c_maximum_principle",
            inv.linf_pass,
            json!({"max_overshoot": inv.max_linf_overshoot}),
        ));
        let positive = rows
            .iter()
            .skip(1)
            .filter(|r| r.neg_c_cells == 0 && r.neg_n_cells == 0 && r.budget_residual > 0.0)
            .count();
        let budget = Gate {
            name: "entropy_budget".into(),
            pass: positive == 0,
            enforced: deterministic,
            details: json!({"positive_residual_steps": positive}),
        };
        gates.push(budget);
        let bound = cor32_bound(&rows, config.calibration.c_tilde2)?;
        gates.push(Gate {
            name: "exponential_l2_envelope".into(),
            pass: bound.pass(),
            enforced: deterministic,
            details: serde_json::to_value(bound)?,
        });
    }

    // Ensemble ledgers: re-check the per-path conservation law.
    let mut traj_files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("traj_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    traj_files.sort();
    if !traj_files.is_empty() {
        let mut worst = 0.0_f64;
        for path in &traj_files {
            let rows = parse_ledger_csv(&std::fs::read_to_string(path)?)?;
            let inv = lemma31_check(&rows, &tolerances)?;
            worst = worst.max(inv.max_mass_drift_rel);
        }
        gates.push(Gate::enforced(
            "mass_conservation_all_paths",
            worst <= tolerances.mass_drift,
            json!({"max_rel_drift": worst, "paths": traj_files.len()}),
        ));
    }

    if gates.is_empty() {
        eprintln!("no ledgers to verify in {}", dir.display());
        return Ok(EXIT_CONFIG_ERROR);
    }

    let verify = json!({
        "schema_version": 1,
        "verified_dir": dir.display().to_string(),
        "gates": gates,
        "gates_failed": failed_gates(&gates),
    });
    write_text(
        &dir.join("verify.json"),
        &serde_json::to_string_pretty(&verify)?,
    )?;
    for gate in &gates {
        let status = if gate.pass { "PASS" } else { "FAIL" };
        println!("[{status}] {} (re-verified)", gate.name);
    }
    Ok(if failed_gates(&gates) == 0 {
        EXIT_PASS
    } else {
        EXIT_GATE_FAILURE
    })
}

/// `resume <checkpoint> <config>`: continue a trajectory to the horizon.
pub fn run_resume(checkpoint_path: &Path, config: ExperimentConfig) -> Result<i32> {
    let ctx = match Context::build(config) {
        Ok(ctx) => ctx,
        Err(err) => {
            eprintln!("config error: {err:#}");
            return Ok(EXIT_CONFIG_ERROR);
        }
    };
    std::fs::create_dir_all(&ctx.out_dir)?;
    let bytes = std::fs::read(checkpoint_path)
        .with_context(|| format!("cannot read checkpoint {}", checkpoint_path.display()))?;
    let state = match restore(&bytes) {
        Ok(state) => state,
        Err(err) => {
            eprintln!("checkpoint rejected: {err}");
            return Ok(EXIT_CONFIG_ERROR);
        }
    };
    if state.grid().check_same(&ctx.grid, "resume grid").is_err() {
        eprintln!(
            "checkpoint grid (N = {}, m = {}) does not match the config grid (N = {}, m = {})",
            state.grid().points(),
            state.grid().cutoff(),
            ctx.grid.points(),
            ctx.grid.cutoff()
        );
        return Ok(EXIT_CONFIG_ERROR);
    }

    let record = drive_with_snapshots(
        state,
        &ctx.scheme,
        &ctx.phi,
        &ctx.drivers,
        &ctx.budget,
        ctx.config.output.snapshot_stride,
        Some(&ctx.out_dir.join("snapshots")),
    )?;
    write_text(&ctx.out_dir.join("ledger.csv"), &ledger_csv(&record.rows))?;
    write_bytes(
        &ctx.out_dir.join("final.ckpt"),
        &checkpoint(&record.final_state),
    )?;

    let fault = record.fault.clone();
    let gates = if fault.is_none() {
        // The resumed segment is a valid trajectory in its own right.
        let inv = lemma31_check(&record.rows, &ctx.config.tolerances.invariants())?;
        vec![Gate::enforced(
            "mass_conservation",
            inv.mass_pass,
            json!({"max_rel_drift": inv.max_mass_drift_rel}),
        )]
    } else {
        Vec::new()
    };
    let reports = json!({
        "resumed_from_t": record.rows.first().map(|r| r.t),
        "final_t": record.final_state.t,
        "steps": record.rows.len().saturating_sub(1),
    });
    write_summary(
        &ctx.out_dir,
        "resume",
        serde_json::to_value(&ctx.config)?,
        json!({}),
        json!({}),
        &gates,
        reports,
        fault.as_deref(),
        &["ledger.csv".into(), "final.ckpt".into(), "summary.json".into()],
    )?;
    if fault.is_some() {
        return Ok(EXIT_RUNTIME_FAULT);
    }
    Ok(if failed_gates(&gates) == 0 {
        EXIT_PASS
    } else {
        EXIT_GATE_FAILURE
    })
}

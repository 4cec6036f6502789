//! Artifact emission: ledger CSVs (bit-stable given the seed), the summary
//! JSON with every PASS/FAIL gate, and binary field snapshots.

use anyhow::{bail, Context, Result};
use cns_core::diagnostics::EntropyLedgerRow;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// One PASS/FAIL gate of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    /// Gates that only report (not enforced for this configuration).
    pub enforced: bool,
    pub details: Value,
}

impl Gate {
    pub fn enforced(name: &str, pass: bool, details: Value) -> Self {
        Self {
            name: name.into(),
            pass,
            enforced: true,
            details,
        }
    }

    pub fn observational(name: &str, pass: bool, details: Value) -> Self {
        Self {
            name: name.into(),
            pass,
            enforced: false,
            details,
        }
    }
}

/// Count of enforced gates that failed.
pub fn failed_gates(gates: &[Gate]) -> usize {
    gates.iter().filter(|g| g.enforced && !g.pass).count()
}

/// Render a ledger to CSV text (shortest-round-trip float formatting, so
/// identical runs produce identical bytes).
pub fn ledger_csv(rows: &[EntropyLedgerRow]) -> String {
    let mut out = String::new();
    out.push_str(&EntropyLedgerRow::COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.f_val,
            r.g_val,
            r.g_grad_sqrt_n1,
            r.g_lap_sqrt_c,
            r.g_quartic,
            r.g_cross,
            r.g_grad_u,
            r.phi_n,
            r.grad_sqrt_c_sq,
            r.energy_u,
            r.mass_n,
            r.min_n,
            r.min_c,
            r.linf_c,
            r.l2_n,
            r.grad_n_sq,
            r.h1_c,
            r.lap_c_sq,
            r.int_h1_n_sq,
            r.int_lap_c_sq,
            r.radius,
            r.noise_work,
            r.noise_qv,
            r.jump_work,
            r.jump_count,
            r.budget_residual,
            r.neg_n_cells,
            r.neg_c_cells,
            r.stopped
        );
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parse a ledger CSV produced by [`ledger_csv`].
pub fn parse_ledger_csv(text: &str) -> Result<Vec<EntropyLedgerRow>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty ledger file")?;
    let expected = EntropyLedgerRow::COLUMNS.join(",");
    if header != expected {
        bail!("ledger header mismatch:\n  got      {header}\n  expected {expected}");
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != EntropyLedgerRow::COLUMNS.len() {
            bail!(
                "ledger line {}: expected {} fields, got {}",
                lineno + 2,
                EntropyLedgerRow::COLUMNS.len(),
                fields.len()
            );
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .with_context(|| format!("ledger line {}: field {}", lineno + 2, fields[i]))
        };
        let u = |i: usize| -> Result<u64> {
            fields[i]
                .parse::<u64>()
                .with_context(|| format!("ledger line {}: field {}", lineno + 2, fields[i]))
        };
        rows.push(EntropyLedgerRow {
            step: u(0)?,
            t: f(1)?,
            f_val: f(2)?,
            g_val: f(3)?,
            g_grad_sqrt_n1: f(4)?,
            g_lap_sqrt_c: f(5)?,
            g_quartic: f(6)?,
            g_cross: f(7)?,
            g_grad_u: f(8)?,
            phi_n: f(9)?,
            grad_sqrt_c_sq: f(10)?,
            energy_u: f(11)?,
            mass_n: f(12)?,
            min_n: f(13)?,
            min_c: f(14)?,
            linf_c: f(15)?,
            l2_n: f(16)?,
            grad_n_sq: f(17)?,
            h1_c: f(18)?,
            lap_c_sq: f(19)?,
            int_h1_n_sq: f(20)?,
            int_lap_c_sq: f(21)?,
            radius: f(22)?,
            noise_work: f(23)?,
            noise_qv: f(24)?,
            jump_work: f(25)?,
            jump_count: u(26)?,
            budget_residual: f(27)?,
            neg_n_cells: u(28)?,
            neg_c_cells: u(29)?,
            stopped: fields[30] == "true",
        });
    }
    Ok(rows)
}

/// Resolve the output directory: `$CNS_OUTPUT_ROOT/<dir>` when the override
/// is set, else `<dir>` as given.
pub fn resolve_output_dir(configured: &str) -> PathBuf {
    match std::env::var_os("CNS_OUTPUT_ROOT") {
        Some(root) => Path::new(&root).join(configured),
        None => PathBuf::from(configured),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Assemble and write `summary.json`.
pub fn write_summary(
    dir: &Path,
    kind: &str,
    config_echo: Value,
    init: Value,
    constants: Value,
    gates: &[Gate],
    reports: Value,
    fault: Option<&str>,
    artifacts: &[String],
) -> Result<Value> {
    let summary = json!({
        "schema_version": 1,
        "kind": kind,
        "config": config_echo,
        "init": init,
        "constants": constants,
        "gates": gates,
        "gates_failed": failed_gates(gates),
        "reports": reports,
        "fault": fault,
        "artifacts": artifacts,
    });
    write_text(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("serializable"),
    )?;
    Ok(summary)
}

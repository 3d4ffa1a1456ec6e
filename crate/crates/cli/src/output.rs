//! Human-readable tables and JSON report files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use netclear_core::{Certification, ClearingReport, Matrix, PaymentSchedule, ScenarioComparison};
use serde::Serialize;

use crate::error::CliError;

/// Two decimals, without a negative sign on values that round to zero.
pub fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn labels(nodes: &[usize]) -> String {
    let inner: Vec<String> = nodes.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

/// Right-aligned grid with 1-based row and column headers.
fn grid(out: &mut String, rows: &[Vec<f64>], row_label: &str) {
    let cols = rows.first().map_or(0, Vec::len);
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&v| fmt2(v)).collect()).collect();
    let width = cells
        .iter()
        .flatten()
        .map(String::len)
        .chain((1..=cols).map(|j| j.to_string().len()))
        .max()
        .unwrap_or(1);
    let lead = rows.len().to_string().len().max(row_label.len());
    let _ = write!(out, "  {row_label:>lead$}");
    for j in 1..=cols {
        let _ = write!(out, "  {j:>width$}");
    }
    out.push('\n');
    for (i, row) in cells.iter().enumerate() {
        let _ = write!(out, "  {:>lead$}", i + 1);
        for c in row {
            let _ = write!(out, "  {c:>width$}");
        }
        out.push('\n');
    }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn certification_lines(out: &mut String, cert: &Certification) {
    let _ = writeln!(out, "certification: {}", if cert.passed() { "passed" } else { "FAILED" });
    for check in &cert.checks {
        let _ = writeln!(out, "  {check}");
    }
}

fn node_table(out: &mut String, report: &ClearingReport) {
    let _ = writeln!(out, "{:>6}  {:>12}  {:>12}", "node", "residual", "worth");
    for (i, (r, w)) in report.residual_by_node.iter().zip(&report.worths).enumerate() {
        let _ = writeln!(out, "{:>6}  {:>12}  {:>12}", i + 1, fmt2(*r), fmt2(*w));
    }
}

fn totals(out: &mut String, report: &ClearingReport) {
    let _ = writeln!(out, "loss               {}", fmt2(report.loss));
    if let Some(j) = report.penalized_loss {
        let _ = writeln!(out, "penalized loss     {}", fmt2(j));
    }
    let _ = writeln!(out, "objective          {}", fmt2(report.objective));
    let _ = writeln!(out, "final shortfall    {}", fmt2(report.final_shortfall));
    let _ = writeln!(out, "total residual     {}", fmt2(report.total_residual));
    let _ = writeln!(out, "default set        {}", labels(&report.default_set));
}

pub fn clearing_table(title: &str, report: &ClearingReport, schedule: &PaymentSchedule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "mode {}, method {}, horizon {}, alpha {}, eta {}",
        report.mode, report.method, report.horizon, report.alpha, report.eta
    );
    out.push('\n');
    match schedule.vectors() {
        Some(v) => {
            let _ = writeln!(out, "payments p(t), one row per period starting at t = 0");
            grid(&mut out, v, "t+1");
        }
        None => {
            for t in 0..schedule.horizon() {
                let _ = writeln!(out, "payments P({t})");
                grid(&mut out, &matrix_rows(schedule.payment(t)), "");
            }
        }
    }
    out.push('\n');
    let _ = writeln!(out, "residual liabilities P({})", report.horizon);
    grid(&mut out, &matrix_rows(&report.residual_liabilities), "");
    out.push('\n');
    node_table(&mut out, report);
    out.push('\n');
    totals(&mut out, report);
    out.push('\n');
    certification_lines(&mut out, &report.certification);
    match (&report.solver.status, report.solver.fda_iterations) {
        (Some(status), _) => {
            let _ = writeln!(out, "solver: {status:?}, {} simplex iterations", report.solver.lp_iterations);
        }
        (None, Some(k)) => {
            let _ = writeln!(out, "solver: {k} fictitious default iterations");
        }
        (None, None) => {}
    }
    out
}

pub fn comparison_table(title: &str, cmp: &ScenarioComparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let width = cmp.entries.iter().map(|e| e.label.len()).max().unwrap_or(8).max(8);
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>10}  {:<16}  certified",
        "scenario", "loss", "objective", "shortfall", "residual", "defaults"
    );
    for e in &cmp.entries {
        let r = &e.report;
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>10}  {:>10}  {:>10}  {:<16}  {}",
            e.label,
            fmt2(r.loss),
            fmt2(r.objective),
            fmt2(r.final_shortfall),
            fmt2(r.total_residual),
            labels(&r.default_set),
            if r.certified() { "yes" } else { "NO" }
        );
    }
    out
}

/// Envelope for every JSON report file.
#[derive(Serialize)]
pub struct Document<'a, T: Serialize> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    pub command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<&'a str>,
    #[serde(flatten)]
    pub body: T,
}

pub fn now_unix(enabled: bool) -> Option<u64> {
    enabled.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(wrap)
}

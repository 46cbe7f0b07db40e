//! Consolidated summary of a run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    categorical_table, ks_two_sample, read_summaries, replica_dir, stability_table, write_csv,
    write_text, KsResult, RegressionRow, ReplicaSummary, MACRO_VARIABLES, NETWORK_MEASURES,
};
use crate::env::{EpisodeTrace, TraceRow};
use crate::error::{Error, Result};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::ppo::mean_std;

/// Strategy directories a report looks for, in column order.
pub const STRATEGY_ORDER: [&str; 4] = ["fixed0", "fixed1", "random", "learned"];

type Field = fn(&ReplicaSummary) -> f64;

/// Table rows: label and per-replica value.
pub const TABLE_VARIABLES: [(&str, Field); 10] = [
    ("Liquidity", |s| s.liquidity_mean),
    ("Liquidity (cumulative)", |s| s.liquidity_total),
    ("Leverage", |s| s.leverage_mean),
    ("Rationing", |s| s.rationing_mean),
    ("Failed banks", |s| s.failures_mean),
    ("Failed banks (cumulative)", |s| s.failures_total as f64),
    ("Credit channels", |s| s.channels_mean),
    ("Equity", |s| s.equity_mean),
    ("Bad debt", |s| s.bad_debt_mean),
    ("Cumulative fitness", |s| s.cumulative_reward),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    pub variable: String,
    pub strategy: String,
    pub mean: f64,
    pub std: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Strategies found, in column order.
    pub columns: Vec<String>,
    pub table: Vec<TableCell>,
    pub regressions: Vec<RegressionRow>,
    /// Per-replica `η = 1` frequencies, learned against random.
    pub ks: Option<KsResult>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn cell(&self, variable: &str, strategy: &str) -> Option<&TableCell> {
        self.table
            .iter()
            .find(|c| c.variable == variable && c.strategy == strategy)
    }
}

/// Replica traces stored below an experiment directory, in replica order.
pub fn read_experiment_traces(dir: &Path) -> Result<Vec<Vec<TraceRow>>> {
    let mut out = Vec::new();
    for r in 0.. {
        let d = replica_dir(dir, r);
        if !d.is_dir() {
            break;
        }
        out.push(EpisodeTrace::read_rows(
            &d.join("trace.csv"),
            &d.join("details.csv"),
        )?);
    }
    Ok(out)
}

fn manifests(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let top = run_dir.join(MANIFEST_FILE);
    if top.is_file() {
        found.push(top);
    }
    let mut subs: Vec<PathBuf> = std::fs::read_dir(run_dir)
        .map_err(|e| Error::io(run_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path().join(MANIFEST_FILE)))
        .filter(|p| p.is_file())
        .collect();
    subs.sort();
    found.extend(subs);
    Ok(found)
}

pub fn build_report(run_dir: &Path) -> Result<Report> {
    let manifest_paths = manifests(run_dir)?;
    if manifest_paths.is_empty() {
        return Err(Error::InvalidInput(format!(
            "missing inputs: no {MANIFEST_FILE} in {} or its subdirectories",
            run_dir.display()
        )));
    }
    let mut warnings = Vec::new();
    for p in &manifest_paths {
        let m = RunManifest::load(p)?;
        if m.command == "report" {
            continue;
        }
        let dir = p.parent().unwrap_or(run_dir);
        for w in m.verify(dir) {
            warnings.push(format!("integrity: {} ({})", w, p.display()));
        }
    }

    let mut columns = Vec::new();
    let mut summaries = Vec::new();
    for label in STRATEGY_ORDER {
        let p = run_dir.join(label).join("summary.csv");
        if p.is_file() {
            columns.push(label.to_string());
            summaries.push(read_summaries(&p)?);
        }
    }
    if columns.is_empty() {
        let expected: Vec<String> = STRATEGY_ORDER
            .iter()
            .map(|l| format!("{l}/summary.csv"))
            .collect();
        return Err(Error::InvalidInput(format!(
            "missing inputs: none of {} under {}",
            expected.join(", "),
            run_dir.display()
        )));
    }

    let mut table = Vec::new();
    for (variable, f) in TABLE_VARIABLES {
        for (label, s) in columns.iter().zip(&summaries) {
            let v: Vec<f64> = s.iter().map(f).collect();
            let (mean, std) = mean_std(&v);
            table.push(TableCell {
                variable: variable.to_string(),
                strategy: label.clone(),
                mean,
                std,
                replicas: v.len(),
            });
        }
    }

    let mut regressions = Vec::new();
    for label in &columns {
        let dir = run_dir.join(label);
        let rows: Vec<TraceRow> = read_experiment_traces(&dir)?.into_iter().flatten().collect();
        if rows.is_empty() {
            warnings.push(format!("missing inputs: no replica traces under {}", dir.display()));
            continue;
        }
        let mixed = rows.iter().any(|r| r.eta == 0) && rows.iter().any(|r| r.eta == 1);
        if mixed {
            let vars: Vec<&str> = NETWORK_MEASURES.iter().chain(&MACRO_VARIABLES).copied().collect();
            for mut row in categorical_table(&rows, &vars)? {
                row.strategy = label.clone();
                regressions.push(row);
            }
        }
        for mut row in stability_table(&rows)? {
            row.strategy = label.clone();
            regressions.push(row);
        }
    }

    let eta_of = |label: &str| {
        columns
            .iter()
            .position(|c| c == label)
            .map(|i| summaries[i].iter().map(|s| s.eta_mean).collect::<Vec<f64>>())
    };
    let ks = match (eta_of("learned"), eta_of("random")) {
        (Some(a), Some(b)) => Some(ks_two_sample(&a, &b)?),
        _ => None,
    };

    Ok(Report {
        columns,
        table,
        regressions,
        ks,
        warnings,
    })
}

fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && (a < 1e-3 || a >= 1e7) {
        format!("{x:.4e}")
    } else if a >= 100.0 {
        format!("{x:.2}")
    } else {
        format!("{x:.4}")
    }
}

pub fn render_text(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Average values over replicas, standard deviations in parentheses");
    let _ = write!(s, "{:<28}", "variable");
    for c in &report.columns {
        let _ = write!(s, "{c:>26}");
    }
    s.push('\n');
    for (variable, _) in TABLE_VARIABLES {
        let _ = write!(s, "{variable:<28}");
        for c in &report.columns {
            let cell = report.cell(variable, c).expect("cell per column");
            let text = format!("{} ({})", fmt_num(cell.mean), fmt_num(cell.std));
            let _ = write!(s, "{text:>26}");
        }
        s.push('\n');
    }

    for kind in ["categorical", "ols"] {
        let rows: Vec<&RegressionRow> =
            report.regressions.iter().filter(|r| r.kind == kind).collect();
        if rows.is_empty() {
            continue;
        }
        s.push('\n');
        let _ = writeln!(
            s,
            "{} regressions, t-statistics in parentheses (*** p<0.01, ** p<0.05, * p<0.1)",
            if kind == "ols" { "Stability" } else { "Categorical" }
        );
        for r in rows {
            let _ = writeln!(
                s,
                "{:<8} {:>24} on {:<24} b0 = {} ({:.2})  b1 = {}{} ({:.2})  n = {}",
                r.strategy,
                r.y,
                r.x,
                fmt_num(r.b0),
                r.t0,
                fmt_num(r.b1),
                r.stars1,
                r.t1,
                r.n
            );
        }
    }

    s.push('\n');
    match &report.ks {
        Some(k) => {
            let _ = writeln!(
                s,
                "KS test, eta frequencies learned vs random: D = {:.4}, p = {:.4}",
                k.d, k.p_value
            );
        }
        None => {
            let _ = writeln!(s, "KS test skipped: needs a checkpoint run and a random run");
        }
    }
    if !report.warnings.is_empty() {
        s.push('\n');
        for w in &report.warnings {
            let _ = writeln!(s, "WARNING {w}");
        }
    }
    s
}

/// Write `report.txt`, `table.csv`, `regressions.csv` and, when present,
/// `ks.csv` into `out`.
pub fn write_report(report: &Report, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();
    let p = out.join("report.txt");
    write_text(&p, &render_text(report))?;
    files.push(p);
    let p = out.join("table.csv");
    write_csv(&p, &report.table)?;
    files.push(p);
    let p = out.join("regressions.csv");
    write_csv(&p, &report.regressions)?;
    files.push(p);
    if let Some(k) = report.ks {
        let p = out.join("ks.csv");
        write_csv(&p, &[k])?;
        files.push(p);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{run_experiment, ExperimentConfig, Strategy};
    use crate::env::SimConfig;
    use crate::manifest::timestamp;

    fn simulate(run: &Path, strategy: Strategy) {
        let mut sim = SimConfig::default();
        sim.env.horizon = 30;
        let dir = run.join(strategy.label());
        let cfg = ExperimentConfig {
            sim,
            strategy,
            replicas: 3,
            seed: 1,
        };
        let out = run_experiment(&cfg, Some(&dir)).unwrap();
        let mut m = RunManifest::new("simulate", String::new(), cfg.seeds(), timestamp());
        m.add_files(&dir, &out.files).unwrap();
        m.finish(&dir).unwrap();
    }

    #[test]
    fn fixed_only_run_has_no_rl_column() {
        let run = tempfile::tempdir().unwrap();
        simulate(run.path(), Strategy::Fixed(0));
        simulate(run.path(), Strategy::Fixed(1));
        let r = build_report(run.path()).unwrap();
        assert_eq!(r.columns, vec!["fixed0", "fixed1"]);
        assert!(r.ks.is_none());
        assert!(r.warnings.is_empty());
        assert!(r.regressions.iter().all(|x| x.kind == "ols"));
        let text = render_text(&r);
        assert!(!text.contains("learned"));
        for v in ["Liquidity", "Leverage", "Rationing", "Failed banks", "Credit channels"] {
            assert!(text.contains(v), "{v}");
            assert!(r.cell(v, "fixed0").is_some());
        }
    }

    #[test]
    fn random_run_gets_categorical_rows() {
        let run = tempfile::tempdir().unwrap();
        simulate(run.path(), Strategy::Random);
        let r = build_report(run.path()).unwrap();
        let cat: Vec<_> = r.regressions.iter().filter(|x| x.kind == "categorical").collect();
        assert_eq!(cat.len(), NETWORK_MEASURES.len() + MACRO_VARIABLES.len());
        let out = tempfile::tempdir().unwrap();
        let files = write_report(&r, out.path()).unwrap();
        assert_eq!(files.len(), 3);
    }

    #[test]
    fn tampered_file_warns() {
        let run = tempfile::tempdir().unwrap();
        simulate(run.path(), Strategy::Fixed(1));
        let agg = run.path().join("fixed1").join("aggregate.csv");
        std::fs::write(&agg, "tampered").unwrap();
        let r = build_report(run.path()).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("hash mismatch: aggregate.csv"));
        assert!(render_text(&r).contains("WARNING integrity"));
    }

    #[test]
    fn missing_inputs_listed() {
        let run = tempfile::tempdir().unwrap();
        let err = build_report(run.path()).unwrap_err().to_string();
        assert!(err.contains("missing inputs") && err.contains(MANIFEST_FILE), "{err}");
        RunManifest::new("simulate", String::new(), vec![], timestamp())
            .finish(run.path())
            .unwrap();
        let err = build_report(run.path()).unwrap_err().to_string();
        assert!(err.contains("fixed0/summary.csv"), "{err}");
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::harness::{GroupSummary, RunSummary, Stats};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfTables {
    pub text: String,
    /// Long format: `app,framework,metric,stat,value`.
    pub csv_long: String,
}

pub const PERF_CSV_HEADER: &str = "app,framework,metric,stat,value";

fn stat_rows(out: &mut String, g: &GroupSummary, metric: &str, stats: Option<Stats>) {
    let Some(s) = stats else { return };
    for (stat, v) in [
        ("mean", s.mean),
        ("median", s.median),
        ("min", s.min),
        ("max", s.max),
        ("stddev", s.stddev),
    ] {
        let _ = writeln!(out, "{},{},{metric},{stat},{v:.6}", g.name, g.framework);
    }
}

/// Groups summaries by application (first-appearance order) with one row
/// per framework.
pub fn perf_energy_table(summary: &RunSummary) -> PerfTables {
    let mut apps: Vec<&str> = Vec::new();
    for g in &summary.groups {
        if !apps.contains(&g.name.as_str()) {
            apps.push(&g.name);
        }
    }
    let ordered: Vec<&GroupSummary> = apps
        .iter()
        .flat_map(|app| summary.groups.iter().filter(move |g| g.name == *app))
        .collect();

    let app_w = ordered.iter().map(|g| g.name.len()).chain([3]).max().unwrap();
    let fw_w = ordered.iter().map(|g| g.framework.len()).chain([9]).max().unwrap();
    let mut text = format!(
        "{:<app_w$}  {:<fw_w$}  {:>3}  {:>4}  {:>12}  {:>12}  {:>10}  {:>14}  {:>14}  {:>12}\n",
        "app",
        "framework",
        "n",
        "fail",
        "time mean[s]",
        "time med[s]",
        "time sd",
        "energy mean[J]",
        "energy med[J]",
        "energy sd"
    );
    let mut csv_long = format!("{PERF_CSV_HEADER}\n");
    for g in ordered {
        let fmt = |s: Option<Stats>, f: fn(&Stats) -> f64, w: usize, p: usize| match s {
            Some(s) => format!("{:>w$.p$}", f(&s)),
            None => format!("{:>w$}", "-"),
        };
        let _ = writeln!(
            text,
            "{:<app_w$}  {:<fw_w$}  {:>3}  {:>4}  {}  {}  {}  {}  {}  {}",
            g.name,
            g.framework,
            g.n,
            g.failures,
            fmt(g.time_s, |s| s.mean, 12, 4),
            fmt(g.time_s, |s| s.median, 12, 4),
            fmt(g.time_s, |s| s.stddev, 10, 4),
            fmt(g.energy_total_j, |s| s.mean, 14, 3),
            fmt(g.energy_total_j, |s| s.median, 14, 3),
            fmt(g.energy_total_j, |s| s.stddev, 12, 3),
        );
        let _ = writeln!(csv_long, "{},{},runs,n,{}", g.name, g.framework, g.n);
        let _ = writeln!(csv_long, "{},{},runs,failures,{}", g.name, g.framework, g.failures);
        stat_rows(&mut csv_long, g, "time_s", g.time_s);
        stat_rows(&mut csv_long, g, "energy_j", g.energy_total_j);
    }
    PerfTables { text, csv_long }
}

//! Regenerates the Rodinia effort columns from a source checkout and
//! compares them with the reference table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EffortMatrix, ReportError};
use crate::codestat::{compute_effort, scan_tree, FrameworkProfile, ScanOptions};

/// Reference-table application name to Rodinia directory name.
pub const RODINIA_APPS: [(&str, &str); 16] = [
    ("BFS", "bfs"),
    ("CFD", "cfd"),
    ("HotSpot", "hotspot"),
    ("LUD", "lud"),
    ("NW", "nw"),
    ("B+Tree", "b+tree"),
    ("GE", "gaussian"),
    ("Heartwall", "heartwall"),
    ("Kmeans", "kmeans"),
    ("LavaMD", "lavaMD"),
    ("SRAD", "srad"),
    ("BP", "backprop"),
    ("k-NN", "nn"),
    ("Myocyte", "myocyte"),
    ("PF", "particlefilter"),
    ("SC", "streamcluster"),
];

/// Column id, Rodinia top-level directory, profile name.
pub const RODINIA_COLUMNS: [(&str, &str, &str); 3] = [
    ("rodinia-openmp", "openmp", "openmp"),
    ("rodinia-opencl", "opencl", "opencl"),
    ("rodinia-cuda", "cuda", "cuda"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDeviation {
    pub app: String,
    pub column: String,
    pub expected: f64,
    /// `None` when the application directory is absent.
    pub measured: Option<f64>,
    pub deviation: Option<f64>,
    pub within_tolerance: bool,
}

/// Scans `<root>/<framework>/<app>` for every filled Rodinia cell of
/// `reference` and reports the difference in percentage points.
pub fn compare_rodinia(
    root: &Path,
    profiles: &[FrameworkProfile],
    reference: &EffortMatrix,
    tolerance_pp: f64,
) -> Result<Vec<CellDeviation>, ReportError> {
    let mut out = Vec::new();
    for (col_id, top, profile) in RODINIA_COLUMNS {
        let col = reference.column_index(col_id)?;
        for (app, dir) in RODINIA_APPS {
            let Some(expected) = reference.cell(app, col) else {
                continue;
            };
            let app_dir = root.join(top).join(dir);
            let measured = if app_dir.is_dir() {
                let stats = scan_tree(&app_dir, profiles, &ScanOptions::default())?;
                Some(compute_effort(&stats).effort.get(profile).copied().unwrap_or(0.0))
            } else {
                None
            };
            let deviation = measured.map(|m| m - expected);
            out.push(CellDeviation {
                app: app.to_string(),
                column: col_id.to_string(),
                expected,
                measured,
                deviation,
                within_tolerance: deviation.is_some_and(|d| d.abs() <= tolerance_pp),
            });
        }
    }
    Ok(out)
}

pub fn render_deviations(cells: &[CellDeviation]) -> String {
    let mut out = format!(
        "{:<10}  {:<15}  {:>8}  {:>8}  {:>8}  ok\n",
        "app", "column", "table", "scanned", "diff"
    );
    for c in cells {
        let m = c.measured.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        let d = c.deviation.map(|v| format!("{v:+.2}")).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<10}  {:<15}  {:>8.2}  {:>8}  {:>8}  {}\n",
            c.app,
            c.column,
            c.expected,
            m,
            d,
            if c.within_tolerance { "yes" } else { "no" }
        ));
    }
    out
}

//! Effort tables, cross-framework effort ratios and time/energy comparison
//! tables.

mod matrix;
mod perf;
mod ratio;
mod rodinia;

use serde::{Deserialize, Serialize};

pub use matrix::{effort_table, EffortColumn, EffortMatrix, EffortRow, REFERENCE_MATRIX_JSON};
pub use perf::{perf_energy_table, PerfTables, PERF_CSV_HEADER};
pub use ratio::{
    default_exclusions, effort_ratio, headline_ratios, render_ratios, AppRatio, RatioSummary, HEADLINE_PAIRS,
};
pub use rodinia::{compare_rodinia, render_deviations, CellDeviation, RODINIA_APPS, RODINIA_COLUMNS};

use crate::codestat::{CodestatError, StatOutput};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("columns {a} and {b} share no application with both values present")]
    NoOverlap { a: String, b: String },
    #[error("invalid effort matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Codestat(#[from] CodestatError),
}

/// One table in three encodings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedTable {
    pub text: String,
    pub csv: String,
    pub json: String,
}

/// Builds a matrix from `stat` outputs: each entry contributes one row
/// cell per framework with a nonzero line count.
pub fn matrix_from_stats<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str, &'a StatOutput)>) -> EffortMatrix {
    let mut m = EffortMatrix::default();
    for (app, suite, stat) in entries {
        for (fw, &loc) in &stat.loc_par {
            if loc == 0 {
                continue;
            }
            let column = EffortColumn {
                id: format!("{}-{}", suite.to_ascii_lowercase().replace(' ', "-"), fw),
                suite: suite.to_string(),
                framework: fw.clone(),
            };
            m.set(app, column, stat.effort_percent.get(fw).copied().unwrap_or(0.0));
        }
    }
    m
}

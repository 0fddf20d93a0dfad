//! Source-line attribution per parallel framework and the parallelization
//! effort metric (`100 * LOC_par / LOC_total`).

mod classify;
mod lexer;
mod profile;
mod scan;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use classify::{classify_line, Classifier, LineMatches};
pub use lexer::{lex_lines, partition_lines, CommentStyle, LexedLine, LineKind};
pub use profile::{default_profiles, load_profiles, FrameworkProfile, DEFAULT_PROFILES_JSON};
pub use scan::{classify_file, extension_of, scan_tree, FileOutcome, ScanOptions};

#[derive(Debug, thiserror::Error)]
pub enum CodestatError {
    #[error("profile config, line {line} column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate framework name {0:?}")]
    DuplicateFramework(String),
    #[error("framework {name:?} has an empty marker")]
    EmptyMarker { name: String },
    #[error("framework {name:?}: {reason}")]
    InvalidProfile { name: String, reason: String },
    #[error("invalid glob {pattern:?}: {message}")]
    Glob { pattern: String, message: String },
    #[error("scan root {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Classification of one physical line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineClass {
    pub line_no: usize,
    pub kind: LineKind,
    pub frameworks: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileStats {
    pub path: String,
    pub loc_total: u64,
    pub loc_par: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    Binary,
    Unreadable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanWarning {
    pub path: String,
    pub kind: WarningKind,
    pub message: String,
}

/// Aggregate line counts for a scanned tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeStats {
    pub loc_total: u64,
    pub loc_par: BTreeMap<String, u64>,
    pub files_scanned: usize,
    pub per_file: Vec<FileStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ScanWarning>,
}

impl CodeStats {
    /// An empty aggregate listing every framework with a zero count.
    pub fn empty(profiles: &[FrameworkProfile]) -> Self {
        CodeStats {
            loc_par: profiles.iter().map(|p| (p.name.clone(), 0)).collect(),
            ..Default::default()
        }
    }

    pub fn add_file(&mut self, file: FileStats) {
        self.loc_total += file.loc_total;
        for (f, n) in &file.loc_par {
            *self.loc_par.entry(f.clone()).or_default() += n;
        }
        self.files_scanned += 1;
        self.per_file.push(file);
    }

    pub fn has_read_errors(&self) -> bool {
        self.warnings.iter().any(|w| w.kind == WarningKind::Unreadable)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EffortReport {
    /// Framework name to effort percentage.
    pub effort: BTreeMap<String, f64>,
    /// Set when `loc_total` was zero and every effort was forced to 0.
    pub degenerate: bool,
}

pub fn compute_effort(stats: &CodeStats) -> EffortReport {
    if stats.loc_total == 0 {
        return EffortReport {
            effort: stats.loc_par.keys().map(|k| (k.clone(), 0.0)).collect(),
            degenerate: true,
        };
    }
    let total = stats.loc_total as f64;
    EffortReport {
        effort: stats
            .loc_par
            .iter()
            .map(|(k, &n)| (k.clone(), 100.0 * n as f64 / total))
            .collect(),
        degenerate: false,
    }
}

/// The machine-readable output of a `stat` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatOutput {
    pub loc_total: u64,
    pub files_scanned: usize,
    pub loc_par: BTreeMap<String, u64>,
    pub effort_percent: BTreeMap<String, f64>,
    pub per_file: Vec<FileStats>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ScanWarning>,
}

impl StatOutput {
    pub fn new(stats: &CodeStats) -> Self {
        let effort = compute_effort(stats);
        StatOutput {
            loc_total: stats.loc_total,
            files_scanned: stats.files_scanned,
            loc_par: stats.loc_par.clone(),
            effort_percent: effort.effort,
            per_file: stats.per_file.clone(),
            degenerate: effort.degenerate,
            warnings: stats.warnings.clone(),
        }
    }

    /// Aligned plain-text table: one row per framework.
    pub fn render_table(&self) -> String {
        let width = self
            .loc_par
            .keys()
            .map(String::len)
            .chain(["framework".len(), "total".len()])
            .max()
            .unwrap_or(9);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>9}", "framework", "LOC", "effort");
        for (name, loc) in &self.loc_par {
            let pct = self.effort_percent.get(name).copied().unwrap_or(0.0);
            let _ = writeln!(out, "{name:<width$}  {loc:>10}  {pct:>8.2}%");
        }
        let _ = writeln!(out, "{:<width$}  {:>10}", "total", self.loc_total);
        let _ = writeln!(out, "files scanned: {}", self.files_scanned);
        if self.degenerate {
            out.push_str("note: no code lines found; efforts reported as 0\n");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {}: {}", w.path, w.message);
        }
        out
    }
}

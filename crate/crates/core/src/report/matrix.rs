use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{RenderedTable, ReportError};

/// Published effort percentages per application and (suite, framework).
pub const REFERENCE_MATRIX_JSON: &str = include_str!("../../data/table4.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffortColumn {
    /// Lookup key such as `rodinia-opencl`.
    pub id: String,
    pub suite: String,
    pub framework: String,
}

impl EffortColumn {
    pub fn label(&self) -> String {
        format!("{} {}[%]", self.suite, self.framework)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffortRow {
    pub app: String,
    pub cells: Vec<Option<f64>>,
}

/// Applications by (suite, framework) columns; cells may be missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffortMatrix {
    pub columns: Vec<EffortColumn>,
    pub rows: Vec<EffortRow>,
}

impl EffortMatrix {
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let m: EffortMatrix = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    /// The shipped reference effort matrix.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_MATRIX_JSON).expect("shipped fixture is valid")
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.id.eq_ignore_ascii_case(&c.id)) {
                return Err(ReportError::InvalidMatrix(format!("duplicate column {:?}", c.id)));
            }
        }
        for r in &self.rows {
            if r.cells.len() != self.columns.len() {
                return Err(ReportError::InvalidMatrix(format!(
                    "row {:?} has {} cells for {} columns",
                    r.app,
                    r.cells.len(),
                    self.columns.len()
                )));
            }
            if let Some(v) = r.cells.iter().flatten().find(|v| !(0.0..=100.0).contains(*v)) {
                return Err(ReportError::InvalidMatrix(format!(
                    "row {:?}: {v} outside [0, 100]",
                    r.app
                )));
            }
        }
        Ok(())
    }

    /// Index of the column whose id matches `key`, ignoring ASCII case.
    pub fn column_index(&self, key: &str) -> Result<usize, ReportError> {
        self.columns
            .iter()
            .position(|c| c.id.eq_ignore_ascii_case(key))
            .ok_or_else(|| ReportError::UnknownColumn(key.to_string()))
    }

    pub fn cell(&self, app: &str, column: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.app == app)
            .and_then(|r| r.cells.get(column).copied().flatten())
    }

    /// Adds or overwrites one cell, creating the row and column on demand.
    pub fn set(&mut self, app: &str, column: EffortColumn, value: f64) {
        let col = match self.columns.iter().position(|c| c.id.eq_ignore_ascii_case(&column.id)) {
            Some(i) => i,
            None => {
                self.columns.push(column);
                for r in &mut self.rows {
                    r.cells.push(None);
                }
                self.columns.len() - 1
            }
        };
        let width = self.columns.len();
        let row = match self.rows.iter().position(|r| r.app == app) {
            Some(i) => i,
            None => {
                self.rows.push(EffortRow {
                    app: app.to_string(),
                    cells: vec![None; width],
                });
                self.rows.len() - 1
            }
        };
        self.rows[row].cells[col] = Some(value);
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Renders the matrix as an aligned text table, CSV and JSON. Rows keep
/// input order, missing cells stay blank, values use two decimals.
pub fn effort_table(matrix: &EffortMatrix) -> RenderedTable {
    let labels: Vec<String> = matrix.columns.iter().map(EffortColumn::label).collect();
    let app_w = matrix
        .rows
        .iter()
        .map(|r| r.app.len())
        .chain(["Application".len()])
        .max()
        .unwrap_or(0);
    let widths: Vec<usize> = labels.iter().map(|l| l.len().max(6)).collect();

    let mut text = String::new();
    let _ = write!(text, "{:<app_w$}", "Application");
    for (l, w) in labels.iter().zip(&widths) {
        let _ = write!(text, "  {l:>w$}");
    }
    text.push('\n');
    for r in &matrix.rows {
        let mut line = format!("{:<app_w$}", r.app);
        for (c, w) in r.cells.iter().zip(&widths) {
            match c {
                Some(v) => {
                    let _ = write!(line, "  {v:>w$.2}");
                }
                None => {
                    let _ = write!(line, "  {:>w$}", "");
                }
            }
        }
        text.push_str(line.trim_end());
        text.push('\n');
    }

    let mut csv = csv_line(
        &std::iter::once("application".to_string())
            .chain(matrix.columns.iter().map(|c| c.id.clone()))
            .collect::<Vec<_>>(),
    );
    for r in &matrix.rows {
        let fields: Vec<String> = std::iter::once(r.app.clone())
            .chain(r.cells.iter().map(|c| c.map(|v| format!("{v:.2}")).unwrap_or_default()))
            .collect();
        csv.push_str(&csv_line(&fields));
    }

    let rows: Vec<serde_json::Value> = matrix
        .rows
        .iter()
        .map(|r| {
            let cells: serde_json::Map<String, serde_json::Value> = matrix
                .columns
                .iter()
                .zip(&r.cells)
                .filter_map(|(c, v)| v.map(|v| (c.id.clone(), serde_json::json!((v * 100.0).round() / 100.0))))
                .collect();
            serde_json::json!({ "application": r.app, "effort_percent": cells })
        })
        .collect();
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "columns": matrix.columns,
        "rows": rows,
    }))
    .expect("serializable")
        + "\n";

    RenderedTable { text, csv, json }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EffortMatrix, ReportError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppRatio {
    pub app: String,
    pub ratio: f64,
}

/// How much more effort column `a` takes than column `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub a: String,
    pub b: String,
    pub applications: Vec<String>,
    pub ratios: Vec<AppRatio>,
    /// Arithmetic mean of the per-application ratios.
    pub mean_of_ratios: f64,
    /// Mean of `a` over mean of `b` on the same applications, for contrast.
    pub ratio_of_means: f64,
    pub excluded: Vec<String>,
}

/// Applications left out of a comparison unless overridden: the Rodinia
/// OpenCL/CUDA comparison drops BFS.
pub fn default_exclusions(a: &str, b: &str) -> Vec<String> {
    let pair = [a.to_ascii_lowercase(), b.to_ascii_lowercase()];
    let is = |x: &str, y: &str| pair == [x, y] || pair == [y, x];
    if is("rodinia-opencl", "rodinia-cuda") {
        vec!["BFS".to_string()]
    } else {
        Vec::new()
    }
}

/// Per-application `effort_a / effort_b` over rows where both cells exist,
/// `effort_b > 0` and the application is not excluded.
pub fn effort_ratio(matrix: &EffortMatrix, a: &str, b: &str, exclude: &[String]) -> Result<RatioSummary, ReportError> {
    let ia = matrix.column_index(a)?;
    let ib = matrix.column_index(b)?;
    let mut ratios = Vec::new();
    let (mut sum_a, mut sum_b) = (0.0, 0.0);
    for row in &matrix.rows {
        if exclude.iter().any(|x| x.eq_ignore_ascii_case(&row.app)) {
            continue;
        }
        if let (Some(va), Some(vb)) = (row.cells[ia], row.cells[ib]) {
            if vb > 0.0 {
                ratios.push(AppRatio {
                    app: row.app.clone(),
                    ratio: va / vb,
                });
                sum_a += va;
                sum_b += vb;
            }
        }
    }
    if ratios.is_empty() {
        return Err(ReportError::NoOverlap {
            a: a.to_string(),
            b: b.to_string(),
        });
    }
    let n = ratios.len() as f64;
    Ok(RatioSummary {
        a: matrix.columns[ia].id.clone(),
        b: matrix.columns[ib].id.clone(),
        applications: ratios.iter().map(|r| r.app.clone()).collect(),
        mean_of_ratios: ratios.iter().map(|r| r.ratio).sum::<f64>() / n,
        ratio_of_means: sum_a / sum_b,
        excluded: exclude.to_vec(),
        ratios,
    })
}

/// The standard cross-framework comparisons over the effort table.
pub const HEADLINE_PAIRS: [(&str, &str); 4] = [
    ("spec-opencl", "spec-openacc"),
    ("rodinia-opencl", "rodinia-cuda"),
    ("rodinia-opencl", "rodinia-openmp"),
    ("rodinia-cuda", "rodinia-openmp"),
];

pub fn headline_ratios(matrix: &EffortMatrix) -> Result<Vec<RatioSummary>, ReportError> {
    HEADLINE_PAIRS
        .iter()
        .map(|(a, b)| effort_ratio(matrix, a, b, &default_exclusions(a, b)))
        .collect()
}

pub fn render_ratios(summaries: &[RatioSummary]) -> String {
    let pair_w = summaries
        .iter()
        .map(|s| s.a.len() + s.b.len() + 3)
        .chain(["comparison".len()])
        .max()
        .unwrap_or(10);
    let mut out = format!(
        "{:<pair_w$}  {:>14}  {:>14}  {:>3}  applications\n",
        "comparison", "mean-of-ratios", "ratio-of-means", "n"
    );
    for s in summaries {
        let pair = format!("{} / {}", s.a, s.b);
        let _ = write!(
            out,
            "{pair:<pair_w$}  {:>14.2}  {:>14.2}  {:>3}  {}",
            s.mean_of_ratios,
            s.ratio_of_means,
            s.ratios.len(),
            s.applications.join(", ")
        );
        if !s.excluded.is_empty() {
            let _ = write!(out, " (excluding {})", s.excluded.join(", "));
        }
        out.push('\n');
    }
    out
}

use serde::{Deserialize, Serialize};

use super::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub stddev: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let stddev = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stats {
            mean,
            median,
            min: v[0],
            max: v[n - 1],
            stddev,
        })
    }
}

/// Statistics for one (benchmark, framework) pair over its successful
/// repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub framework: String,
    pub n: usize,
    pub failures: usize,
    pub time_s: Option<Stats>,
    pub energy_total_j: Option<Stats>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub groups: Vec<GroupSummary>,
}

/// Groups records by (name, framework) in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> RunSummary {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in records {
        let k = (r.name.as_str(), r.framework.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let groups = keys
        .into_iter()
        .map(|(name, framework)| {
            let members: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.name == name && r.framework == framework)
                .collect();
            let ok: Vec<&&RunRecord> = members.iter().filter(|r| r.succeeded()).collect();
            let times: Vec<f64> = ok.iter().map(|r| r.time_s).collect();
            let energy: Vec<f64> = ok.iter().map(|r| r.energy_total_j).collect();
            GroupSummary {
                name: name.to_string(),
                framework: framework.to_string(),
                n: ok.len(),
                failures: members.len() - ok.len(),
                time_s: Stats::of(&times),
                energy_total_j: Stats::of(&energy),
            }
        })
        .collect();
    RunSummary { groups }
}

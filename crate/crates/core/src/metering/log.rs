//! Timestamped power samples and their CSV form (`t_s,watts,component`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::MeteringError;

/// Timestamps are kept on a microsecond grid so a log survives the
/// six-decimal CSV form unchanged.
pub fn quantize_time(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    /// Monotonic seconds.
    pub t: f64,
    pub watts: f64,
    pub component: String,
}

/// Strictly time-ordered samples of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLog {
    component: String,
    samples: Vec<PowerSample>,
}

impl PowerLog {
    pub fn new(component: impl Into<String>) -> Self {
        PowerLog {
            component: component.into(),
            samples: Vec::new(),
        }
    }

    /// Builds a log from `(t, watts)` pairs.
    pub fn from_points(
        component: impl Into<String>,
        points: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self, MeteringError> {
        let mut log = PowerLog::new(component);
        for (t, w) in points {
            log.push(t, w)?;
        }
        Ok(log)
    }

    pub fn component(&self) -> &str {
        &self.component
    }

    pub fn samples(&self) -> &[PowerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last_t(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    /// Appends a reading. Rejects negative or non-finite values and
    /// timestamps that do not advance past the previous sample.
    pub fn push(&mut self, t: f64, watts: f64) -> Result<(), MeteringError> {
        if !t.is_finite() {
            return Err(MeteringError::InvalidSample(format!("non-finite timestamp {t}")));
        }
        if !watts.is_finite() || watts < 0.0 {
            return Err(MeteringError::InvalidSample(format!("invalid power reading {watts} W")));
        }
        let t = quantize_time(t);
        if let Some(prev) = self.last_t() {
            if t <= prev {
                return Err(MeteringError::NonMonotonic {
                    component: self.component.clone(),
                    prev,
                    t,
                });
            }
        }
        self.samples.push(PowerSample {
            t,
            watts,
            component: self.component.clone(),
        });
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 3] = ["t_s", "watts", "component"];

/// Writes one or more logs as a single time-ordered CSV.
pub fn write_power_logs<'a, W: Write>(
    logs: impl IntoIterator<Item = &'a PowerLog>,
    dest: W,
) -> Result<(), MeteringError> {
    let mut rows: Vec<&PowerSample> = logs.into_iter().flat_map(|l| l.samples.iter()).collect();
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut w = csv::Writer::from_writer(dest);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for s in rows {
        w.write_record([format!("{:.6}", s.t), format!("{}", s.watts), s.component.clone()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_power_log<W: Write>(log: &PowerLog, dest: W) -> Result<(), MeteringError> {
    write_power_logs([log], dest)
}

fn csv_err(e: csv::Error) -> MeteringError {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => MeteringError::Io(io),
        kind => MeteringError::Csv {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads every component in a power-log CSV, in order of first appearance.
pub fn read_power_logs<R: Read>(source: R) -> Result<Vec<PowerLog>, MeteringError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(MeteringError::Csv {
            line: Some(1),
            message: format!("expected header {}, found {:?}", CSV_HEADER.join(","), headers),
        });
    }
    let mut logs: Vec<PowerLog> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line());
        let bad = |message: String| MeteringError::Csv { line, message };
        let t: f64 = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad timestamp {:?}", &rec[0])))?;
        let watts: f64 = rec[1].parse().map_err(|_| bad(format!("bad wattage {:?}", &rec[1])))?;
        let component = &rec[2];
        if component.is_empty() {
            return Err(bad("empty component label".into()));
        }
        let idx = match logs.iter().position(|l| l.component == component) {
            Some(i) => i,
            None => {
                logs.push(PowerLog::new(component));
                logs.len() - 1
            }
        };
        logs[idx].push(t, watts).map_err(|e| match e {
            MeteringError::NonMonotonic { .. } | MeteringError::InvalidSample(_) => bad(e.to_string()),
            other => other,
        })?;
    }
    Ok(logs)
}

/// Reads a single-component power log.
pub fn read_power_log<R: Read>(source: R) -> Result<PowerLog, MeteringError> {
    let mut logs = read_power_logs(source)?;
    match logs.len() {
        0 => Err(MeteringError::Csv {
            line: None,
            message: "power log has no samples".into(),
        }),
        1 => Ok(logs.remove(0)),
        _ => Err(MeteringError::MixedComponents(
            logs.iter().map(|l| l.component.clone()).collect(),
        )),
    }
}

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{integrate_power, quantize_time, Clock, Meter, MeterBackend, MeteringError, MonotonicClock, PowerLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Idle,
    Running,
    Stopped,
}

impl std::fmt::Display for SessionState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SessionState::Idle => "idle",
            SessionState::Running => "running",
            SessionState::Stopped => "stopped",
        })
    }
}

/// Time and energy of one measured region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub time_s: f64,
    /// Joules per component.
    pub energy_j: BTreeMap<String, f64>,
    pub energy_total_j: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// One start/stop region over a set of backends.
///
/// ```
/// use peff_core::metering::{MeasurementSession, MeterBackend};
///
/// let mut session = MeasurementSession::new(&[MeterBackend::Wallclock]);
/// session.start().unwrap();
/// session.stop().unwrap();
/// let m = session.get_value().unwrap();
/// assert!(m.time_s >= 0.0);
/// assert_eq!(m.energy_total_j, 0.0);
/// ```
pub struct MeasurementSession {
    state: SessionState,
    clock: Arc<dyn Clock>,
    backends: Vec<MeterBackend>,
    meters: Vec<Box<dyn Meter>>,
    t_start: f64,
    t_stop: f64,
    logs: BTreeMap<String, PowerLog>,
    warnings: Vec<String>,
}

impl std::fmt::Debug for MeasurementSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasurementSession")
            .field("state", &self.state)
            .field("backends", &self.backends)
            .field("t_start", &self.t_start)
            .field("t_stop", &self.t_stop)
            .finish_non_exhaustive()
    }
}

impl MeasurementSession {
    pub fn new(backends: &[MeterBackend]) -> Self {
        Self::with_clock(backends, MonotonicClock::shared())
    }

    pub fn with_clock(backends: &[MeterBackend], clock: Arc<dyn Clock>) -> Self {
        MeasurementSession {
            state: SessionState::Idle,
            meters: backends.iter().map(|b| b.instantiate(clock.clone())).collect(),
            clock,
            backends: backends.to_vec(),
            t_start: 0.0,
            t_stop: 0.0,
            logs: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn backends(&self) -> &[MeterBackend] {
        &self.backends
    }

    fn expect(&self, op: &'static str, want: SessionState) -> Result<(), MeteringError> {
        if self.state != want {
            return Err(MeteringError::State { op, state: self.state });
        }
        Ok(())
    }

    pub fn start(&mut self) -> Result<(), MeteringError> {
        self.expect("start", SessionState::Idle)?;
        let t = quantize_time(self.clock.now());
        for i in 0..self.meters.len() {
            if let Err(e) = self.meters[i].start(t) {
                for m in &mut self.meters[..i] {
                    let _ = m.stop(t);
                }
                return Err(e);
            }
        }
        self.t_start = t;
        self.state = SessionState::Running;
        Ok(())
    }

    /// Captures the stop time first, then drains every backend.
    pub fn stop(&mut self) -> Result<(), MeteringError> {
        self.expect("stop", SessionState::Running)?;
        let t = quantize_time(self.clock.now()).max(self.t_start);
        self.t_stop = t;
        self.state = SessionState::Stopped;
        let mut first_err = None;
        for m in &mut self.meters {
            match m.stop(t) {
                Ok(out) => {
                    self.warnings.extend(out.warnings);
                    for log in out.logs {
                        if self.logs.contains_key(log.component()) {
                            first_err.get_or_insert(MeteringError::DuplicateComponent(log.component().to_string()));
                            continue;
                        }
                        self.logs.insert(log.component().to_string(), log);
                    }
                }
                Err(e) => {
                    self.warnings.push(e.to_string());
                    first_err.get_or_insert(e);
                }
            }
        }
        for w in &self.warnings {
            log::warn!("{w}");
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn get_value(&self) -> Result<Measurement, MeteringError> {
        self.expect("get_value", SessionState::Stopped)?;
        let mut warnings = self.warnings.clone();
        let mut energy_j = BTreeMap::new();
        for (component, log) in &self.logs {
            let e = integrate_power(log, self.t_start, self.t_stop);
            if e.degenerate && self.t_stop > self.t_start {
                warnings.push(format!(
                    "{component}: fewer than two samples in region, energy set to 0"
                ));
            }
            energy_j.insert(component.clone(), e.joules);
        }
        Ok(Measurement {
            time_s: quantize_time(self.t_stop - self.t_start),
            energy_total_j: energy_j.values().fold(0.0, |acc, e| acc + e),
            energy_j,
            warnings,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_stop(&self) -> f64 {
        self.t_stop
    }

    /// Power logs by component; populated once the session has stopped.
    pub fn logs(&self) -> &BTreeMap<String, PowerLog> {
        &self.logs
    }
}

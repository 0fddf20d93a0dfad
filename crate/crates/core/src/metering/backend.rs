//! Meter backends: descriptors ([`MeterBackend`]) and the live meters they
//! instantiate for one session.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::integrate::value_at;
use super::{read_power_logs, Clock, MeteringError, PowerLog};

pub const DEFAULT_INTERVAL_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Wallclock,
    SampledPower,
    EnergyCounter,
    Composite,
    Replay,
}

/// Where a sampled backend gets its instantaneous wattage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSource {
    /// Shell command printing one wattage number per invocation.
    Command(String),
    /// A constant reading.
    Fixed(f64),
}

impl PowerSource {
    pub fn read_watts(&self) -> Result<f64, String> {
        match self {
            PowerSource::Fixed(w) => Ok(*w),
            PowerSource::Command(cmd) => {
                let out = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .output()
                    .map_err(|e| format!("cannot run {cmd:?}: {e}"))?;
                if !out.status.success() {
                    return Err(format!("{cmd:?} exited with {}", out.status));
                }
                parse_watts(&String::from_utf8_lossy(&out.stdout)).ok_or_else(|| format!("{cmd:?} printed no wattage"))
            }
        }
    }
}

/// First whitespace-separated token that parses as a finite number.
pub fn parse_watts(text: &str) -> Option<f64> {
    text.split_whitespace()
        .filter_map(|tok| tok.trim_end_matches(['W', 'w']).parse::<f64>().ok())
        .find(|w| w.is_finite())
}

/// A cumulative energy counter file in microjoules, e.g. a powercap
/// `energy_uj` file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterFile {
    pub path: PathBuf,
    pub component: String,
    /// Counter wraps to zero after this value.
    pub max_range_uj: Option<u64>,
}

impl CounterFile {
    pub fn read_uj(&self) -> Result<u64, MeteringError> {
        let text = std::fs::read_to_string(&self.path)?;
        text.trim().parse().map_err(|_| MeteringError::Backend {
            component: self.component.clone(),
            message: format!("{}: not a counter value: {:?}", self.path.display(), text.trim()),
        })
    }
}

/// A recorded power trace replayed against the session clock. Trace time 0
/// is aligned with the session start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayTrace {
    pub path: Option<PathBuf>,
    pub logs: Vec<PowerLog>,
}

impl ReplayTrace {
    pub fn load(path: &Path) -> Result<Self, MeteringError> {
        let file = std::fs::File::open(path)?;
        let logs = read_power_logs(std::io::BufReader::new(file))?;
        if logs.is_empty() {
            return Err(MeteringError::Csv {
                line: None,
                message: format!("{}: replay trace has no samples", path.display()),
            });
        }
        Ok(ReplayTrace {
            path: Some(path.to_path_buf()),
            logs,
        })
    }

    pub fn from_logs(logs: Vec<PowerLog>) -> Self {
        ReplayTrace { path: None, logs }
    }
}

/// Descriptor of a measurement backend. Cheap to clone; every session
/// instantiates fresh live meters from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterBackend {
    Wallclock,
    SampledPower {
        source: PowerSource,
        interval_s: f64,
        component: String,
    },
    EnergyCounter(CounterFile),
    Replay(ReplayTrace),
    Composite(Vec<MeterBackend>),
}

impl MeterBackend {
    pub fn kind(&self) -> BackendKind {
        match self {
            MeterBackend::Wallclock => BackendKind::Wallclock,
            MeterBackend::SampledPower { .. } => BackendKind::SampledPower,
            MeterBackend::EnergyCounter(_) => BackendKind::EnergyCounter,
            MeterBackend::Replay(_) => BackendKind::Replay,
            MeterBackend::Composite(_) => BackendKind::Composite,
        }
    }

    pub fn sampling_interval_s(&self) -> Option<f64> {
        match self {
            MeterBackend::SampledPower { interval_s, .. } => Some(*interval_s),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MeterBackend::Wallclock => "wallclock".into(),
            MeterBackend::SampledPower {
                source,
                interval_s,
                component,
            } => {
                format!("sampled_power[{component}] {source:?} every {interval_s}s")
            }
            MeterBackend::EnergyCounter(c) => {
                format!("energy_counter[{}] {}", c.component, c.path.display())
            }
            MeterBackend::Replay(t) => match &t.path {
                Some(p) => format!("replay {}", p.display()),
                None => format!("replay ({} components)", t.logs.len()),
            },
            MeterBackend::Composite(parts) => format!(
                "composite({})",
                parts.iter().map(|p| p.describe()).collect::<Vec<_>>().join(", ")
            ),
        }
    }

    pub fn instantiate(&self, clock: Arc<dyn Clock>) -> Box<dyn Meter> {
        match self {
            MeterBackend::Wallclock => Box::new(WallclockMeter),
            MeterBackend::SampledPower {
                source,
                interval_s,
                component,
            } => Box::new(SampledMeter {
                source: source.clone(),
                interval: Duration::from_secs_f64(interval_s.max(1e-3)),
                component: component.clone(),
                clock,
                shared: Arc::new(Mutex::new(PowerLog::new(component.clone()))),
                poller: None,
            }),
            MeterBackend::EnergyCounter(c) => Box::new(CounterMeter {
                counter: c.clone(),
                start: None,
            }),
            MeterBackend::Replay(trace) => Box::new(ReplayMeter {
                trace: trace.clone(),
                t_start: None,
            }),
            MeterBackend::Composite(parts) => Box::new(CompositeMeter {
                parts: parts.iter().map(|p| p.instantiate(clock.clone())).collect(),
            }),
        }
    }
}

#[derive(Debug, Default)]
pub struct MeterOutput {
    pub logs: Vec<PowerLog>,
    pub warnings: Vec<String>,
}

/// A live meter bound to one session.
pub trait Meter: Send {
    fn kind(&self) -> BackendKind;
    fn start(&mut self, t_start: f64) -> Result<(), MeteringError>;
    /// Ends sampling and hands over the logs; only samples in
    /// `[t_start, t_stop]` are returned.
    fn stop(&mut self, t_stop: f64) -> Result<MeterOutput, MeteringError>;
}

struct WallclockMeter;

impl Meter for WallclockMeter {
    fn kind(&self) -> BackendKind {
        BackendKind::Wallclock
    }
    fn start(&mut self, _: f64) -> Result<(), MeteringError> {
        Ok(())
    }
    fn stop(&mut self, _: f64) -> Result<MeterOutput, MeteringError> {
        Ok(MeterOutput::default())
    }
}

struct Poller {
    stop_tx: Sender<()>,
    handle: JoinHandle<Vec<String>>,
}

struct SampledMeter {
    source: PowerSource,
    interval: Duration,
    component: String,
    clock: Arc<dyn Clock>,
    shared: Arc<Mutex<PowerLog>>,
    poller: Option<Poller>,
}

impl Meter for SampledMeter {
    fn kind(&self) -> BackendKind {
        BackendKind::SampledPower
    }

    fn start(&mut self, t_start: f64) -> Result<(), MeteringError> {
        let watts = self.source.read_watts().map_err(|message| MeteringError::Backend {
            component: self.component.clone(),
            message,
        })?;
        let mut log = PowerLog::new(self.component.clone());
        log.push(t_start, watts)?;
        *self.shared.lock().unwrap() = log;

        let (stop_tx, stop_rx) = mpsc::channel::<()>();
        let shared = Arc::clone(&self.shared);
        let clock = Arc::clone(&self.clock);
        let source = self.source.clone();
        let interval = self.interval;
        let handle = std::thread::spawn(move || {
            let mut warnings = Vec::new();
            let mut next = Instant::now() + interval;
            while let Err(RecvTimeoutError::Timeout) =
                stop_rx.recv_timeout(next.saturating_duration_since(Instant::now()))
            {
                let t = clock.now();
                match source.read_watts() {
                    Ok(w) => {
                        if let Err(e) = shared.lock().unwrap().push(t, w) {
                            warnings.push(e.to_string());
                        }
                    }
                    Err(e) => warnings.push(e),
                }
                next += interval;
                let now = Instant::now();
                if next < now {
                    next = now;
                }
            }
            warnings
        });
        self.poller = Some(Poller { stop_tx, handle });
        Ok(())
    }

    fn stop(&mut self, t_stop: f64) -> Result<MeterOutput, MeteringError> {
        let mut warnings = Vec::new();
        if let Some(p) = self.poller.take() {
            let _ = p.stop_tx.send(());
            match p.handle.join() {
                Ok(w) => warnings.extend(w),
                Err(_) => warnings.push(format!("{}: poller thread panicked", self.component)),
            }
        }
        let drained = std::mem::replace(&mut *self.shared.lock().unwrap(), PowerLog::new(self.component.clone()));
        let t_stop = super::quantize_time(t_stop);
        let mut log = PowerLog::new(self.component.clone());
        for s in drained.samples().iter().filter(|s| s.t < t_stop) {
            log.push(s.t, s.watts)?;
        }
        let final_watts = match self.source.read_watts() {
            Ok(w) => Some(w),
            Err(e) => {
                warnings.push(format!(
                    "{}: final sample failed ({e}); holding last value",
                    self.component
                ));
                log.samples().last().map(|s| s.watts)
            }
        };
        if let Some(w) = final_watts {
            if log.last_t().is_none_or(|t| t < t_stop) {
                log.push(t_stop, w)?;
            }
        }
        Ok(MeterOutput {
            logs: vec![log],
            warnings,
        })
    }
}

struct CounterMeter {
    counter: CounterFile,
    start: Option<(f64, u64)>,
}

impl Meter for CounterMeter {
    fn kind(&self) -> BackendKind {
        BackendKind::EnergyCounter
    }

    fn start(&mut self, t_start: f64) -> Result<(), MeteringError> {
        self.start = Some((t_start, self.counter.read_uj()?));
        Ok(())
    }

    fn stop(&mut self, t_stop: f64) -> Result<MeterOutput, MeteringError> {
        let Some((t0, e0)) = self.start.take() else {
            return Ok(MeterOutput::default());
        };
        let e1 = self.counter.read_uj()?;
        let delta_uj = if e1 >= e0 {
            e1 - e0
        } else {
            match self.counter.max_range_uj {
                Some(max) => max - e0 + e1,
                None => {
                    return Err(MeteringError::Backend {
                        component: self.counter.component.clone(),
                        message: "energy counter went backwards".into(),
                    })
                }
            }
        };
        let mut log = PowerLog::new(self.counter.component.clone());
        let dt = t_stop - t0;
        // Two samples at the mean power integrate back to exactly the
        // counter delta.
        if dt > 0.0 {
            let watts = delta_uj as f64 * 1e-6 / dt;
            log.push(t0, watts)?;
            log.push(t_stop, watts)?;
        }
        Ok(MeterOutput {
            logs: vec![log],
            warnings: Vec::new(),
        })
    }
}

struct ReplayMeter {
    trace: ReplayTrace,
    t_start: Option<f64>,
}

impl Meter for ReplayMeter {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn start(&mut self, t_start: f64) -> Result<(), MeteringError> {
        self.t_start = Some(t_start);
        Ok(())
    }

    fn stop(&mut self, t_stop: f64) -> Result<MeterOutput, MeteringError> {
        let Some(t_start) = self.t_start.take() else {
            return Ok(MeterOutput::default());
        };
        let span = t_stop - t_start;
        let mut out = MeterOutput::default();
        for trace in self.trace.logs.iter().filter(|l| !l.is_empty()) {
            let last = trace.last_t().unwrap_or(0.0);
            if span > last {
                out.warnings.push(format!(
                    "{}: region ({span:.3}s) outruns replay trace ({last:.3}s); holding last value",
                    trace.component()
                ));
            }
            let mut log = PowerLog::new(trace.component());
            log.push(t_start, value_at(trace, 0.0))?;
            for s in trace.samples().iter().filter(|s| s.t > 0.0 && s.t < span) {
                let t = t_start + s.t;
                if log.last_t().is_some_and(|prev| super::quantize_time(t) <= prev) {
                    continue;
                }
                log.push(t, s.watts)?;
            }
            if span > 0.0 && log.last_t().is_some_and(|prev| prev < super::quantize_time(t_stop)) {
                log.push(t_stop, value_at(trace, span))?;
            }
            out.logs.push(log);
        }
        Ok(out)
    }
}

struct CompositeMeter {
    parts: Vec<Box<dyn Meter>>,
}

impl Meter for CompositeMeter {
    fn kind(&self) -> BackendKind {
        BackendKind::Composite
    }

    fn start(&mut self, t_start: f64) -> Result<(), MeteringError> {
        for i in 0..self.parts.len() {
            if let Err(e) = self.parts[i].start(t_start) {
                for started in &mut self.parts[..i] {
                    let _ = started.stop(t_start);
                }
                return Err(e);
            }
        }
        Ok(())
    }

    fn stop(&mut self, t_stop: f64) -> Result<MeterOutput, MeteringError> {
        let mut out = MeterOutput::default();
        let mut first_err = None;
        for part in &mut self.parts {
            match part.stop(t_stop) {
                Ok(o) => {
                    out.logs.extend(o.logs);
                    out.warnings.extend(o.warnings);
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

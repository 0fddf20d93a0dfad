//! Start/stop measurement of time and energy over pluggable power backends.
//!
//! A [`MeasurementSession`] encloses one region. Backends contribute
//! timestamped [`PowerLog`]s; energy per component is the trapezoidal
//! integral of its log over the region.

mod backend;
mod clock;
mod detect;
mod integrate;
mod log;
mod session;

pub use backend::{
    parse_watts, BackendKind, CounterFile, Meter, MeterBackend, MeterOutput, PowerSource, ReplayTrace,
    DEFAULT_INTERVAL_S,
};
pub use clock::{Clock, ManualClock, MonotonicClock};
pub use detect::{
    detect_environment, find_energy_counters, ProbeConfig, DEFAULT_POWERCAP_ROOT, ENV_POWER_CMD, ENV_REPLAY_TRACE,
};
pub use integrate::{integrate_power, Integral};
pub use log::{
    quantize_time, read_power_log, read_power_logs, write_power_log, write_power_logs, PowerLog, PowerSample,
    CSV_HEADER,
};
pub use session::{Measurement, MeasurementSession, SessionState};

#[derive(Debug, thiserror::Error)]
pub enum MeteringError {
    #[error("cannot {op} a session that is {state}")]
    State { op: &'static str, state: SessionState },
    #[error("invalid power sample: {0}")]
    InvalidSample(String),
    #[error("timestamps must be strictly increasing in {component}: {t} after {prev}")]
    NonMonotonic { component: String, prev: f64, t: f64 },
    #[error("power log{}: {message}", line.map(|l| format!(", line {l}")).unwrap_or_default())]
    Csv { line: Option<u64>, message: String },
    #[error("expected one component, found {0:?}")]
    MixedComponents(Vec<String>),
    #[error("two backends report component {0:?}")]
    DuplicateComponent(String),
    #[error("backend {component}: {message}")]
    Backend { component: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

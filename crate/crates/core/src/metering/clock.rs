use std::fmt::Debug;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

/// Source of monotonic seconds shared by a session and its backends.
pub trait Clock: Send + Sync + Debug {
    fn now(&self) -> f64;
}

/// Seconds since the first use of the process-wide monotonic origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct MonotonicClock;

static ORIGIN: OnceLock<Instant> = OnceLock::new();

impl MonotonicClock {
    pub fn shared() -> Arc<dyn Clock> {
        Arc::new(MonotonicClock)
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> f64 {
        ORIGIN.get_or_init(Instant::now).elapsed().as_secs_f64()
    }
}

/// A clock that only moves when told to. Used to drive sessions
/// deterministically.
#[derive(Debug, Default)]
pub struct ManualClock {
    t: Mutex<f64>,
}

impl ManualClock {
    pub fn new(t: f64) -> Arc<Self> {
        Arc::new(ManualClock { t: Mutex::new(t) })
    }

    pub fn set(&self, t: f64) {
        *self.t.lock().unwrap() = t;
    }

    pub fn advance(&self, dt: f64) {
        *self.t.lock().unwrap() += dt;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        *self.t.lock().unwrap()
    }
}

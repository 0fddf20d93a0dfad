use serde::{Deserialize, Serialize};

use super::PowerLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub joules: f64,
    /// Points used: samples inside the window plus interpolated ends.
    pub points: usize,
    /// Fewer than two points were available; `joules` is 0.
    pub degenerate: bool,
}

impl Integral {
    fn degenerate(points: usize) -> Self {
        Integral {
            joules: 0.0,
            points,
            degenerate: true,
        }
    }
}

pub(crate) fn value_at(log: &PowerLog, t: f64) -> f64 {
    let s = log.samples();
    let hi = s.partition_point(|p| p.t < t);
    if hi == 0 {
        return s[0].watts;
    }
    if hi == s.len() {
        return s[s.len() - 1].watts;
    }
    let (a, b) = (&s[hi - 1], &s[hi]);
    if b.t == t {
        return b.watts;
    }
    a.watts + (b.watts - a.watts) * (t - a.t) / (b.t - a.t)
}

/// Trapezoidal energy of `log` over `[t0, t1]`.
///
/// The window is clipped to the span covered by the samples; ends falling
/// between two samples are linearly interpolated. No extrapolation happens
/// outside the first and last sample.
pub fn integrate_power(log: &PowerLog, t0: f64, t1: f64) -> Integral {
    let s = log.samples();
    // NaN bounds fall through to the degenerate result as well.
    if s.is_empty() || t0.partial_cmp(&t1).is_none_or(|o| o.is_gt()) {
        return Integral::degenerate(0);
    }
    let lo = t0.max(s[0].t);
    let hi = t1.min(s[s.len() - 1].t);
    if lo >= hi {
        let inside = s.iter().filter(|p| p.t >= t0 && p.t <= t1).count();
        return Integral::degenerate(inside.min(1));
    }

    let first_inner = s.partition_point(|p| p.t <= lo);
    let end_inner = s.partition_point(|p| p.t < hi);
    let mut prev = (lo, value_at(log, lo));
    let mut joules = 0.0;
    let mut points = 1;
    for p in &s[first_inner..end_inner] {
        joules += 0.5 * (prev.1 + p.watts) * (p.t - prev.0);
        prev = (p.t, p.watts);
        points += 1;
    }
    joules += 0.5 * (prev.1 + value_at(log, hi)) * (hi - prev.0);
    points += 1;
    Integral {
        joules,
        points,
        degenerate: false,
    }
}

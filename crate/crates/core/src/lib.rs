//! Programming-effort statistics and time/energy metering for comparing
//! parallel programming frameworks on heterogeneous nodes.
//!
//! - [`codestat`] attributes source lines to frameworks and computes effort.
//! - [`metering`] encloses a region with start/stop and integrates power.
//! - [`harness`] runs benchmark commands inside measurement sessions.
//! - [`report`] renders effort tables, ratios and time/energy comparisons.

pub mod codestat;
pub mod harness;
pub mod metering;
pub mod report;

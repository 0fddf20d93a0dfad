use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CounterFile, MeterBackend, PowerSource, ReplayTrace, DEFAULT_INTERVAL_S};

pub const ENV_REPLAY_TRACE: &str = "XMPU_REPLAY_TRACE";
pub const ENV_POWER_CMD: &str = "XMPU_POWER_CMD";
pub const DEFAULT_POWERCAP_ROOT: &str = "/sys/class/powercap";

/// Inputs to the backend probe chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub replay_trace: Option<PathBuf>,
    pub power_cmd: Option<String>,
    pub interval_s: f64,
    /// Directory holding `*-rapl:N/energy_uj` counters; `None` skips them.
    pub powercap_root: Option<PathBuf>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            replay_trace: None,
            power_cmd: None,
            interval_s: DEFAULT_INTERVAL_S,
            powercap_root: Some(PathBuf::from(DEFAULT_POWERCAP_ROOT)),
        }
    }
}

impl ProbeConfig {
    /// Defaults overlaid with the `XMPU_*` environment variables.
    pub fn from_env() -> Self {
        let mut cfg = ProbeConfig::default();
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(p) = var(ENV_REPLAY_TRACE).filter(|v| !v.is_empty()) {
            self.replay_trace = Some(PathBuf::from(p));
        }
        if let Some(c) = var(ENV_POWER_CMD).filter(|v| !v.trim().is_empty()) {
            self.power_cmd = Some(c);
        }
    }
}

/// Top-level RAPL-style zones under `root` with a readable counter.
pub fn find_energy_counters(root: &Path) -> Vec<CounterFile> {
    let Ok(entries) = std::fs::read_dir(root) else {
        return Vec::new();
    };
    let mut zones: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.split_once("-rapl:"))
                .is_some_and(|(_, idx)| !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()))
        })
        .collect();
    zones.sort();

    let mut counters: Vec<CounterFile> = Vec::new();
    for zone in zones {
        let energy = zone.join("energy_uj");
        if std::fs::read_to_string(&energy).is_err() {
            continue;
        }
        let dir_name = zone.file_name().unwrap().to_string_lossy().into_owned();
        let mut component = std::fs::read_to_string(zone.join("name"))
            .map(|s| s.trim().to_string())
            .ok()
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| dir_name.clone());
        if counters.iter().any(|c| c.component == component) {
            component = format!("{component}@{dir_name}");
        }
        let max_range_uj = std::fs::read_to_string(zone.join("max_energy_range_uj"))
            .ok()
            .and_then(|s| s.trim().parse().ok());
        counters.push(CounterFile {
            path: energy,
            component,
            max_range_uj,
        });
    }
    counters
}

/// Probes for power sources: replay trace, then power command, then energy
/// counter files. The first source found is used next to the wall clock,
/// which is always present.
pub fn detect_environment(cfg: &ProbeConfig) -> Vec<MeterBackend> {
    let mut found = vec![MeterBackend::Wallclock];
    if let Some(path) = &cfg.replay_trace {
        match ReplayTrace::load(path) {
            Ok(trace) => {
                log::info!("metering: replaying {}", path.display());
                found.push(MeterBackend::Replay(trace));
                return found;
            }
            Err(e) => log::warn!("metering: ignoring replay trace {}: {e}", path.display()),
        }
    }
    if let Some(cmd) = &cfg.power_cmd {
        log::info!("metering: polling {cmd:?} every {}s", cfg.interval_s);
        found.push(MeterBackend::SampledPower {
            source: PowerSource::Command(cmd.clone()),
            interval_s: cfg.interval_s,
            component: "system".into(),
        });
        return found;
    }
    if let Some(root) = &cfg.powercap_root {
        let counters = find_energy_counters(root);
        if !counters.is_empty() {
            log::info!(
                "metering: {} energy counter(s) under {}",
                counters.len(),
                root.display()
            );
            found.push(MeterBackend::Composite(
                counters.into_iter().map(MeterBackend::EnergyCounter).collect(),
            ));
            return found;
        }
    }
    log::warn!("metering: no power source found, measuring time only");
    found
}

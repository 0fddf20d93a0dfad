use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use peff_core::codestat::{default_profiles, load_profiles, FrameworkProfile};
use peff_core::metering::{ProbeConfig, ReplayTrace, DEFAULT_INTERVAL_S};

/// Settings read from `--config`, then overridden by environment variables
/// and command-line flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    pub profiles: Option<PathBuf>,
    pub interval_s: Option<f64>,
    pub replay: Option<PathBuf>,
    pub power_cmd: Option<String>,
    /// Set to `false` to skip energy-counter files.
    pub energy_counters: Option<bool>,
    pub powercap_root: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub verbosity: Option<u8>,
}

impl GlobalConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(p) = &self.profiles {
            if !p.is_file() {
                bail!("profile config {} not found", p.display());
            }
        }
        if let Some(i) = self.interval_s {
            if !(i > 0.0 && i.is_finite()) {
                bail!("sampling interval must be positive, got {i}");
            }
        }
        if let Some(r) = &self.replay {
            ReplayTrace::load(r).with_context(|| format!("replay trace {}", r.display()))?;
        }
        Ok(())
    }

    pub fn profiles(&self) -> anyhow::Result<Vec<FrameworkProfile>> {
        match &self.profiles {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                load_profiles(&text).with_context(|| format!("{}", p.display()))
            }
            None => Ok(default_profiles()?),
        }
    }

    pub fn probe(&self) -> ProbeConfig {
        let defaults = ProbeConfig::default();
        ProbeConfig {
            replay_trace: self.replay.clone(),
            power_cmd: self.power_cmd.clone(),
            interval_s: self.interval_s.unwrap_or(DEFAULT_INTERVAL_S),
            powercap_root: match self.energy_counters {
                Some(false) => None,
                _ => self.powercap_root.clone().or(defaults.powercap_root),
            },
        }
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// A command given either as one shell-quoted string or as an argv list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CommandSpec {
    Line(String),
    Argv(Vec<String>),
}

impl CommandSpec {
    pub fn argv(&self) -> Result<Vec<String>, HarnessError> {
        let argv = match self {
            CommandSpec::Argv(v) => v.clone(),
            CommandSpec::Line(s) => {
                shlex::split(s).ok_or_else(|| HarnessError::Config(format!("cannot split command {s:?}")))?
            }
        };
        if argv.is_empty() || argv[0].is_empty() {
            return Err(HarnessError::Config("empty command".into()));
        }
        Ok(argv)
    }
}

/// One benchmark: an application in one framework.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub name: String,
    pub framework: String,
    pub workdir: PathBuf,
    pub build_cmd: Option<Vec<String>>,
    /// Program followed by its arguments.
    pub run_cmd: Vec<String>,
    pub env: BTreeMap<String, String>,
    pub repetitions: u32,
    pub timeout_s: Option<f64>,
    pub warmup_runs: u32,
}

pub const DEFAULT_REPETITIONS: u32 = 5;

impl BenchmarkSpec {
    /// A spec with default settings running `run_cmd` in the current directory.
    pub fn new(name: impl Into<String>, framework: impl Into<String>, run_cmd: Vec<String>) -> Self {
        BenchmarkSpec {
            name: name.into(),
            framework: framework.into(),
            workdir: PathBuf::from("."),
            build_cmd: None,
            run_cmd,
            env: BTreeMap::new(),
            repetitions: DEFAULT_REPETITIONS,
            timeout_s: None,
            warmup_runs: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(format!("benchmark {:?}: {m}", self.name)));
        if self.name.trim().is_empty() {
            return bad("name is empty".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.run_cmd.first().is_none_or(|p| p.is_empty()) {
            return bad("run_cmd is empty".into());
        }
        if let Some(t) = self.timeout_s {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("timeout_s must be positive, got {t}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteDefaults {
    pub framework: Option<String>,
    pub workdir: Option<PathBuf>,
    pub build_cmd: Option<CommandSpec>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    pub repetitions: Option<u32>,
    pub timeout_s: Option<f64>,
    pub warmup_runs: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub name: String,
    pub framework: Option<String>,
    pub workdir: Option<PathBuf>,
    pub build_cmd: Option<CommandSpec>,
    pub run_cmd: CommandSpec,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    pub repetitions: Option<u32>,
    pub timeout_s: Option<f64>,
    pub warmup_runs: Option<u32>,
}

/// The suite config file: shared defaults plus a benchmark list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub defaults: SuiteDefaults,
    pub benchmarks: Vec<SuiteEntry>,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("suite config, line {}: {e}", e.line())))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies defaults and resolves relative workdirs against `base`.
    pub fn resolve(&self, base: &Path) -> Result<Vec<BenchmarkSpec>, HarnessError> {
        let d = &self.defaults;
        self.benchmarks
            .iter()
            .map(|b| {
                let mut run_cmd = b.run_cmd.argv()?;
                run_cmd.extend(b.args.iter().cloned());
                let build_cmd = b
                    .build_cmd
                    .as_ref()
                    .or(d.build_cmd.as_ref())
                    .map(CommandSpec::argv)
                    .transpose()?;
                let workdir = b
                    .workdir
                    .clone()
                    .or_else(|| d.workdir.clone())
                    .unwrap_or_else(|| PathBuf::from("."));
                let mut env = d.env.clone();
                env.extend(b.env.clone());
                let spec = BenchmarkSpec {
                    name: b.name.clone(),
                    framework: b.framework.clone().or_else(|| d.framework.clone()).unwrap_or_default(),
                    workdir: if workdir.is_absolute() {
                        workdir
                    } else {
                        base.join(workdir)
                    },
                    build_cmd,
                    run_cmd,
                    env,
                    repetitions: b.repetitions.or(d.repetitions).unwrap_or(DEFAULT_REPETITIONS),
                    timeout_s: b.timeout_s.or(d.timeout_s),
                    warmup_runs: b.warmup_runs.or(d.warmup_runs).unwrap_or(0),
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}

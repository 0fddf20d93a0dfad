use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{BenchmarkSpec, HarnessError};
use crate::metering::{write_power_logs, Clock, MeasurementSession, MeterBackend, MonotonicClock};

/// Outcome of one measured repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub framework: String,
    /// 1-based.
    pub repetition: u32,
    /// `None` when the child was killed by a signal or the timeout.
    pub exit_status: Option<i32>,
    #[serde(default)]
    pub timed_out: bool,
    pub time_s: f64,
    pub energy_j: BTreeMap<String, f64>,
    pub energy_total_j: f64,
    pub power_log_path: Option<PathBuf>,
    pub started_at: String,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.exit_status == Some(0) && !self.timed_out
    }
}

/// Where the child's stdout and stderr go.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ChildOutput {
    /// Both streams to our stderr, keeping our stdout clean for reports.
    #[default]
    ToStderr,
    Inherit,
    Null,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Power logs go to `<out_dir>/logs`, the suite manifest to
    /// `<out_dir>/records.jsonl`. Nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    pub clock: Arc<dyn Clock>,
    pub child_output: ChildOutput,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: None,
            clock: MonotonicClock::shared(),
            child_output: ChildOutput::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Exit {
    code: Option<i32>,
    timed_out: bool,
}

fn stdio(mode: ChildOutput) -> (Stdio, Stdio) {
    match mode {
        ChildOutput::ToStderr => (Stdio::from(std::io::stderr()), Stdio::from(std::io::stderr())),
        ChildOutput::Inherit => (Stdio::inherit(), Stdio::inherit()),
        ChildOutput::Null => (Stdio::null(), Stdio::null()),
    }
}

fn spawn(argv: &[String], spec: &BenchmarkSpec, mode: ChildOutput) -> Result<Child, HarnessError> {
    let (out, err) = stdio(mode);
    Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(&spec.workdir)
        .envs(&spec.env)
        .stdin(Stdio::null())
        .stdout(out)
        .stderr(err)
        .spawn()
        .map_err(|source| HarnessError::Spawn {
            command: argv.join(" "),
            source,
        })
}

fn wait(mut child: Child, timeout_s: Option<f64>) -> Result<Exit, HarnessError> {
    match timeout_s {
        None => {
            let status = child.wait()?;
            Ok(Exit {
                code: status.code(),
                timed_out: false,
            })
        }
        Some(t) => match child.wait_timeout(Duration::from_secs_f64(t))? {
            Some(status) => Ok(Exit {
                code: status.code(),
                timed_out: false,
            }),
            None => {
                let _ = child.kill();
                child.wait()?;
                Ok(Exit {
                    code: None,
                    timed_out: true,
                })
            }
        },
    }
}

/// Runs a command to completion outside any measurement.
fn run_unmeasured(argv: &[String], spec: &BenchmarkSpec, mode: ChildOutput) -> Result<Exit, HarnessError> {
    wait(spawn(argv, spec, mode)?, spec.timeout_s)
}

fn file_stem(spec: &BenchmarkSpec, rep: u32) -> String {
    let clean = |s: &str| {
        s.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect::<String>()
    };
    format!("{}_{}_{rep}", clean(&spec.name), clean(&spec.framework))
}

/// Build (unmeasured), warm up (unmeasured), then one fresh measurement
/// session per repetition around a synchronous child execution.
pub fn run_benchmark(
    spec: &BenchmarkSpec,
    backends: &[MeterBackend],
    opts: &RunOptions,
) -> Result<Vec<RunRecord>, HarnessError> {
    spec.validate()?;
    if !spec.workdir.is_dir() {
        return Err(HarnessError::Config(format!(
            "benchmark {:?}: workdir {} does not exist",
            spec.name,
            spec.workdir.display()
        )));
    }
    if let Some(build) = &spec.build_cmd {
        log::info!("{}/{}: building", spec.name, spec.framework);
        let exit = run_unmeasured(build, spec, opts.child_output)?;
        if exit.code != Some(0) {
            return Err(HarnessError::BuildFailed {
                name: spec.name.clone(),
                status: exit.code,
            });
        }
    }
    for i in 0..spec.warmup_runs {
        let exit = run_unmeasured(&spec.run_cmd, spec, opts.child_output)?;
        log::info!(
            "{}/{}: warmup {} exited with {:?}",
            spec.name,
            spec.framework,
            i + 1,
            exit.code
        );
    }

    let log_dir = opts.out_dir.as_ref().map(|d| d.join("logs"));
    if let Some(d) = &log_dir {
        std::fs::create_dir_all(d)?;
    }

    let mut records = Vec::with_capacity(spec.repetitions as usize);
    for rep in 1..=spec.repetitions {
        let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
        let mut session = MeasurementSession::with_clock(backends, opts.clock.clone());
        session.start()?;
        let exit = match spawn(&spec.run_cmd, spec, opts.child_output) {
            Ok(child) => wait(child, spec.timeout_s),
            Err(e) => Err(e),
        };
        let stopped = session.stop();
        let exit = exit?;
        if let Err(e) = stopped {
            log::warn!("{}/{} rep {rep}: {e}", spec.name, spec.framework);
        }
        let m = session.get_value()?;

        let mut power_log_path = None;
        if let (Some(dir), false) = (&log_dir, session.logs().is_empty()) {
            let path = dir.join(format!("{}.csv", file_stem(spec, rep)));
            let file = std::fs::File::create(&path)?;
            write_power_logs(session.logs().values(), std::io::BufWriter::new(file))?;
            power_log_path = Some(path);
        }
        if exit.timed_out {
            log::warn!("{}/{} rep {rep}: timed out", spec.name, spec.framework);
        } else if exit.code != Some(0) {
            log::warn!(
                "{}/{} rep {rep}: exit status {:?}",
                spec.name,
                spec.framework,
                exit.code
            );
        }
        records.push(RunRecord {
            name: spec.name.clone(),
            framework: spec.framework.clone(),
            repetition: rep,
            exit_status: exit.code,
            timed_out: exit.timed_out,
            time_s: m.time_s,
            energy_j: m.energy_j,
            energy_total_j: m.energy_total_j,
            power_log_path,
            started_at,
        });
    }
    Ok(records)
}

/// A benchmark that could not run at all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFailure {
    pub name: String,
    pub framework: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<SpecFailure>,
    pub manifest: Option<PathBuf>,
}

pub const MANIFEST_FILE: &str = "records.jsonl";

/// Runs every benchmark one after another. A failing benchmark is recorded
/// and the suite moves on.
pub fn run_suite(
    specs: &[BenchmarkSpec],
    backends: &[MeterBackend],
    opts: &RunOptions,
) -> Result<SuiteOutcome, HarnessError> {
    let mut outcome = SuiteOutcome::default();
    for spec in specs {
        match run_benchmark(spec, backends, opts) {
            Ok(records) => outcome.records.extend(records),
            Err(e) => {
                log::error!("{}/{}: {e}", spec.name, spec.framework);
                outcome.failures.push(SpecFailure {
                    name: spec.name.clone(),
                    framework: spec.framework.clone(),
                    message: e.to_string(),
                });
            }
        }
    }
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        write_manifest(&outcome.records, std::fs::File::create(&path)?)?;
        outcome.manifest = Some(path);
    }
    Ok(outcome)
}

/// One JSON object per line.
pub fn write_manifest<W: Write>(records: &[RunRecord], dest: W) -> Result<(), HarnessError> {
    let mut w = std::io::BufWriter::new(dest);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use peff_core::codestat::{scan_tree, ScanOptions, StatOutput};
use peff_core::harness::{
    read_manifest, run_benchmark, run_suite, summarize, BenchmarkSpec, ChildOutput, RunOptions, SuiteConfig,
};
use peff_core::metering::{detect_environment, MeterBackend, ENV_POWER_CMD, ENV_REPLAY_TRACE};
use peff_core::report::{
    compare_rodinia, default_exclusions, effort_ratio, effort_table, headline_ratios, matrix_from_stats,
    perf_energy_table, render_deviations, render_ratios, EffortMatrix,
};

use config::GlobalConfig;

const EXIT_OK: u8 = 0;
const EXIT_CHILD_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "peff",
    version,
    about = "Parallelization effort, time and energy of benchmark codes"
)]
struct Cli {
    /// JSON settings file (profiles, interval_s, replay, power_cmd, out_dir, ...)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Framework profile config (JSON); built-in profiles when omitted
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,
    /// Machine-readable JSON on stdout instead of tables
    #[arg(long, global = true)]
    json: bool,
    /// Output directory for power logs and run manifests
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the repetition count of every benchmark
    #[arg(long, global = true)]
    reps: Option<u32>,
    /// Power sampling interval in seconds
    #[arg(long, global = true)]
    interval: Option<f64>,
    /// Replay a recorded power trace (CSV) instead of probing hardware
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count lines of code per framework and compute parallelization effort
    Stat {
        root: PathBuf,
        #[arg(long = "include")]
        include: Vec<String>,
        #[arg(long = "exclude")]
        exclude: Vec<String>,
    },
    /// Measure time and energy of one command
    Measure {
        /// Shell command printing the current wattage
        #[arg(long)]
        power_cmd: Option<String>,
        #[arg(last = true, required = true)]
        command: Vec<String>,
    },
    /// Run a benchmark suite
    Run {
        #[arg(long)]
        suite: PathBuf,
    },
    /// Effort tables, effort ratios and time/energy comparisons
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct MatrixArg {
    /// Effort matrix JSON; the shipped reference table when omitted
    #[arg(long)]
    matrix: Option<PathBuf>,
}

impl MatrixArg {
    fn load(&self) -> anyhow::Result<EffortMatrix> {
        match &self.matrix {
            None => Ok(EffortMatrix::reference()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(EffortMatrix::from_json(&text).with_context(|| format!("{}", p.display()))?)
            }
        }
    }
}

#[derive(Subcommand, Debug)]
enum ReportCommand {
    /// Effort percentages per application and (suite, framework)
    Effort {
        #[command(flatten)]
        matrix: MatrixArg,
        /// Build the table from `stat --json` outputs: APP:SUITE:FILE
        #[arg(long = "stat", conflicts_with = "matrix")]
        stats: Vec<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Mean-of-ratios effort comparisons between two columns
    Ratios {
        #[command(flatten)]
        matrix: MatrixArg,
        #[arg(long, requires = "b")]
        a: Option<String>,
        #[arg(long, requires = "a")]
        b: Option<String>,
        /// Applications to leave out (repeatable)
        #[arg(long = "exclude")]
        exclude: Vec<String>,
        /// Do not apply the built-in exclusions for this column pair
        #[arg(long)]
        no_default_exclusions: bool,
    },
    /// Time and energy per application and framework from a records manifest
    Perf {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Rescan a Rodinia checkout and compare with the reference table
    Rodinia {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("peff: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    env_logger::Builder::new()
        .filter_level(match cfg.verbosity.unwrap_or(0) {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .parse_env("PEFF_LOG")
        .init();
    if let Err(e) = cfg.validate() {
        eprintln!("peff: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    match dispatch(&cli, &mut cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("peff: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

/// Config file, then environment, then flags.
fn build_config(cli: &Cli) -> anyhow::Result<GlobalConfig> {
    let mut cfg = match &cli.config {
        Some(p) => GlobalConfig::load(p)?,
        None => GlobalConfig::default(),
    };
    if let Some(v) = std::env::var_os(ENV_REPLAY_TRACE).filter(|v| !v.is_empty()) {
        cfg.replay = Some(PathBuf::from(v));
    }
    if let Ok(v) = std::env::var(ENV_POWER_CMD) {
        if !v.trim().is_empty() {
            cfg.power_cmd = Some(v);
        }
    }
    if cli.profiles.is_some() {
        cfg.profiles = cli.profiles.clone();
    }
    if cli.out.is_some() {
        cfg.out_dir = cli.out.clone();
    }
    if cli.interval.is_some() {
        cfg.interval_s = cli.interval;
    }
    if cli.replay.is_some() {
        cfg.replay = cli.replay.clone();
    }
    if let Command::Measure { power_cmd: Some(c), .. } = &cli.command {
        cfg.power_cmd = Some(c.clone());
    }
    if cli.verbose > 0 {
        cfg.verbosity = Some(cli.verbose);
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn dispatch(cli: &Cli, cfg: &mut GlobalConfig) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Stat { root, include, exclude } => cmd_stat(cli, cfg, root, include, exclude),
        Command::Measure { command, .. } => cmd_measure(cfg, command),
        Command::Run { suite } => cmd_run(cli, cfg, suite),
        Command::Report(r) => cmd_report(cli, cfg, r),
    }
}

fn cmd_stat(cli: &Cli, cfg: &GlobalConfig, root: &Path, include: &[String], exclude: &[String]) -> anyhow::Result<u8> {
    let profiles = cfg.profiles()?;
    let opts = ScanOptions {
        include: include.to_vec(),
        exclude: exclude.to_vec(),
    };
    let stats = match scan_tree(root, &profiles, &opts) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("peff: {e}");
            return Ok(EXIT_USAGE);
        }
    };
    let out = StatOutput::new(&stats);
    if cli.json {
        print_json(&out)?;
    } else {
        print!("{}", out.render_table());
    }
    Ok(if stats.has_read_errors() { EXIT_USAGE } else { EXIT_OK })
}

fn backends(cfg: &GlobalConfig) -> Vec<MeterBackend> {
    let found = detect_environment(&cfg.probe());
    for b in &found {
        log::info!("backend: {}", b.describe());
    }
    found
}

#[derive(Serialize)]
struct MeasureOutput {
    time_s: f64,
    energy_j: std::collections::BTreeMap<String, f64>,
    energy_total_j: f64,
    exit_status: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_log_path: Option<PathBuf>,
    backends: Vec<String>,
}

fn cmd_measure(cfg: &GlobalConfig, command: &[String]) -> anyhow::Result<u8> {
    let backends = backends(cfg);
    let mut spec = BenchmarkSpec::new("measure", "command", command.to_vec());
    spec.repetitions = 1;
    let opts = RunOptions {
        out_dir: cfg.out_dir.clone(),
        ..Default::default()
    };
    let record = run_benchmark(&spec, &backends, &opts)?
        .pop()
        .ok_or_else(|| anyhow!("no measurement recorded"))?;
    print_json(&MeasureOutput {
        time_s: record.time_s,
        energy_j: record.energy_j,
        energy_total_j: record.energy_total_j,
        exit_status: record.exit_status,
        power_log_path: record.power_log_path,
        backends: backends.iter().map(MeterBackend::describe).collect(),
    })?;
    Ok(match record.exit_status {
        Some(0) => EXIT_OK,
        Some(code) => u8::try_from(code).ok().filter(|&c| c != 0).unwrap_or(EXIT_CHILD_FAILED),
        None => EXIT_CHILD_FAILED,
    })
}

fn cmd_run(cli: &Cli, cfg: &GlobalConfig, suite_path: &Path) -> anyhow::Result<u8> {
    let suite = SuiteConfig::load(suite_path)?;
    let base = suite_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut specs = suite.resolve(base)?;
    if let Some(n) = cli.reps {
        anyhow::ensure!(n >= 1, "--reps must be at least 1");
        specs.iter_mut().for_each(|s| s.repetitions = n);
    }
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("peff-results"));
    let opts = RunOptions {
        out_dir: Some(out_dir),
        child_output: ChildOutput::ToStderr,
        ..Default::default()
    };
    let outcome = run_suite(&specs, &backends(cfg), &opts)?;
    let summary = summarize(&outcome.records);
    if cli.json {
        print_json(&serde_json::json!({
            "manifest": outcome.manifest,
            "summary": summary,
            "failures": outcome.failures,
        }))?;
    } else {
        print!("{}", perf_energy_table(&summary).text);
        for f in &outcome.failures {
            println!("failed: {}/{}: {}", f.name, f.framework, f.message);
        }
        if let Some(m) = &outcome.manifest {
            println!("records: {}", m.display());
        }
    }
    let any_failed = !outcome.failures.is_empty() || outcome.records.iter().any(|r| !r.succeeded());
    Ok(if any_failed { EXIT_CHILD_FAILED } else { EXIT_OK })
}

fn parse_stat_entry(entry: &str) -> anyhow::Result<(String, String, StatOutput)> {
    let mut parts = entry.splitn(3, ':');
    let (Some(app), Some(suite), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
        anyhow::bail!("--stat expects APP:SUITE:FILE, got {entry:?}");
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let stat: StatOutput = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
    Ok((app.to_string(), suite.to_string(), stat))
}

fn cmd_report(cli: &Cli, cfg: &GlobalConfig, cmd: &ReportCommand) -> anyhow::Result<u8> {
    match cmd {
        ReportCommand::Effort { matrix, stats, format } => {
            let m = if stats.is_empty() {
                matrix.load()?
            } else {
                let entries = stats
                    .iter()
                    .map(|s| parse_stat_entry(s))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                matrix_from_stats(entries.iter().map(|(a, s, o)| (a.as_str(), s.as_str(), o)))
            };
            let t = effort_table(&m);
            let format = if cli.json { Format::Json } else { *format };
            print!(
                "{}",
                match format {
                    Format::Text => &t.text,
                    Format::Csv => &t.csv,
                    Format::Json => &t.json,
                }
            );
        }
        ReportCommand::Ratios {
            matrix,
            a,
            b,
            exclude,
            no_default_exclusions,
        } => {
            let m = matrix.load()?;
            let summaries = match (a, b) {
                (Some(a), Some(b)) => {
                    let mut ex = exclude.clone();
                    if !no_default_exclusions {
                        ex.extend(default_exclusions(a, b));
                    }
                    vec![effort_ratio(&m, a, b, &ex)?]
                }
                _ => headline_ratios(&m)?,
            };
            if cli.json {
                print_json(&summaries)?;
            } else {
                print!("{}", render_ratios(&summaries));
            }
        }
        ReportCommand::Perf { records, format } => {
            let recs = read_manifest(records)?;
            let summary = summarize(&recs);
            let t = perf_energy_table(&summary);
            match (cli.json, format) {
                (true, _) | (_, Format::Json) => print_json(&summary)?,
                (_, Format::Csv) => print!("{}", t.csv_long),
                (_, Format::Text) => print!("{}", t.text),
            }
        }
        ReportCommand::Rodinia { root, tolerance } => {
            if !root.is_dir() {
                eprintln!("peff: Rodinia checkout {} not found", root.display());
                return Ok(EXIT_USAGE);
            }
            let cells = compare_rodinia(root, &cfg.profiles()?, &EffortMatrix::reference(), *tolerance)?;
            if cli.json {
                print_json(&cells)?;
            } else {
                print!("{}", render_deviations(&cells));
            }
        }
    }
    Ok(EXIT_OK)
}

//! Acceptance criteria for the `peff` tool. Prints one verdict line per
//! criterion and fails the target if any criterion fails.

mod props;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use peff_core::metering::{integrate_power, PowerLog};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::Value;

/// Environment variable naming a Rodinia source checkout.
const RODINIA_ENV: &str = "PEFF_RODINIA_ROOT";

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Verdict>);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn trace(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/traces")
        .join(name)
}

fn peff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peff"))
        .args(args)
        .env_remove("XMPU_REPLAY_TRACE")
        .env_remove("XMPU_POWER_CMD")
        .output()
        .expect("spawn peff")
}

fn json_of(out: &Output) -> Result<Value, String> {
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| format!("bad JSON on stdout: {e}"))
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64()))
    }
}

fn golden_corpus() -> Outcome {
    let start = Instant::now();
    let out = json_of(&peff(&["--json", "stat", fixtures().join("golden").to_str().unwrap()]))?;
    let elapsed = start.elapsed();
    let expected: Value =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("golden_expected.json")).unwrap()).unwrap();
    let frameworks = ["cuda", "openacc", "opencl", "openmp"];

    let files = expected["files"].as_object().unwrap();
    let per_file = out["per_file"].as_array().ok_or("missing per_file")?;
    if per_file.len() != files.len() {
        return Err(format!("{} files counted, expected {}", per_file.len(), files.len()));
    }
    if files.len() < 12 {
        return Err("corpus smaller than 12 files".into());
    }
    for f in per_file {
        let path = f["path"].as_str().unwrap();
        let want = files.get(path).ok_or_else(|| format!("unexpected file {path}"))?;
        if f["loc_total"] != want["loc_total"] {
            return Err(format!("{path}: loc_total {} != {}", f["loc_total"], want["loc_total"]));
        }
        for fw in frameworks {
            let got = f["loc_par"][fw].as_u64().unwrap_or(0);
            let exp = want[fw].as_u64().unwrap_or(0);
            if got != exp {
                return Err(format!("{path}: {fw} {got} != {exp}"));
            }
        }
    }
    let total = expected["loc_total"].as_u64().unwrap();
    if out["loc_total"].as_u64() != Some(total) {
        return Err(format!("loc_total {} != {total}", out["loc_total"]));
    }
    for fw in frameworks {
        let par = expected["loc_par"][fw].as_u64().unwrap();
        if out["loc_par"][fw].as_u64() != Some(par) {
            return Err(format!("{fw}: {} != {par}", out["loc_par"][fw]));
        }
        let want = 100.0 * par as f64 / total as f64;
        let got = out["effort_percent"][fw].as_f64().unwrap();
        if (got - want).abs() > 1e-9 {
            return Err(format!("{fw} effort {got} != {want}"));
        }
    }
    let skipped: Vec<&str> = out["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|w| w["kind"] == "binary")
        .filter_map(|w| w["path"].as_str())
        .collect();
    let want_skipped: Vec<&str> = expected["skipped_binary"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(Value::as_str)
        .collect();
    if skipped != want_skipped {
        return Err(format!("binary skips {skipped:?} != {want_skipped:?}"));
    }
    within(elapsed, 1.0)?;
    Ok(format!(
        "{} files, {total} LOC, {:.2} s",
        files.len(),
        elapsed.as_secs_f64()
    ))
}

/// Reference effort cells typed in from the published table.
const SPEC_OPENCL_OPENACC: [(&str, f64, f64); 3] =
    [("LBM", 3.21, 0.87), ("MRI-Q", 5.70, 0.64), ("Stencil", 4.70, 0.61)];
/// (app, OpenMP, OpenCL, CUDA) for the Rodinia applications.
const RODINIA: [(&str, Option<f64>, f64, f64); 16] = [
    ("BFS", Some(4.86), 9.07, 12.50),
    ("CFD", Some(2.53), 9.00, 8.08),
    ("HotSpot", Some(2.67), 13.18, 8.20),
    ("LUD", Some(2.30), 9.72, 7.82),
    ("NW", None, 18.34, 8.85),
    ("B+Tree", None, 6.79, 4.51),
    ("GE", None, 14.21, 9.76),
    ("Heartwall", None, 6.74, 3.97),
    ("Kmeans", None, 2.67, 2.17),
    ("LavaMD", None, 9.24, 7.74),
    ("SRAD", None, 13.00, 10.28),
    ("BP", None, 12.21, 5.95),
    ("k-NN", None, 15.83, 5.07),
    ("Myocyte", None, 8.25, 1.21),
    ("PF", None, 17.83, 9.47),
    ("SC", None, 5.81, 2.66),
];

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn ratios_report(extra: &[&str]) -> Result<(Vec<Value>, Duration), String> {
    let start = Instant::now();
    let mut args = vec!["--json", "report", "ratios"];
    args.extend_from_slice(extra);
    let v = json_of(&peff(&args))?;
    Ok((v.as_array().cloned().unwrap_or_default(), start.elapsed()))
}

fn check_ratio(summaries: &[Value], a: &str, b: &str, oracle: f64, target: f64) -> Result<String, String> {
    let s = summaries
        .iter()
        .find(|s| s["a"] == a && s["b"] == b)
        .ok_or_else(|| format!("no {a}/{b} summary"))?;
    let got = s["mean_of_ratios"].as_f64().unwrap();
    if (got - oracle).abs() > 1e-9 {
        return Err(format!("{a}/{b}: reported {got}, recomputed {oracle}"));
    }
    if (got - target).abs() > 0.01 {
        return Err(format!("{a}/{b}: {got:.4} not within 0.01 of {target}"));
    }
    Ok(format!("{a}/{b} = {got:.3}"))
}

fn result1() -> Outcome {
    let (s, t) = ratios_report(&[])?;
    let oracle = mean(SPEC_OPENCL_OPENACC.iter().map(|(_, cl, acc)| cl / acc));
    let msg = check_ratio(&s, "spec-opencl", "spec-openacc", oracle, 6.77)?;
    within(t, 1.0)?;
    Ok(msg)
}

fn result3() -> Outcome {
    let (s, t) = ratios_report(&[])?;
    let four = || RODINIA.iter().filter_map(|&(_, omp, cl, cu)| omp.map(|o| (o, cl, cu)));
    let a = check_ratio(
        &s,
        "rodinia-opencl",
        "rodinia-openmp",
        mean(four().map(|(o, cl, _)| cl / o)),
        3.65,
    )?;
    let b = check_ratio(
        &s,
        "rodinia-cuda",
        "rodinia-openmp",
        mean(four().map(|(o, _, cu)| cu / o)),
        3.06,
    )?;
    within(t, 1.0)?;
    Ok(format!("{a}, {b}"))
}

fn result2() -> Outcome {
    let (s, t) = ratios_report(&["--a", "rodinia-opencl", "--b", "rodinia-cuda"])?;
    let rest: Vec<_> = RODINIA.iter().filter(|r| r.0 != "BFS").collect();
    if rest.len() != 15 {
        return Err("expected 15 applications".into());
    }
    let msg = check_ratio(
        &s,
        "rodinia-opencl",
        "rodinia-cuda",
        mean(rest.iter().map(|r| r.2 / r.3)),
        2.03,
    )?;
    let apps = s[0]["applications"].as_array().map_or(0, Vec::len);
    if apps != 15 {
        return Err(format!("{apps} applications in summary"));
    }
    within(t, 1.0)?;
    Ok(msg)
}

fn energy_integration() -> Outcome {
    let start = Instant::now();
    let constant = PowerLog::from_points("host", (0..=10).map(|i| (i as f64, 100.0))).unwrap();
    let e = integrate_power(&constant, 0.0, 10.0).joules;
    if (e - 1000.0).abs() > 1e-9 * 1000.0 {
        return Err(format!("constant trace gave {e} J"));
    }
    let ramp = PowerLog::from_points("host", (0..=10).map(|i| (i as f64, 10.0 * i as f64))).unwrap();
    let e = integrate_power(&ramp, 0.0, 10.0).joules;
    if (e - 500.0).abs() > 1e-9 * 500.0 {
        return Err(format!("ramp trace gave {e} J"));
    }

    let traces = (
        prop::collection::vec((1_000u64..5_000_000, 0.0f64..500.0), 2..40),
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..1.0,
    );
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&traces, |(steps, u0, u1, um)| {
            let mut t = 0u64;
            let points: Vec<(f64, f64)> = steps
                .iter()
                .map(|&(dt, w)| {
                    t += dt;
                    (t as f64 / 1e6, w)
                })
                .collect();
            let log = PowerLog::from_points("host", points.iter().copied()).unwrap();
            let (first, last) = (points[0].0, points[points.len() - 1].0);
            // Windows may reach past either end of the trace.
            let at = |u: f64| first - 1.0 + u * (last - first + 2.0);
            let (t0, t1) = if u0 <= u1 { (at(u0), at(u1)) } else { (at(u1), at(u0)) };
            let tm = t0 + um * (t1 - t0);
            let whole = integrate_power(&log, t0, t1).joules;
            let left = integrate_power(&log, t0, tm).joules;
            let right = integrate_power(&log, tm, t1).joules;
            prop_assert!(whole >= 0.0 && left >= 0.0 && right >= 0.0);
            prop_assert!(
                oracle::close(left + right, whole, 1e-9),
                "additivity {} + {} vs {}",
                left,
                right,
                whole
            );
            let want = oracle::trapezoid(&points, t0, t1);
            prop_assert!(oracle::close(whole, want, 1e-9), "{} vs oracle {}", whole, want);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(elapsed, 5.0)?;
    Ok(format!(
        "1000 J, 500 J, 1000 random traces, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn mock_measurement() -> Outcome {
    let start = Instant::now();
    let replay = trace("constant_50w.csv");
    let replay = replay.to_str().unwrap();
    let m = json_of(&peff(&["--replay", replay, "measure", "--", "sleep", "2"]))?;
    let (time, energy) = (m["time_s"].as_f64().unwrap(), m["energy_total_j"].as_f64().unwrap());
    if (time - 2.0).abs() > 0.1 || (energy - 100.0).abs() > 5.0 {
        return Err(format!("measure: {time} s, {energy} J"));
    }
    if m["exit_status"] != 0 {
        return Err(format!("measure: exit status {}", m["exit_status"]));
    }

    let out_dir = tempfile::tempdir().unwrap();
    let suite = fixtures().join("sleep_suite.json");
    let run = json_of(&peff(&[
        "--json",
        "--replay",
        replay,
        "--reps",
        "5",
        "--out",
        out_dir.path().to_str().unwrap(),
        "run",
        "--suite",
        suite.to_str().unwrap(),
    ]))?;
    let manifest = std::fs::read_to_string(out_dir.path().join("records.jsonl")).map_err(|e| e.to_string())?;
    let records = manifest.lines().filter(|l| !l.trim().is_empty()).count();
    if records != 5 {
        return Err(format!("{records} records"));
    }
    let group = &run["summary"]["groups"][0];
    let median_t = group["time_s"]["median"].as_f64().ok_or("no time median")?;
    let median_e = group["energy_total_j"]["median"].as_f64().ok_or("no energy median")?;
    if (median_t - 2.0).abs() > 0.1 || (median_e - 100.0).abs() > 5.0 {
        return Err(format!("run medians: {median_t} s, {median_e} J"));
    }
    let elapsed = start.elapsed();
    within(elapsed, 30.0)?;
    Ok(format!(
        "measure {time:.3} s / {energy:.2} J; run x5 median {median_t:.3} s / {median_e:.2} J; {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn property_suite() -> Outcome {
    const CASES: u32 = 500;
    props::comment_string_immunity(CASES)?;
    props::profile_order_invariance(CASES)?;
    props::power_log_round_trip(CASES)?;
    props::session_lifecycle(CASES)?;
    props::classifier_matches_oracle(CASES)?;
    Ok(format!("{CASES} cases per property"))
}

fn rodinia_checkout() -> Verdict {
    let Some(root) = std::env::var_os(RODINIA_ENV).filter(|v| !v.is_empty()) else {
        return Verdict::Skip(format!("{RODINIA_ENV} not set"));
    };
    let out = peff(&[
        "--json",
        "report",
        "rodinia",
        "--root",
        Path::new(&root).to_str().unwrap(),
        "--tolerance",
        "2.0",
    ]);
    let cells = match json_of(&out) {
        Ok(v) => v.as_array().cloned().unwrap_or_default(),
        Err(e) => return Verdict::Fail(e),
    };
    let bad: Vec<String> = cells
        .iter()
        .filter(|c| c["within_tolerance"] != true)
        .map(|c| {
            format!(
                "{}/{} ({})",
                c["app"].as_str().unwrap_or(""),
                c["column"].as_str().unwrap_or(""),
                c["deviation"]
            )
        })
        .collect();
    if bad.is_empty() {
        Verdict::Pass(format!("{} cells within 2.0 pp", cells.len()))
    } else {
        Verdict::Fail(format!(
            "{} of {} cells off: {}",
            bad.len(),
            cells.len(),
            bad.join(", ")
        ))
    }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("golden corpus effort", Box::new(|| golden_corpus().into())),
        ("OpenCL/OpenACC effort ratio", Box::new(|| result1().into())),
        ("OpenCL and CUDA vs OpenMP ratios", Box::new(|| result3().into())),
        ("OpenCL/CUDA ratio without BFS", Box::new(|| result2().into())),
        ("energy integration", Box::new(|| energy_integration().into())),
        ("mock measure and run", Box::new(|| mock_measurement().into())),
        ("property suite", Box::new(|| property_suite().into())),
        ("Rodinia checkout", Box::new(rodinia_checkout)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Skip(d) => ("SKIP", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} [{tag}] {name}: {detail}", i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

impl From<Outcome> for Verdict {
    fn from(o: Outcome) -> Self {
        match o {
            Ok(d) => Verdict::Pass(d),
            Err(d) => Verdict::Fail(d),
        }
    }
}

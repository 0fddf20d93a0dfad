//! Randomized checks run with a fixed case budget.

use std::collections::BTreeMap;
use std::sync::Arc;

use peff_core::codestat::{default_profiles, Classifier, FrameworkProfile, LineKind};
use peff_core::metering::{
    read_power_logs, write_power_logs, ManualClock, MeasurementSession, MeterBackend, MeteringError, PowerLog,
    ReplayTrace, SessionState,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use crate::oracle;

const FRAGMENTS: &[&str] = &[
    "#pragma omp parallel for",
    "#pragma acc kernels",
    "#  pragma   omp",
    "#pragma ompx",
    "#pragma",
    "omp",
    "acc",
    "omp_get_wtime()",
    "acc_wait()",
    "clFinish(q)",
    "clx",
    "cl_int",
    "CL_SUCCESS",
    "__kernel",
    "__global",
    "__global__",
    "__local",
    "cudaMalloc(&p)",
    "k<<<1,2>>>()",
    "__syncthreads();",
    "x = 1;",
    "y",
    "{",
    "}",
    "1'000",
    "'a'",
    "'\"'",
    "'",
    "\"",
    "\\",
    "//",
    "/*",
    "*/",
    "// cudaFree(p)",
    "/* #pragma omp */",
    "9",
    "_",
];

/// String-literal bodies: no quotes, backslashes or comment openers.
const CONTENTS: &[&str] = &[
    "abc",
    "#pragma omp parallel",
    "cudaMalloc(p)",
    "__global__",
    "clFinish",
    "acc_init",
    "omp_x <<<",
];
const EXTS: &[&str] = &[".c", ".cpp", ".cu", ".cl", ".h"];
const SEPS: &[&str] = &["", " ", "\t"];

#[derive(Debug, Clone)]
enum Frag {
    Text(usize),
    Str(usize),
}

type Lines = Vec<Vec<(usize, Frag)>>;

fn frag() -> impl Strategy<Value = (usize, Frag)> {
    let f = prop_oneof![
        4 => (0..FRAGMENTS.len()).prop_map(Frag::Text),
        1 => (0..CONTENTS.len()).prop_map(Frag::Str),
    ];
    (0..SEPS.len(), f)
}

fn file() -> impl Strategy<Value = Lines> {
    prop::collection::vec(prop::collection::vec(frag(), 0..5), 0..=50)
}

fn render(lines: &Lines, neutral: impl Fn(usize) -> bool) -> String {
    render_spans(lines, neutral).0
}

/// Renders `lines`; string fragment `k` (in order of appearance) gets the
/// body "abc" when `neutral(k)`. Also returns each body's line and columns.
fn render_spans(lines: &Lines, neutral: impl Fn(usize) -> bool) -> (String, Vec<(usize, usize, usize)>) {
    let mut out = String::new();
    let mut spans = Vec::new();
    for (n, line) in lines.iter().enumerate() {
        let mut col = 0;
        for (sep, f) in line {
            let piece = match f {
                Frag::Text(i) => FRAGMENTS[*i].to_string(),
                Frag::Str(i) => {
                    let body = if neutral(spans.len()) { "abc" } else { CONTENTS[*i] };
                    let from = col + SEPS[*sep].len() + 1;
                    spans.push((n, from, from + body.len()));
                    format!("\"{body}\"")
                }
            };
            col += SEPS[*sep].len() + piece.len();
            out.push_str(SEPS[*sep]);
            out.push_str(&piece);
        }
        out.push('\n');
    }
    (out, spans)
}

fn summary(c: &Classifier, ext: &str, text: &str) -> (u64, BTreeMap<String, u64>) {
    let (stats, _) = c.classify_text("f", ext, text.as_bytes());
    (stats.loc_total, stats.loc_par)
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run<S: Strategy>(
    label: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| format!("{label}: {e}"))
}

pub fn comment_string_immunity(cases: u32) -> Result<(), String> {
    let c = Classifier::new(&default_profiles().unwrap());
    run("string immunity", cases, (file(), 0..EXTS.len()), |(lines, e)| {
        let ext = EXTS[e];
        // Bodies that the reference lexer places inside a literal or
        // comment are swapped for neutral text; the rest stay as they are.
        let (text, spans) = render_spans(&lines, |_| false);
        let masked = oracle::mask_file(&text);
        let hidden: Vec<bool> = spans
            .iter()
            .map(|&(n, a, b)| masked[n].1[a..b].trim().is_empty())
            .collect();
        let neutral = render(&lines, |k| hidden[k]);
        prop_assert_eq!(summary(&c, ext, &text), summary(&c, ext, &neutral));
        Ok(())
    })?;
    run(
        "comment immunity",
        cases,
        (file(), 0..EXTS.len(), prop::collection::vec(any::<bool>(), 50)),
        |(lines, e, mask)| {
            let ext = EXTS[e];
            let base = render(&lines, |_| false);
            let noisy: String = base
                .lines()
                .zip(&mask)
                .map(|(l, &add)| {
                    if add {
                        format!("{l} // #pragma omp parallel cudaMalloc(x) clFinish\n")
                    } else {
                        format!("{l}\n")
                    }
                })
                .collect();
            prop_assert_eq!(summary(&c, ext, &base), summary(&c, ext, &noisy));
            Ok(())
        },
    )
}

pub fn profile_order_invariance(cases: u32) -> Result<(), String> {
    let profiles = default_profiles().unwrap();
    let reference = Classifier::new(&profiles);
    let order = Just((0..profiles.len()).collect::<Vec<_>>()).prop_shuffle();
    run(
        "profile order",
        cases,
        (file(), 0..EXTS.len(), order),
        |(lines, e, order)| {
            let shuffled: Vec<FrameworkProfile> = order.iter().map(|&i| profiles[i].clone()).collect();
            let text = render(&lines, |_| false);
            let a = reference.classify_text("f", EXTS[e], text.as_bytes());
            let b = Classifier::new(&shuffled).classify_text("f", EXTS[e], text.as_bytes());
            prop_assert_eq!(a, b);
            Ok(())
        },
    )
}

pub fn classifier_matches_oracle(cases: u32) -> Result<(), String> {
    let c = Classifier::new(&default_profiles().unwrap());
    run("classifier oracle", cases, (file(), 0..EXTS.len()), |(lines, e)| {
        let text = render(&lines, |_| false);
        let (_, got) = c.classify_text("f", EXTS[e], text.as_bytes());
        let want = oracle::classify(EXTS[e], &text);
        prop_assert_eq!(got.len(), want.len());
        for (g, (kind, fws)) in got.iter().zip(&want) {
            let k = match g.kind {
                LineKind::Blank => oracle::Kind::Blank,
                LineKind::Comment => oracle::Kind::Comment,
                LineKind::Code => oracle::Kind::Code,
            };
            prop_assert_eq!(k, *kind, "line {} of\n{}", g.line_no, text);
            prop_assert_eq!(&g.frameworks, fws, "line {} of\n{}", g.line_no, text);
        }
        Ok(())
    })
}

fn power_logs() -> impl Strategy<Value = Vec<PowerLog>> {
    let one = |name: &'static str| {
        prop::collection::vec((1u64..5_000_000, 0.0f64..2000.0), 0..40).prop_map(move |steps| {
            let mut t = 0u64;
            PowerLog::from_points(
                name,
                steps.into_iter().map(|(dt, w)| {
                    t += dt;
                    (t as f64 / 1e6, w)
                }),
            )
            .unwrap()
        })
    };
    (one("host"), one("gpu0"), one("mic"), 1usize..=3)
        .prop_map(|(a, b, c, n)| [a, b, c].into_iter().take(n).filter(|l| !l.is_empty()).collect())
}

pub fn power_log_round_trip(cases: u32) -> Result<(), String> {
    run("power-log round trip", cases, power_logs(), |logs| {
        let mut buf = Vec::new();
        write_power_logs(&logs, &mut buf).unwrap();
        let back = read_power_logs(buf.as_slice()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let key = |v: &[PowerLog]| {
            let mut v = v.to_vec();
            v.sort_by(|a, b| a.component().cmp(b.component()));
            v
        };
        prop_assert_eq!(key(&logs), key(&back));
        Ok(())
    })
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Start,
    Stop,
    Get,
    Tick,
}

pub fn session_lifecycle(cases: u32) -> Result<(), String> {
    let trace = PowerLog::from_points("host", (0..=100).map(|i| (i as f64, 25.0))).unwrap();
    let backends = [
        MeterBackend::Wallclock,
        MeterBackend::Replay(ReplayTrace::from_logs(vec![trace])),
    ];
    let op = prop_oneof![Just(Op::Start), Just(Op::Stop), Just(Op::Get), Just(Op::Tick)];
    run("session lifecycle", cases, prop::collection::vec(op, 0..20), |ops| {
        let clock = ManualClock::new(0.0);
        let mut s = MeasurementSession::with_clock(&backends, clock.clone() as Arc<_>);
        let mut model = SessionState::Idle;
        let mut elapsed = 0.0;
        for op in ops {
            let (res, want) = match op {
                Op::Tick => {
                    clock.advance(0.5);
                    if model == SessionState::Running {
                        elapsed += 0.5;
                    }
                    continue;
                }
                Op::Start => (s.start(), SessionState::Idle),
                Op::Stop => (s.stop(), SessionState::Running),
                Op::Get => (
                    s.get_value().map(|m| {
                        assert!((m.time_s - elapsed).abs() < 1e-9);
                        assert!((m.energy_total_j - 25.0 * elapsed).abs() < 1e-6);
                    }),
                    SessionState::Stopped,
                ),
            };
            if model == want {
                prop_assert!(res.is_ok(), "{:?} from {:?}: {:?}", op, model, res);
                model = match op {
                    Op::Start => SessionState::Running,
                    Op::Stop => SessionState::Stopped,
                    _ => model,
                };
            } else {
                prop_assert!(
                    matches!(res, Err(MeteringError::State { .. })),
                    "{:?} from {:?}",
                    op,
                    model
                );
            }
            prop_assert_eq!(s.state(), model);
        }
        Ok(())
    })
}

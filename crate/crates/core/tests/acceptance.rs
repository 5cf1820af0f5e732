//! Acceptance suite: runs every shipped configuration and prints one PASS/FAIL line per
//! criterion. A failing criterion is reported, not asserted; the test itself fails only
//! when an experiment errors out or a criterion is never evaluated.

use std::io::Write;
use std::time::{Duration, Instant};

use slipflow::harness::report::RunMeta;
use slipflow::harness::{emit_outputs, run_experiment, ExperimentReport, RunConfig};

const CRITERIA: [&str; 12] = [
    "residue cancellation at lambda = 0",
    "resolvent identities on random points",
    "kernel bound fit (runtime < 5 min)",
    "contour independence",
    "oracle equivalence",
    "wall condition on every solver run",
    "convolution estimates",
    "inviscid rate slope, beta in {0, 0.5} (runtime < 10 min)",
    "beta = 1 rate bound and monotonicity",
    "uniform pointwise and wall-vorticity bounds",
    "shear consistency and Picard contraction",
    "norm inequalities on seeded corpora",
];

struct Run {
    file: &'static str,
    report: ExperimentReport,
    elapsed: Duration,
}

fn run(file: &'static str, text: &str) -> Run {
    let cfg = RunConfig::parse(text).unwrap_or_else(|e| panic!("{file}: {e}"));
    let start = Instant::now();
    let report = run_experiment(&cfg).unwrap_or_else(|e| panic!("{file}: {e}"));
    let elapsed = start.elapsed();
    let dir = tempfile::tempdir().unwrap();
    let meta = RunMeta {
        config_text: text.to_string(),
        overrides: Vec::new(),
        started_unix: 0,
    };
    emit_outputs(std::slice::from_ref(&report), &cfg, &meta, dir.path()).unwrap();
    Run { file, report, elapsed }
}

#[test]
fn acceptance() {
    let runs = vec![
        run("kernel-check.conf", include_str!("../../../configs/kernel-check.conf")),
        run("oracle-check.conf", include_str!("../../../configs/oracle-check.conf")),
        run("stokes-run.conf", include_str!("../../../configs/stokes-run.conf")),
        run("ns-run.conf", include_str!("../../../configs/ns-run.conf")),
        run("inviscid-rate-beta0.conf", include_str!("../../../configs/inviscid-rate-beta0.conf")),
        run("inviscid-rate-beta05.conf", include_str!("../../../configs/inviscid-rate-beta05.conf")),
        run("inviscid-rate-beta1.conf", include_str!("../../../configs/inviscid-rate-beta1.conf")),
        run("bound-check.conf", include_str!("../../../configs/bound-check.conf")),
    ];
    let time_of = |prefix: &str| -> Duration {
        runs.iter().filter(|r| r.file.starts_with(prefix)).map(|r| r.elapsed).sum()
    };
    let kernel_time = time_of("kernel-check");
    let rate_time = runs
        .iter()
        .filter(|r| r.file.starts_with("inviscid-rate") && !r.file.contains("beta1"))
        .map(|r| r.elapsed)
        .sum::<Duration>();

    // Written to stderr directly so the verdicts show up without `--nocapture`.
    let mut err = std::io::stderr().lock();
    let mut missing = Vec::new();
    let mut failed = 0;
    writeln!(err).unwrap();
    for (i, name) in CRITERIA.iter().enumerate() {
        let n = (i + 1) as u8;
        let outcomes: Vec<(&str, bool)> = runs
            .iter()
            .filter_map(|r| r.report.criterion(n).map(|ok| (r.file, ok)))
            .collect();
        if outcomes.is_empty() {
            missing.push(n);
            continue;
        }
        let mut ok = outcomes.iter().all(|o| o.1);
        let mut detail: Vec<String> = runs
            .iter()
            .flat_map(|r| r.report.checks.iter().filter(|c| c.criterion == n).map(move |c| (r.file, c)))
            .map(|(f, c)| format!("[{f}] {}", c.detail))
            .collect();
        if n == 3 {
            ok &= kernel_time < Duration::from_secs(300);
            detail.push(format!("runtime {:.1} s", kernel_time.as_secs_f64()));
        }
        if n == 8 {
            ok &= rate_time < Duration::from_secs(600);
            detail.push(format!("runtime {:.1} s", rate_time.as_secs_f64()));
        }
        if !ok {
            failed += 1;
        }
        writeln!(err, "{} criterion {n:>2}: {name}", if ok { "PASS" } else { "FAIL" }).unwrap();
        for d in detail {
            writeln!(err, "        {d}").unwrap();
        }
    }
    writeln!(err, "{} of {} criteria pass", CRITERIA.len() - failed - missing.len(), CRITERIA.len()).unwrap();
    for r in &runs {
        writeln!(err, "  {} took {:.1} s", r.file, r.elapsed.as_secs_f64()).unwrap();
    }
    drop(err);
    assert!(missing.is_empty(), "criteria never evaluated: {missing:?}");
}

//! One test per acceptance criterion. Each runs the same command the CLI runs,
//! once on an 8-thread pool and once on a single thread, checks the rows at their
//! stated tolerances, checks the two runs wrote identical bytes (criterion 6) and
//! prints a single PASS/FAIL line.

use std::io::Write;
use std::time::{Duration, Instant};

use psh_lab::cli::{run, Band, Command, CounterStage, Report, ReportRow};
use psh_lab::config::Config;

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

struct Outcome {
    report: Report,
    elapsed: Duration,
    identical: bool,
}

fn run_twice(command: Command, cfg: &str) -> Outcome {
    let cfg = Config::parse(cfg).unwrap();
    let t = Instant::now();
    let report = pool(8).install(|| run(command, &cfg)).unwrap();
    let elapsed = t.elapsed();
    let single = pool(1).install(|| run(command, &cfg)).unwrap();
    let identical = report.artifacts() == single.artifacts()
        && report.fields.len() == single.fields.len()
        && report.fields.iter().zip(&single.fields).all(|(a, b)| a.0 == b.0 && a.1.bit_eq(&b.1));
    Outcome { report, elapsed, identical }
}

// bypasses the harness capture so the line shows up in every run
fn announce(criterion: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[acceptance] {tag} criterion {criterion}: {detail}");
}

fn failing(rows: &[ReportRow]) -> Vec<String> {
    rows.iter().filter(|r| !r.pass).map(|r| format!("{} = {} ({})", r.metric, r.value, r.band)).collect()
}

fn value(r: &Report, metric: &str) -> f64 {
    r.row(metric).unwrap_or_else(|| panic!("no row {metric}")).value
}

fn check(criterion: &str, o: &Outcome, limit: Duration, detail: String) {
    let bad = failing(&o.report.rows);
    let fast = o.elapsed < limit;
    let ok = bad.is_empty() && fast && o.identical;
    announce(
        criterion,
        ok,
        format!("{detail}; {:.1} s (limit {} s); threads 1 vs 8 identical: {}{}", o.elapsed.as_secs_f64(), limit.as_secs(), o.identical, if bad.is_empty() { String::new() } else { format!("; failing: {}", bad.join(", ")) }),
    );
    assert!(bad.is_empty(), "failing rows: {bad:?}");
    assert!(fast, "took {:?}", o.elapsed);
    assert!(o.identical, "outputs differ between 1 and 8 threads");
}

#[test]
fn criterion_1_lipschitz_bound() {
    let o = run_twice(Command::Lipschitz, "seed = 1\nC = 1\ndraws = 100\nslack = 0.05\n");
    let bound = 20.0 / 3.0;
    assert_eq!(o.report.tables[0].rows.len(), 101);
    assert_eq!(o.report.row("max_estimate").unwrap().band, Band::AtMost(bound + 0.05));
    assert_eq!(o.report.row("flat_estimate").unwrap().band, Band::AtLeast(bound - 0.05));
    let detail = format!(
        "max over 100 draws {:.5} <= {:.5}, F = 3C attains {:.5} >= {:.5}",
        value(&o.report, "max_estimate"),
        bound + 0.05,
        value(&o.report, "flat_estimate"),
        bound - 0.05
    );
    check("1 (lipschitz)", &o, Duration::from_secs(10), detail);
}

#[test]
fn criterion_2_cone_fraction() {
    let o = run_twice(Command::ConeFraction, "seed = 1\nsamples = 10000000\nslope = 1\n");
    let r = &o.report;
    assert_eq!(r.row("m2").unwrap().band, Band::Near { target: 0.25, tol: 1e-12 });
    let q = (1.0 - 0.5f64.sqrt()) / 2.0;
    assert!((value(r, "m3_quadrature") - q).abs() <= 1e-6);
    assert!((value(r, "m3_monte_carlo") - value(r, "m3_quadrature")).abs() <= 3e-3);
    let detail = format!(
        "m=2 {} (exact 0.25), m=3 quadrature {:.12} vs {:.12}, Monte Carlo 1e7 {:.7}",
        value(r, "m2"),
        value(r, "m3_quadrature"),
        q,
        value(r, "m3_monte_carlo")
    );
    check("2 (cone fraction)", &o, Duration::from_secs(20), detail);
}

#[test]
fn criterion_3_envelope_solver() {
    let o = run_twice(Command::Envelope, "seed = 1\nn = 256\npairs = 20\nsubsolutions = 50\ntolerance = 1e-10\n");
    let r = &o.report;
    assert_eq!(r.tables[0].rows.len(), 70);
    let detail = format!(
        "3x3 err {:e}/{:e}, idempotence drift {:e}, monotonicity {:e} over 20 pairs, maximality excess {:e} over 50 subsolutions",
        value(r, "three_by_three_jacobi"),
        value(r, "three_by_three_policy"),
        value(r, "idempotence_drift"),
        value(r, "monotonicity_violation"),
        value(r, "maximality_excess")
    );
    check("3 (envelope)", &o, Duration::from_secs(30), detail);
}

#[test]
fn criterion_4_regularization_pipeline() {
    let o = run_twice(Command::Regularize, "grid.n = 256, 256\ntolerance = 1e-8\nseam_tolerance = 1e-6\ninputs = const, quad, log\nrefine = true\n");
    let r = &o.report;
    for input in ["const", "quad", "log"] {
        let exp = format!("regularize/{input}");
        let rows: Vec<&ReportRow> = r.rows.iter().filter(|row| row.experiment == exp).collect();
        assert_eq!(rows.len(), 7, "{input}");
    }
    let worst = |metric: &str, pick: fn(f64, f64) -> f64, init: f64| r.rows.iter().filter(|x| x.metric == metric).map(|x| x.value).fold(init, pick);
    let detail = format!(
        "3 inputs x 6 k: increase {:e}, min(u_hat - u) {:e}, residual {:e}, sandwich {:e}, seam {:e}, transfer excess {:e}, slack ratio {:.3}",
        worst("max_increase", f64::max, 0.0),
        worst("min_uhat_minus_u", f64::min, f64::INFINITY),
        worst("max_residual", f64::max, 0.0),
        worst("min_sandwich_gap", f64::min, f64::INFINITY),
        worst("max_seam_defect", f64::max, 0.0),
        worst("max_transfer_excess", f64::max, f64::NEG_INFINITY),
        value(r, "slack_ratio")
    );
    check("4 (pipeline)", &o, Duration::from_secs(180), detail);
}

#[test]
fn criterion_5_counterexample() {
    let o = run_twice(Command::Counterexample(CounterStage::Falsify), "k = 4\nn = 96\ncandidate = cell-lower\nmutations = true\n");
    let r = &o.report;
    assert!(r.verdict.as_deref().unwrap().starts_with("verdict=contradiction"));
    let mutations = r.rows.iter().filter(|x| x.metric.starts_with("mutation_")).count();
    assert_eq!(mutations, 4);
    let detail = format!(
        "sum c_k s_k <= {:.6}, min lambda(1/m) >= {:.6}, max sampled lambda on discs {:.4}, v(0,1/4) <= {:.6}, u(0,1/4) >= {:.6}, {mutations} mutations flip the verdict",
        value(r, "weighted_sup_sum_hi"),
        value(r, "min_lambda_on_a_lo"),
        value(r, "max_lambda_on_sampled_discs"),
        value(r, "axis_bound"),
        value(r, "u_floor")
    );
    check("5 (counterexample)", &o, Duration::from_secs(120), detail);
}

#[test]
fn criterion_6_thread_count_does_not_change_cli_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    std::fs::write(&cfg, "samples = 200000\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_pshlab");
    let mut outs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let status = std::process::Command::new(bin)
            .args(["cone-fraction", "--seed", "5", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success());
        outs.push(["config.txt", "report.csv", "cone_fraction.csv"].map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    let same = outs[0] == outs[1];
    announce("6 (determinism)", same, format!("criteria 1-5 compared in-process above; CLI --threads 1 vs 8 byte-identical: {same}"));
    assert!(same);
}

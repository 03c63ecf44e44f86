use std::path::Path;
use std::process::{Command, Output};

fn pshlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pshlab")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.txt", "samples = 1000\nbogus_key = 3\n");
    let out = pshlab(&["cone-fraction", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn parse_errors_carry_the_line_and_missing_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.txt", "# header\nsamples 1000\n");
    let out = pshlab(&["cone-fraction", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = pshlab(&["cone-fraction", "--config", "does-not-exist.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let cfg = write(dir.path(), "l.txt", "field = missing.pshf\n");
    assert_eq!(pshlab(&["lemma-check", "--config", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn a_failing_row_gives_a_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.txt", "draws = 6\npairs = 2000\nslack = -1\n");
    let out = pshlab(&["lipschitz", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("o/report.csv")).unwrap();
    assert!(report.lines().any(|l| l.ends_with(",false")));
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.txt", "draws = 9\npairs = 3000\n");
    for out in ["a", "b"] {
        assert!(pshlab(&["lipschitz", "--config", &cfg, "--seed", "11", "--out", out], dir.path()).status.success());
    }
    for f in ["config.txt", "report.csv", "lipschitz.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
        assert!(!a.contains(&b'\r'));
    }
    let echoed = std::fs::read_to_string(dir.path().join("a/config.txt")).unwrap();
    assert!(echoed.contains("seed = 11") && echoed.contains("slack = 0.05"), "{echoed}");
}

#[test]
fn small_regularize_run_writes_per_k_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.txt", "grid.n = 40, 40\nks = 1, 2, 4\ninputs = const, quad\nrefine = false\nwrite_fields = true\n");
    let out = pshlab(&["regularize", "--config", &cfg, "--out", "o", "--threads", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("o/regularize.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("input,k,epsilon,residual,sup_uhat_minus_u,transfer_defect"));
    // sup |û_k − u| shrinks with k for each input
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for chunk in rows.chunks(3) {
        let sups: Vec<f64> = chunk.iter().map(|r| r[4].parse().unwrap()).collect();
        assert!(sups.windows(2).all(|w| w[1] <= w[0]), "{sups:?}");
    }
    let field = psh_lab::grid::read_field(dir.path().join("o/uhat_quad_k4.pshf")).unwrap();
    assert_eq!(field.spec().shape(), &[40, 40]);
}

#[test]
fn counterexample_stages_emit_certificates_and_a_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = pshlab(&["counterexample", "build", "--out", "b"], dir.path());
    assert!(out.status.success());
    let cert = std::fs::read_to_string(dir.path().join("b/certificate.csv")).unwrap();
    assert!(cert.starts_with("k,m,x_k,c_k,s_k,log_r_k,"));
    let out = pshlab(&["counterexample", "verify", "--out", "v"], dir.path());
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("v/verdict.txt")).unwrap(), "verdict=certificates-hold\n");
    let cfg = write(dir.path(), "f.txt", "n = 32\ncount = 4\n");
    let out = pshlab(&["counterexample", "falsify", "--config", &cfg, "--out", "f"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict=contradiction"));
}

use std::process::{Command, Output};

fn bdsfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdsfs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn moments_pass_with_exit_zero() {
    let o = bdsfs(&["moments"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("experiment,statistic,estimate,target,stderr,p_value,reps,seed\n"));
    assert_eq!(text.lines().count(), 9);
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bdsfs(&["bogus"]).status.code(), Some(1));
    assert_eq!(bdsfs(&["lln", "--T", "1", "--t-rule", "2"]).status.code(), Some(1));
    assert_eq!(bdsfs(&["moments", "--lambda", "1", "--mu", "2"]).status.code(), Some(1));
    assert_eq!(bdsfs(&["lln", "--mode", "contour", "--n", "50"]).status.code(), Some(1));
    assert_eq!(bdsfs(&["--help"]).status.code(), Some(0));
}

#[test]
fn regime_guardrail_refuses_short_horizons() {
    let o = bdsfs(&["lln", "--n", "500", "--T", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("regime"));
}

#[test]
fn statistical_failure_exits_two() {
    // three replicates cannot pin the variance to 10%
    let o = bdsfs(&["clt", "--n", "50", "--reps", "3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("FAIL clt/R_ge2_var"));
}

#[test]
fn identical_flags_give_identical_bytes() {
    for args in [
        &["lln", "--n", "300", "--reps", "8", "--seed", "4"][..],
        &["coalescent", "--n", "12", "--nu", "1", "--reps", "3", "--format", "json"],
        &["forward", "--n", "3", "--T", "1.5", "--reps", "2", "--seed", "9"],
        &["approx", "--n", "200", "--T", "12", "--reps", "4", "--k", "3"],
        &["contour", "--reps", "3", "--format", "json"],
    ] {
        let a = bdsfs(args);
        let b = bdsfs(args);
        assert_ne!(a.status.code(), Some(1), "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stderr, b.stderr, "{args:?}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn out_flag_writes_json_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("identity.json");
    let o = bdsfs(&["identity", "--n", "6", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["experiment"], "identity");
    assert!(rows[0]["p_value"].is_null());
}

#[test]
fn newick_output_has_one_tree_per_replicate() {
    let o = bdsfs(&["coalescent", "--n", "5", "--nu", "2", "--reps", "4", "--format", "newick"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        assert!(line.ends_with(';'));
        let leaves = line.as_bytes().windows(2).filter(|w| w[0] == b's' && w[1].is_ascii_digit()).count();
        assert_eq!(leaves, 5);
    }
}

#[test]
fn contour_check_passes_at_moderate_reps() {
    let o = bdsfs(&["contour", "--check", "--reps", "20000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("population_chi2_vs_forward"));
}

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn lookdown(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lookdown")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn kingman_solution_satisfies_the_three_term_recursion() {
    let out = lookdown(&["solve", "--lambda", "kingman", "--sigma", "1", "--theta", "0", "--nmax", "200"]);
    assert!(out.status.success());
    let a = csv_column(&stdout(&out), 1);
    assert_eq!(a[0], 1.0);
    let sigma = 1.0;
    for n in 1..a.len() - 1 {
        let half = (n + 1) as f64 / 2.0;
        let residual = (half + sigma) * a[n] - half * a[n + 1] - sigma * a[n - 1];
        assert!(residual.abs() < 1e-10, "n={n}: {residual:e}");
    }
}

#[test]
fn star_h_at_one_half_is_ln_2() {
    let out = lookdown(&["h", "--lambda", "point:1", "--sigma", "1", "--theta", "0", "--x", "0.5"]);
    assert!(out.status.success());
    let h = csv_column(&stdout(&out), 1)[0];
    assert!((h - std::f64::consts::LN_2).abs() < 1e-9, "{h}");
}

#[test]
fn duality_check_reports_no_violations() {
    let out = lookdown(&["verify-duality", "--configs", "10000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("0 violations"), "{}", stdout(&out));
}

#[test]
fn immortal_line_check_passes_on_one_model() {
    let out = lookdown(&["verify-asg", "--lambda", "kingman", "--sigma", "2", "--theta", "0.5", "--realizations", "50", "--cap", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains(": 0 mismatches"));
}

#[test]
fn star_preset_passes() {
    let out = lookdown(&["preset", "star-closed-form"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("preset star-closed-form: pass"));
}

#[test]
fn usage_and_parameter_errors_exit_with_one() {
    for args in [
        vec!["solve", "--lambda", "nonsense", "--sigma", "1"],
        vec!["solve", "--lambda", "point:0.5", "--sigma", "50"],
        vec!["solve", "--sigma", "1"],
        vec!["frobnicate"],
        vec!["preset", "no-such-preset"],
    ] {
        assert_eq!(lookdown(&args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(lookdown(&["--help"]).status.code(), Some(0));
    // the assumption can be waived
    assert_eq!(lookdown(&["solve", "--lambda", "point:0.5", "--sigma", "2", "--unchecked", "--nmax", "16", "--no-refine"]).status.code(), Some(0));
}

#[test]
fn failing_verification_exits_with_two() {
    // a one-replicate trend cannot meet its tolerance
    let out = lookdown(&["preset", "t1-trend", "--replicates", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let run = |threads: &str, name: &str| {
        let dir = scratch(name);
        let d = dir.to_str().unwrap();
        for args in [
            vec!["sim-l", "--lambda", "uniform", "--sigma", "1", "--theta", "0.5", "--cycles", "3000"],
            vec!["sim-d", "--lambda", "point:0.5", "--sigma", "1", "--replicates", "2000", "--cap", "500"],
            vec!["sim-k", "--lambda", "kingman", "--sigma", "0", "--k", "2,5", "--replicates", "2000"],
        ] {
            let mut full = vec!["--seed", "11", "--threads", threads, "--out", d];
            full.extend(args);
            assert!(lookdown(&full).status.success(), "{full:?}");
        }
        dir
    };
    let (one, four) = (run("1", "threads1"), run("4", "threads4"));
    for file in ["alpha.csv", "omega.csv", "t1.csv"] {
        let a = fs::read(one.join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, fs::read(four.join(file)).unwrap(), "{file}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(one.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "sim-k");
    assert_eq!(manifest["seed"], 11);
    assert!(manifest["artifacts"][0].as_str().unwrap().ends_with("t1.csv"));
}

#[test]
fn rates_table_is_pascal_consistent() {
    let out = lookdown(&["rates", "--lambda", "beta:1.5,0.7", "--nmax", "12"]);
    assert!(out.status.success());
    let mut rate = std::collections::HashMap::new();
    for line in stdout(&out).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        rate.insert((f[0].parse::<usize>().unwrap(), f[1].parse::<usize>().unwrap()), f[2].parse::<f64>().unwrap());
    }
    for b in 2..12 {
        for j in 2..=b {
            let (here, split) = (rate[&(b, j)], rate[&(b + 1, j)] + rate[&(b + 1, j + 1)]);
            assert!((here - split).abs() < 1e-10 * here.max(1.0));
        }
    }
}

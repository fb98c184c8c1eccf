use std::process::{Command, Output};

fn muxdt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muxdt"))
        .args(args)
        .env_remove("MUXDT_SEED")
        .output()
        .expect("run muxdt")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let idx = reader
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    reader
        .records()
        .map(|r| r.unwrap()[idx].to_owned())
        .collect()
}

#[test]
fn dtf_curve_both_engines_gives_two_rows_per_point() {
    let out = muxdt(&[
        "dtf-curve",
        "--mode",
        "cw",
        "--family",
        "multiplexed",
        "--n",
        "6",
        "--deadtime",
        "50e-9",
        "--grid",
        "log:1e5:1e9:61",
        "--engine",
        "both",
        "--n-events",
        "20000",
        "--batches",
        "4",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with(
        "mode,family,n_detectors,deadtime_s,rate_or_p,nu_hz,engine,dtf,std_err,n_events,seed\n"
    ));
    let engines = column(&text, "engine");
    assert_eq!(engines.len(), 122);
    assert_eq!(engines.iter().filter(|e| *e == "analytic").count(), 61);
    let std_err = column(&text, "std_err");
    for (engine, se) in engines.iter().zip(&std_err) {
        assert_eq!(engine == "montecarlo", !se.is_empty());
    }
}

#[test]
fn pulsed_pool_larger_than_dead_pulses_never_loses() {
    let out = muxdt(&[
        "dtf-curve",
        "--mode",
        "pulsed",
        "--nu",
        "82e6",
        "--n",
        "5",
        "--grid",
        "lin:0.01:1:25",
        "--engine",
        "both",
        "--n-events",
        "50000",
    ]);
    assert!(out.status.success());
    for v in column(&stdout(&out), "dtf") {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn csv_floats_round_trip() {
    let out = muxdt(&["dtf-curve", "--n", "3", "--grid", "log:1e5:1e9:17"]);
    let text = stdout(&out);
    for v in column(&text, "dtf")
        .iter()
        .chain(&column(&text, "rate_or_p"))
    {
        let x: f64 = v.parse().unwrap();
        assert_eq!(&format!("{x:.16e}"), v);
    }
}

#[test]
fn rate_at_dtf_single_and_headline() {
    let single = stdout(&muxdt(&[
        "rate-at-dtf",
        "--family",
        "single",
        "--target",
        "0.1",
    ]));
    let rate: f64 = column(&single, "rate")[0].parse().unwrap();
    assert!(((rate - 2.2222e6) / 2.2222e6).abs() < 1e-4);

    let six = stdout(&muxdt(&["rate-at-dtf", "--n", "6"]));
    let rate: f64 = column(&six, "rate")[0].parse().unwrap();
    let speedup: f64 = column(&six, "speedup")[0].parse().unwrap();
    assert!((rate / 7.1e7 - 1.0).abs() < 0.15, "{rate}");
    assert!((27.0..=37.0).contains(&speedup));
}

#[test]
fn exit_codes() {
    assert_eq!(
        muxdt(&["rate-at-dtf", "--target", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        muxdt(&["dtf-curve", "--grid", "log:1:10:1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        muxdt(&["dtf-curve", "--grid", "log:0:10:5"]).status.code(),
        Some(1)
    );
    assert_eq!(muxdt(&["dtf-curve"]).status.code(), Some(1));
    assert_eq!(muxdt(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        muxdt(&["dtf-curve", "--mode", "pulsed", "--grid", "lin:0:1:3"])
            .status
            .code(),
        Some(1)
    );

    let unreachable = muxdt(&[
        "rate-at-dtf",
        "--mode",
        "pulsed",
        "--nu",
        "82e6",
        "--n",
        "5",
    ]);
    assert_eq!(unreachable.status.code(), Some(2));
    let err = String::from_utf8_lossy(&unreachable.stderr);
    assert!(err.contains("not bracketed"), "{err}");

    let fig = muxdt(&["figure", "fig4"]);
    assert_eq!(fig.status.code(), Some(1));
    let err = String::from_utf8_lossy(&fig.stderr);
    for name in ["fig3a", "fig3b", "fig5a", "fig5b", "fig6a", "fig6b"] {
        assert!(err.contains(name));
    }

    assert_eq!(muxdt(&["dist-check"]).status.code(), Some(0));
    let fault = muxdt(&["dist-check", "--inject-fault"]);
    assert_eq!(fault.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&fault.stderr).contains("k=1, N=2, p=0.5"));
}

#[test]
fn dist_check_includes_p_one() {
    let text = stdout(&muxdt(&["dist-check"]));
    let p = column(&text, "p");
    let status = column(&text, "status");
    assert!(p.iter().any(|v| v.parse::<f64>().unwrap() == 1.0));
    assert!(status.iter().all(|s| s == "pass"));
}

#[test]
fn figures_have_expected_shape() {
    let fig3b = stdout(&muxdt(&["figure", "fig3b"]));
    assert!(fig3b.contains("# rates\n") && fig3b.contains("# fit\n"));
    let (rates, fit) = fig3b.split_once("\n# fit\n").unwrap();
    let rates = rates.trim_start_matches("# rates\n");
    let families = column(rates, "family");
    assert_eq!(families.iter().filter(|f| *f == "multiplexed").count(), 12);
    assert_eq!(families.iter().filter(|f| *f == "tree").count(), 12);
    let r2: Vec<f64> = column(fit, "r_squared")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(r2.iter().all(|&r| r >= 0.99));

    let fig3a = stdout(&muxdt(&["figure", "fig3a"]));
    let deadtimes = column(&fig3a, "deadtime_s");
    assert!(deadtimes.iter().any(|d| d.parse::<f64>().unwrap() == 5e-9));

    let fig5a = stdout(&muxdt(&["figure", "fig5a"]));
    let fams = column(&fig5a, "family");
    let ns = column(&fig5a, "n_detectors");
    assert!(fams
        .iter()
        .zip(&ns)
        .any(|(f, n)| f == "reduced" && n == "4"));

    let fig6a = stdout(&muxdt(&["figure", "fig6a"]));
    let rates = column(&fig6a, "rate");
    assert_eq!(rates.len(), 15);
    assert!(rates.iter().any(|r| r == "inf"));
}

#[test]
fn json_records_match_csv_fields() {
    let out = muxdt(&["rate-at-dtf", "--n", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rec = &v.as_array().unwrap()[0];
    for key in [
        "mode",
        "family",
        "n_detectors",
        "target_dtf",
        "rate",
        "speedup",
        "iterations",
    ] {
        assert!(rec.get(key).is_some(), "{key}");
    }
}

#[test]
fn seed_flag_env_and_default() {
    let args = [
        "dtf-curve",
        "--grid",
        "lin:1e7:2e7:3",
        "--engine",
        "montecarlo",
        "--n-events",
        "10000",
    ];
    let from_env = Command::new(env!("CARGO_BIN_EXE_muxdt"))
        .args(args)
        .env("MUXDT_SEED", "77")
        .output()
        .unwrap();
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "77"]);
    assert_eq!(from_env.stdout, muxdt(&with_flag).stdout);
    assert!(column(&stdout(&from_env), "seed").iter().all(|s| s == "77"));
    assert!(column(&stdout(&muxdt(&args)), "seed")
        .iter()
        .all(|s| s == "0"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("recipe.toml");
    std::fs::write(&path, "family = \"tree\"\nn = 4\ntarget = 0.2\n").unwrap();
    let p = path.to_str().unwrap();

    let from_file = stdout(&muxdt(&["rate-at-dtf", "--config", p]));
    assert_eq!(column(&from_file, "family"), ["tree"]);
    assert_eq!(column(&from_file, "n_detectors"), ["4"]);

    let overridden = stdout(&muxdt(&["rate-at-dtf", "--config", p, "--n", "2"]));
    assert_eq!(column(&overridden, "n_detectors"), ["2"]);
    assert_eq!(
        column(&overridden, "target_dtf")[0].parse::<f64>().unwrap(),
        0.2
    );

    std::fs::write(&path, "bogus_flag = 1\n").unwrap();
    assert_eq!(
        muxdt(&["rate-at-dtf", "--config", p]).status.code(),
        Some(1)
    );
}

#[test]
fn output_file_receives_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = muxdt(&[
        "dtf-curve",
        "--grid",
        "lin:1e6:1e7:4",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn heterogeneous_pool_runs_under_monte_carlo_only() {
    let mc = muxdt(&[
        "dtf-curve",
        "--deadtimes",
        "50e-9,25e-9",
        "--grid",
        "lin:1e6:1e7:3",
        "--engine",
        "montecarlo",
        "--n-events",
        "10000",
    ]);
    assert!(mc.status.success());
    assert!(column(&stdout(&mc), "n_detectors").iter().all(|n| n == "2"));
    let analytic = muxdt(&[
        "dtf-curve",
        "--deadtimes",
        "50e-9,25e-9",
        "--grid",
        "lin:1e6:1e7:3",
    ]);
    assert_eq!(analytic.status.code(), Some(1));
}

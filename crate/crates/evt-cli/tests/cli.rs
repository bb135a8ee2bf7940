//! End-to-end tests of the `evt` binary: subcommand behavior, exit codes,
//! and diagnostics.

use std::path::{Path, PathBuf};
use std::process::Output;

use evt_cli::format::parse_dist;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn evt(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_evt"))
        .args(args)
        .env_remove("EVT_VERIFY_THREADS")
        .output()
        .expect("binary runs")
}

fn evt_with_threads(args: &[&str], threads: &str) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_evt"))
        .args(args)
        .env("EVT_VERIFY_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf8 stderr")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|line| line.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key}= in:\n{text}"))
        .to_string()
}

#[test]
fn gibbs_writes_a_parsable_distribution_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tilted.dist");
    let model = fixture("doublet.evt");
    let output = evt(&[
        "gibbs",
        "--model",
        model.to_str().unwrap(),
        "--beta",
        "0.7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let file = parse_dist(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let metadata = file.metadata.expect("metadata comment");
    assert_eq!(metadata.alpha, -0.7);
    let sum: f64 = file.dist.probs().iter().sum();
    assert!((sum - 1.0).abs() <= 1e-12);
    // The Gibbs direction pushes mass toward low values.
    assert!(file.dist.probs()[0] > 0.25);

    // The summary on stdout mirrors the metadata in the file.
    let text = stdout(&output);
    assert_eq!(field(&text, "alpha"), "-0.69999999999999996");
    assert_eq!(field(&text, "beta"), "0.69999999999999996");
}

#[test]
fn gibbs_and_anti_gibbs_rates_are_mutually_exclusive() {
    let model = fixture("doublet.evt");
    let both = evt(&[
        "gibbs",
        "--model",
        model.to_str().unwrap(),
        "--beta",
        "1",
        "--gamma",
        "1",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(code(&both), 1);
    assert!(stderr(&both).contains("exactly one of --beta and --gamma"));

    let neither = evt(&[
        "gibbs",
        "--model",
        model.to_str().unwrap(),
        "--out",
        "/dev/null",
    ]);
    assert_eq!(code(&neither), 1);
}

#[test]
fn solve_recovers_the_monoplet_rate() {
    let model = fixture("monoplet.evt");
    let output = evt(&[
        "solve",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "0.333333333333333333",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    let beta: f64 = field(&text, "beta").parse().unwrap();
    assert!((beta - 2.0f64.ln()).abs() <= 1e-8, "beta {beta}");
    assert!(field(&text, "alpha").starts_with('-'));
}

#[test]
fn solve_output_file_reproduces_the_reported_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solved.dist");
    let model = fixture("doublet.evt");
    let solve = evt(&[
        "solve",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "2.1",
        "--tol",
        "1e-11",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&solve), 0, "{}", stderr(&solve));
    let reported = field(&stdout(&solve), "H");

    let entropy = evt(&[
        "entropy",
        "--dist",
        out.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&entropy), 0, "{}", stderr(&entropy));
    // The file round-trips bit-exactly, so the recomputed entropy string
    // matches the solver's to the last digit.
    assert_eq!(field(&stdout(&entropy), "H"), reported);
}

#[test]
fn solve_rejects_unreachable_targets() {
    let model = fixture("doublet.evt");
    let output = evt(&[
        "solve",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "3.5",
        "--tol",
        "1e-10",
    ]);
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("outside the attainable"));
}

#[test]
fn solve_validates_flag_values() {
    let model = fixture("doublet.evt");
    for (flag, value) in [("--target-mean", "nan"), ("--tol", "0"), ("--tol", "-1e-9")] {
        let output = evt(&[
            "solve",
            "--model",
            model.to_str().unwrap(),
            "--target-mean",
            "1.5",
            flag,
            value,
        ]);
        assert_eq!(code(&output), 1, "{flag} {value}");
    }
}

#[test]
fn verify_passes_and_exit_code_mirrors_the_report() {
    let model = fixture("doublet.evt");
    for target in ["0.9", "1.5", "2.3"] {
        let output = evt(&[
            "verify",
            "--model",
            model.to_str().unwrap(),
            "--target-mean",
            target,
            "--trials",
            "300",
            "--seed",
            "42",
        ]);
        let text = stdout(&output);
        let passed = field(&text, "passed") == "true";
        assert_eq!(code(&output) == 0, passed, "target {target}: {text}");
        assert!(passed, "honest instances certify: {text}");
        let gap: f64 = field(&text, "worst_gap").parse().unwrap();
        assert!(gap >= -1e-10);
    }
}

#[test]
fn verify_reports_identically_across_thread_counts() {
    let model = fixture("doublet.evt");
    let args = [
        "verify",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "1.2",
        "--trials",
        "200",
        "--seed",
        "7",
    ];
    let single = evt_with_threads(&args, "1");
    let quad = evt_with_threads(&args, "4");
    assert_eq!(code(&single), 0, "{}", stderr(&single));
    assert_eq!(stdout(&single), stdout(&quad));

    let bad = evt_with_threads(&args, "zero");
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("EVT_VERIFY_THREADS"));
}

#[test]
fn verify_rejects_boundary_targets_and_zero_trials() {
    let model = fixture("doublet.evt");
    let boundary = evt(&[
        "verify",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "3.0",
        "--trials",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&boundary), 1);

    let zero = evt(&[
        "verify",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "1.5",
        "--trials",
        "0",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&zero), 1);
    assert!(stderr(&zero).contains("--trials"));
}

#[test]
fn oracle_agrees_with_the_closed_form() {
    let model = fixture("doublet.evt");
    let output = evt(&[
        "oracle",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "1.2",
        "--tol",
        "1e-9",
        "--iters",
        "50000",
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert_eq!(field(&text, "agrees"), "true");
    assert_eq!(field(&text, "converged"), "true");
    let diff: f64 = field(&text, "entropy_diff").parse().unwrap();
    assert!(diff.abs() <= 1e-6);
    let sup: f64 = field(&text, "sup_diff").parse().unwrap();
    assert!(sup <= 1e-4);
}

#[test]
fn oracle_iteration_starvation_is_a_numeric_failure() {
    let model = fixture("doublet.evt");
    let output = evt(&[
        "oracle",
        "--model",
        model.to_str().unwrap(),
        "--target-mean",
        "1.2",
        "--tol",
        "1e-14",
        "--iters",
        "1",
    ]);
    assert_eq!(code(&output), 2);
    assert_eq!(field(&stdout(&output), "converged"), "false");
    assert!(stderr(&output).contains("did not converge"));
}

#[test]
fn sample_is_deterministic_per_seed_and_stays_on_support() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("tilted.dist");
    let model = fixture("doublet.evt");
    let gibbs = evt(&[
        "gibbs",
        "--model",
        model.to_str().unwrap(),
        "--gamma",
        "0.4",
        "--out",
        dist.to_str().unwrap(),
    ]);
    assert_eq!(code(&gibbs), 0, "{}", stderr(&gibbs));

    let out_a = dir.path().join("a.txt");
    let out_b = dir.path().join("b.txt");
    let out_c = dir.path().join("c.txt");
    for (out, seed) in [(&out_a, "9"), (&out_b, "9"), (&out_c, "10")] {
        let run = evt(&[
            "sample",
            "--dist",
            dist.to_str().unwrap(),
            "-n",
            "300",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
    }
    let a = std::fs::read_to_string(&out_a).unwrap();
    let b = std::fs::read_to_string(&out_b).unwrap();
    let c = std::fs::read_to_string(&out_c).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 300);
    for line in a.lines() {
        assert_eq!(line.len(), 2);
        assert!(line.chars().all(|ch| ch == '0' || ch == '1'));
    }
}

#[test]
fn identities_hold_in_both_directions() {
    let model = fixture("doublet.evt");
    for flag in [["--beta", "1.25"], ["--gamma", "0.8"]] {
        let output = evt(&[
            "identities",
            "--model",
            model.to_str().unwrap(),
            flag[0],
            flag[1],
        ]);
        assert_eq!(code(&output), 0, "{}", stderr(&output));
        let text = stdout(&output);
        let pointwise: f64 = field(&text, "max_pointwise_residual").parse().unwrap();
        let mean: f64 = field(&text, "mean_relation_residual").parse().unwrap();
        assert!(pointwise <= 1e-9);
        assert!(mean <= 1e-9);
    }
}

#[test]
fn every_malformed_fixture_exits_one_with_a_position() {
    let cases = [
        ("duplicate_mask.evt", 3, 1),
        ("missing_mask.evt", 4, 1),
        ("bad_bitstring.evt", 4, 1),
        ("bad_number.evt", 3, 3),
        ("negative_value.evt", 3, 3),
        ("negative_prob.evt", 3, 5),
        ("not_normalized.evt", 3, 1),
        ("too_many_events.evt", 1, 62),
        ("missing_header.evt", 2, 1),
        ("duplicate_event.evt", 1, 10),
        ("empty_events.evt", 1, 1),
        ("wrong_fields.evt", 2, 9),
    ];
    for (name, line, column) in cases {
        let model = fixture(name);
        let output = evt(&[
            "solve",
            "--model",
            model.to_str().unwrap(),
            "--target-mean",
            "0.5",
            "--tol",
            "1e-9",
        ]);
        assert_eq!(code(&output), 1, "{name} must fail validation");
        let diagnostic = stderr(&output);
        let expected = format!("line {line}, column {column}");
        assert!(
            diagnostic.contains(&expected),
            "{name}: expected `{expected}` in `{diagnostic}`"
        );
        assert!(diagnostic.contains(name), "{name} named in {diagnostic}");
    }
}

#[test]
fn missing_files_and_usage_errors_exit_one() {
    let absent = evt(&[
        "solve",
        "--model",
        "/nonexistent/model.evt",
        "--target-mean",
        "0.5",
        "--tol",
        "1e-9",
    ]);
    assert_eq!(code(&absent), 1);
    assert!(stderr(&absent).contains("/nonexistent/model.evt"));

    let unknown = evt(&["frobnicate"]);
    assert_eq!(code(&unknown), 1);

    let missing_arg = evt(&["solve", "--target-mean", "0.5"]);
    assert_eq!(code(&missing_arg), 1);

    let help = evt(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("verify"));
}

//! Command-line behaviour: exit codes, JSON output and determinism.

use std::process::Command;

use serde_json::Value;

const HYPER: &str = "A B C D / D C B A";

fn bsurf(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bsurf"))
        .args(args)
        .env_remove("BSURF_DEPTH_DEFAULT")
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> Value {
    json_with_code(args, 0)
}

fn json_with_code(args: &[&str], expected: i32) -> Value {
    let mut full = vec!["--emit", "json"];
    full.extend_from_slice(args);
    let (code, out, err) = bsurf(&full);
    assert_eq!(code, expected, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: invalid JSON ({e}): {out}"))
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(bsurf(&["no-such-command"]).0, 2);
    assert_eq!(bsurf(&["induct", "rv"]).0, 2);
    assert_eq!(bsurf(&["keane", "--pi", "A B / B A", "--lambda", "1,1"]).0, 2);
    assert_eq!(bsurf(&["keane", "--pi", HYPER, "--lambda", "1,x,1,1"]).0, 2);
}

#[test]
fn keane_failure_exits_with_one() {
    // Equal lengths: the first comparison is a tie.
    let (code, out, _) = bsurf(&["keane", "--pi", HYPER, "--lambda", "1/4,1/4,1/4,1/4"]);
    assert_eq!(code, 1, "{out}");
    // A rational length vector: the certificate fails and the report says why.
    let v = json_with_code(&["keane", "--pi", HYPER, "--lambda", "1/2,1/4,1/8,1/8"], 1);
    assert_eq!(v["certified"], Value::Bool(false));
    assert!(v["violation"].is_object());
}

#[test]
fn induction_round_trip_through_the_cli() {
    let v = json(&["induct", "rv", "--pi", HYPER, "--lambda", "5/16,1/4,1/4,3/16", "--tau", "1,1/2,-1/3,-1"]);
    let text = v.to_string();
    assert!(text.contains("\"direction\""), "{text}");
}

#[test]
fn chamanara_demo_reports_the_known_values() {
    let v = json(&["k0", "classify", "--fixture", "chamanara"]);
    assert_eq!(v["classification"]["kind"], "LocalizedIntegers");
    assert_eq!(v["classification"]["k"], 2);
    assert_eq!(v["rational_rank"], 1);
    let (code, out, _) = bsurf(&["chamanara", "--demo"]);
    assert_eq!(code, 0);
    assert!(out.contains("Z[1/2]"), "{out}");
}

#[test]
fn theta_kernel_for_the_two_by_two_pairing() {
    let (code, out, err) = bsurf(&["theta", "--I", "2", "--J", "2", "--star", "1:3,1:4,2:3,2:4"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("1 -1 -1 1") || out.contains("-1 1 1 -1"), "{out}");
}

#[test]
fn rauzy_graph_of_the_hyperelliptic_class() {
    let (code, out, _) = bsurf(&["rauzy-graph", "--pi", HYPER]);
    assert_eq!(code, 0);
    assert!(out.contains('7'), "{out}");
}

#[test]
fn diagram_check_on_a_surface_fixture_passes() {
    let (code, out, err) = bsurf(&["diagram", "check", "--fixture", "hyper"]);
    assert_eq!(code, 0, "{out}{err}");
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["--emit", "json", "density-check", "--pi", HYPER, "--samples", "50", "--seed", "7"],
        vec!["--emit", "json", "diagram", "check", "--fixture", "hyper"],
        vec!["paths", "sigma", "--fixture", "chamanara"],
    ] {
        let a = bsurf(&args);
        let b = bsurf(&args);
        assert_eq!(a, b, "{args:?} is not deterministic");
        assert_eq!(a.0, 0, "{args:?}: {}", a.2);
    }
}

#[test]
fn in_process_runner_matches_the_binary() {
    let args = ["--emit", "json", "rauzy-graph", "--pi", HYPER];
    let o = bsurf::cli::run(std::iter::once("bsurf").chain(args));
    let (code, out, _) = bsurf(&args);
    assert_eq!((o.code, o.stdout), (code, out));
}

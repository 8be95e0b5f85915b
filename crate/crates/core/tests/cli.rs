use std::path::{Path, PathBuf};
use std::process::Command;

use copula_bounds::cli::run;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("copula-bounds").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn empty_prescription_gives_frechet_bounds() {
    let p = data("empty_2d.csv");
    let (code, out, _) = call(&["eval-bound", "--prescription", p.to_str().unwrap(), "--point", "0.7,0.6"]);
    assert_eq!(code, 0);
    assert_eq!(out, "0.3,0.6\n");
}

#[test]
fn points_file_and_repeated_points() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.txt");
    std::fs::write(&pts, "0.5,0.5\n# comment\n1,0.25\n").unwrap();
    let p = data("empty_2d.csv");
    let (code, out, _) = call(&[
        "eval-bound",
        "--prescription",
        p.to_str().unwrap(),
        "--point",
        "0.2,0.9",
        "--points",
        pts.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "0.1,0.2\n0,0.5\n0.25,0.25\n");
}

#[test]
fn eval_bound_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "d,side\n2,copula\n0.5,0.5,0.9\n").unwrap();
    let (code, _, err) = call(&["eval-bound", "--prescription", bad.to_str().unwrap(), "--point", "0.5,0.5"]);
    assert_eq!(code, 3, "{err}");

    let p = data("single_point.csv");
    let (code, _, _) = call(&["eval-bound", "--prescription", p.to_str().unwrap(), "--point", "0.5,0.5"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["eval-bound", "--prescription", p.to_str().unwrap(), "--point", "0.5,x,0.5"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["eval-bound", "--prescription", "/nonexistent/file.csv", "--point", "0.5,0.5"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn certify_diagonal_track_and_none() {
    let p = data("diagonal_track.csv");
    let (code, out, _) =
        call(&["certify", "--prescription", p.to_str().unwrap(), "--s", "0.5,0.5,0.5", "--eps", "0.1,0.1,0.1"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().nth(1), Some("0.5,0.5,0.5,0.1,0.1,0.1,0.56,0.56,0.56,-0.029"));

    // A full-width gap at the top corner carries all the mass: no witness.
    let (code, out, _) = call(&["certify", "--reference", "comonotone", "--s", "0.9,0.9,0.9", "--eps", "0.1,0.1,0.1"]);
    assert_eq!(code, 0);
    assert_eq!(out, "none\n");
}

#[test]
fn reproduce_fig_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("figs");
    let (code, out, err) = call(&[
        "reproduce-fig",
        "fig2",
        "--paths",
        "20000",
        "--strikes",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "both",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 6);
    let csv = std::fs::read_to_string(out_dir.join("fig2.csv")).unwrap();
    assert!(csv.starts_with("strike,std_lower,imp_lower,imp_upper,std_upper,benchmark,stderr,sharp"));
    let svg = std::fs::read_to_string(out_dir.join("fig2.svg")).unwrap();
    assert_eq!(svg.matches("<polyline class=\"series\"").count(), 5);
}

#[test]
fn reproduce_fig_is_deterministic_under_seed() {
    let args = ["reproduce-fig", "fig1", "--paths", "20000", "--strikes", "4", "--seed", "7"];
    let (_, a, _) = call(&args);
    let (_, b, _) = call(&args);
    assert_eq!(a, b);
}

#[test]
fn price_bounds_from_quote_file() {
    let (model, quotes) = (data("model.toml"), data("pairwise_quotes.csv"));
    let (code, out, err) = call(&[
        "price-bounds",
        "--model",
        model.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
        "--payoff",
        "digital-put-on-max",
        "--strikes",
        "9,10,11",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 4);

    // Call-on-min is upper-orthant: pairwise quotes cannot bound it.
    let (code, _, _) = call(&[
        "price-bounds",
        "--model",
        model.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
        "--payoff",
        "call-on-min",
        "--strikes",
        "10",
    ]);
    assert_ne!(code, 0);
}

#[test]
fn check_properties_detects_injected_fault() {
    let (code, out, _) = call(&["check-properties", "--suite", "subset", "--cases", "10"]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = call(&["check-properties", "--suite", "subset", "--cases", "10", "--inject-fault", "lipschitz"]);
    assert_eq!(code, 1);
    assert!(out.contains("qc3-lipschitz"));
}

#[test]
fn binary_exit_code_and_thread_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_copula-bounds"))
        .env("COPULA_BOUNDS_THREADS", "2")
        .args(["eval-bound", "--prescription"])
        .arg(data("empty_2d.csv"))
        .args(["--point", "0.7,0.6"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0.3,0.6\n");
    let bad = Command::new(env!("CARGO_BIN_EXE_copula-bounds")).arg("eval-bound").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

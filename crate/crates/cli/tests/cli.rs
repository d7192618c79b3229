use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_error(out: &Output, kind: &str) {
    assert_eq!(out.status.code(), Some(1), "{}", stderr(out));
    let err = stderr(out);
    let line = err.lines().next().unwrap_or("");
    assert!(line.starts_with(&format!("error: {kind}: ")), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn bol_on_bubble_is_inconclusive() {
    let out = run(&[
        "check", "bol", "--domain", "disk:1", "--field", "bubble:1", "--alpha", "0", "--n", "512",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdict"], "inconclusive");
    assert!(r["rel_slack"].as_f64().unwrap().abs() <= 1e-3);
}

#[test]
fn huber_centered_disk_is_equality() {
    let out = run(&[
        "check",
        "huber",
        "--domain",
        "disk:1@origin",
        "--alpha",
        "0.5",
        "--n",
        "512",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["equality_hint"], true);
    assert_eq!(r["verdict"], "inconclusive");
}

#[test]
fn pointwise_zero_field() {
    let out = run(&[
        "check",
        "pointwise",
        "--domain",
        "disk:1",
        "--field",
        "zero",
        "--alpha",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdict"], "pass");
    assert!((r["bound_factor"].as_f64().unwrap() - 1.30612).abs() < 1e-4);
}

#[test]
fn alexandrov_on_annulus_passes() {
    let out = run(&[
        "check",
        "alexandrov",
        "--domain",
        "annulus:0.5,1",
        "--field",
        "zero",
        "--k0",
        "0",
        "--n",
        "64",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["strict_expected"], true);
    assert_eq!(r["verdict"], "pass");
}

#[test]
fn violation_exits_two() {
    // a strongly superharmonic field let through by a loose screen
    let out = run(&[
        "check", "bol", "--domain", "disk:1", "--field", "quad:-20", "--tol", "100", "--n", "64",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert_eq!(json(&out)["verdict"], "fail");
}

#[test]
fn rearrange_reports_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "rearrange",
            "--domain",
            "disk:1",
            "--field",
            "bubble:1",
            "--n",
            "128",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["monotonicity"]["verdict"], "pass");
    let m = &r["monotonicity"];
    assert!(m["max_abs_p"].as_f64().unwrap() <= m["tol_p"].as_f64().unwrap());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["curves"][0], "level_set.csv");
    let csv = std::fs::read_to_string(dir.path().join("o/level_set.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("s,eta_star,F,P_alpha,J_alpha"));

    let zero = json(&run(&[
        "rearrange",
        "--domain",
        "disk:1",
        "--field",
        "zero",
        "--n",
        "96",
    ]));
    assert!(zero["monotonicity"]["min_interior_p"].as_f64().unwrap() > 0.0);
}

#[test]
fn rearrange_flat_field_is_degenerate() {
    let out = run(&["rearrange", "--domain", "disk:1", "--field", "const:-1000", "--n", "48"]);
    assert_error(&out, "degenerate_subsolution");
    assert!(stderr(&out).contains("degenerate subsolution"));
}

#[test]
fn cosmic_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "cosmic", "solve", "--N", "0", "--L", "0", "--a", "1", "--u0", "1.386", "--rmax", "1e4", "--out", "solve",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert!((r["mass"]["beta"].as_f64().unwrap() - 4.0).abs() < 1e-2);
    assert!(r["equation_residual"].as_f64().unwrap() <= 1e-6);

    let out = run_in(
        dir.path(),
        &[
            "cosmic",
            "kelvin",
            "--in",
            "solve/profile.csv",
            "--beta",
            "4",
            "--out",
            "k",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let k = json(&out);
    assert!(k["equation_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(k["integrable"], true);
    assert!(dir.path().join("k/kelvin.csv").exists());

    let out = run_in(
        dir.path(),
        &["cosmic", "mass", "--in", "solve/profile.csv", "--delta", "1"],
    );
    let m = json(&out);
    assert!((m["local_mass"].as_f64().unwrap() - 2.0).abs() < 1e-3, "{m}");
    assert_eq!(m["floor"], 4.0);
}

#[test]
fn cosmic_floors_and_aux() {
    let f = json(&run(&["cosmic", "floors", "--N", "0", "--a", "2"]));
    assert_eq!(f["blowup_floors"]["regular"], 2.0);
    let f = json(&run(&["cosmic", "floors", "--N", "-0.5", "--a", "0.5"]));
    assert_eq!(f["blowup_floors"]["origin"], 2.0);
    let f = json(&run(&["cosmic", "floors", "--N", "0", "--a", "1", "--beta", "4"]));
    assert_eq!(f["blowup_floors"]["infinity"], 2.0);

    let out = run(&[
        "cosmic", "aux", "--N", "0", "--L", "0", "--a", "2", "--u0", "0.5", "--rmax", "2", "--n", "96",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let a = json(&out);
    assert_eq!(a["check"]["verdict"], "pass");
    assert_eq!(a["check"]["c_a"], 2.0);
}

#[test]
fn error_paths() {
    assert_error(&run(&["check", "bol", "--field", "zero"]), "usage");
    assert_error(&run(&["check", "bol", "--domain", "disk:1"]), "usage");
    assert_error(&run(&["frobnicate"]), "usage");
    assert_error(
        &run(&["check", "bol", "--domain", "blob:1", "--field", "zero"]),
        "parse",
    );
    assert_error(
        &run(&["check", "bol", "--domain", "disk:x", "--field", "zero"]),
        "parse",
    );
    assert_error(
        &run(&["check", "bol", "--domain", "disk:1", "--field", "wave:2"]),
        "parse",
    );
    assert_error(
        &run(&[
            "check", "bol", "--domain", "disk:1", "--field", "zero", "--g", "quad:-1",
        ]),
        "parse",
    );
    assert_error(
        &run(&[
            "check", "bol", "--domain", "disk:1", "--field", "zero", "--alpha", "1.5",
        ]),
        "precondition",
    );
    assert_error(
        &run(&["check", "bol", "--domain", "disk:1", "--field", "zero", "--vhat", "2"]),
        "precondition",
    );
    assert_error(
        &run(&[
            "check",
            "bol",
            "--domain",
            "disk:1@1,0",
            "--field",
            "zero",
            "--alpha",
            "0.3",
            "--n",
            "32",
        ]),
        "origin_on_boundary",
    );
    assert_error(
        &run(&[
            "check",
            "pointwise",
            "--domain",
            "disk:1",
            "--field",
            "const:2.5",
            "--n",
            "32",
        ]),
        "mass_above_threshold",
    );
    assert_error(
        &run(&["check", "bol", "--domain", "disk:1", "--field", "quad:-20", "--n", "32"]),
        "subsolution_screen",
    );
    assert_error(
        &run(&["check", "bol", "--domain", "disk:1", "--field", "file:/nonexistent.csv"]),
        "io",
    );
    assert_error(&run(&["check", "bol", "--config", "/nonexistent.toml"]), "config");
    assert_error(&run(&["cosmic", "solve", "--N", "0"]), "usage");
    assert_error(&run(&["cosmic", "solve", "--N", "-2", "--u0", "0"]), "precondition");
    assert_error(
        &run(&[
            "cosmic", "kelvin", "--N", "0", "--u0", "0", "--rmax", "0.5", "--beta", "4",
        ]),
        "out_of_range",
    );
    assert_error(
        &run(&["cosmic", "kelvin", "--N", "0", "--u0", "0", "--rmax", "2"]),
        "not_decaying",
    );
    assert_error(
        &run(&["--n", "4", "check", "bol", "--domain", "disk:1", "--field", "zero"]),
        "usage",
    );
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("check"));
}

#[test]
fn config_defaults_and_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "domain = \"disk:1\"\nfield = \"bubble:2\"\nn = 64\n",
    )
    .unwrap();
    let base = json(&run_in(dir.path(), &["check", "bol", "--config", "c.toml"]));
    assert_eq!(base["verdict"], "inconclusive");
    let over = json(&run_in(
        dir.path(),
        &["check", "bol", "--config", "c.toml", "--field", "zero"],
    ));
    assert_eq!(over["verdict"], "pass");
    assert!(over["rel_slack"].as_f64().unwrap() > 0.1);
    let finer = json(&run_in(
        dir.path(),
        &["--config", "c.toml", "--n", "128", "check", "bol"],
    ));
    assert!(finer["tol"].as_f64().unwrap() < base["tol"].as_f64().unwrap());

    std::fs::write(dir.path().join("bad.toml"), "domain = [1, 2]\n").unwrap();
    assert_error(&run_in(dir.path(), &["check", "bol", "--config", "bad.toml"]), "config");
    std::fs::write(dir.path().join("broken.toml"), "domain = \n").unwrap();
    assert_error(
        &run_in(dir.path(), &["check", "bol", "--config", "broken.toml"]),
        "config",
    );
}

const SWEEP: &str = r#"
n = 48
[[run]]
command = "check bol"
domain = "disk:1"
field = "bubble:1"
[[run]]
command = "cosmic floors"
N = -0.5
a = 0.5
[[run]]
command = "rearrange"
domain = "square:1.5"
field = "random"
seed = 3
"#;

#[test]
fn sweep_runs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SWEEP).unwrap();
    let a = run_in(dir.path(), &["sweep", "s.toml", "--jobs", "2", "--out", "a"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    let b = run_in(dir.path(), &["sweep", "s.toml", "--jobs", "1", "--out", "b"]);
    assert_eq!(a.stdout, b.stdout);
    let runs = json(&a);
    assert_eq!(runs.as_array().unwrap().len(), 3);
    assert_eq!(runs[1]["report"]["blowup_floors"]["origin"], 2.0);
    for k in 0..3 {
        let p = format!("run-{k:03}/report.json");
        assert_eq!(
            std::fs::read(dir.path().join("a").join(&p)).unwrap(),
            std::fs::read(dir.path().join("b").join(&p)).unwrap()
        );
    }

    std::fs::write(
        dir.path().join("e.toml"),
        format!("{SWEEP}\n[[run]]\ncommand = \"check bol\"\n"),
    )
    .unwrap();
    let e = run_in(dir.path(), &["sweep", "e.toml"]);
    assert_eq!(e.status.code(), Some(1));
    assert!(json(&e)[3]["error"]
        .as_str()
        .unwrap()
        .starts_with("error: usage: missing --domain"));

    std::fs::write(dir.path().join("n.toml"), "[[run]]\ncommand = \"sweep x.toml\"\n").unwrap();
    let n = run_in(dir.path(), &["sweep", "n.toml"]);
    assert!(json(&n)[0]["error"].as_str().unwrap().starts_with("error: usage:"));
    std::fs::write(dir.path().join("empty.toml"), "n = 3\n").unwrap();
    assert_error(&run_in(dir.path(), &["sweep", "empty.toml"]), "config");
}

#[test]
fn reports_are_byte_identical() {
    let args = [
        "rearrange",
        "--domain",
        "annulus:0.4,1",
        "--field",
        "random",
        "--seed",
        "11",
        "--n",
        "64",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "rearrange",
        "--domain",
        "annulus:0.4,1",
        "--field",
        "random",
        "--seed",
        "12",
        "--n",
        "64",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

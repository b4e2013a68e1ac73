use std::path::Path;
use std::process::{Command, Output};

use hsi_refine::io::report::read_runs_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hsi-refine"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null)
}

fn scene(dir: &Path) {
    ok(dir, &["synth", "--preset", "small", "--seed", "2", "--out-prefix", "s"]);
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn missing_input_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evaluate", "--classmap", "nope.hsp", "--labels", "nope.hsl"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert!(err["path"].as_str().unwrap().ends_with("nope.hsp"), "{err}");
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["split", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn corrupt_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.hsl"), b"HSL1 garbage").unwrap();
    let out = run(dir.path(), &["convert-check", "--labels", "bad.hsl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diverging_training_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    ok(
        dir.path(),
        &["split", "--labels", "s.hsl", "--fraction", "0.1", "--train-out", "tr.hsm", "--test-out", "te.hsm"],
    );
    let out = run(
        dir.path(),
        &["train", "--cube", "s.hsc", "--labels", "s.hsl", "--train-mask", "tr.hsm", "--lr", "1e300", "-o", "m.hsw"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "NonFiniteLoss");
}

#[test]
fn refining_twice_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    scene(d);
    ok(d, &["split", "--labels", "s.hsl", "--fraction", "0.1", "--train-out", "tr.hsm", "--test-out", "te.hsm"]);
    ok(
        d,
        &[
            "train",
            "--cube",
            "s.hsc",
            "--labels",
            "s.hsl",
            "--train-mask",
            "tr.hsm",
            "--model",
            "centroid",
            "-o",
            "m.hsw",
        ],
    );
    ok(d, &["predict", "--model", "m.hsw", "--cube", "s.hsc", "-o", "z.hsp"]);
    ok(d, &["superpixels", "--cube", "s.hsc", "--n", "200", "-o", "sp.hss"]);
    ok(d, &["refine", "--classmap", "z.hsp", "--superpixels", "sp.hss", "-o", "y1.hsp"]);
    let second = ok(d, &["refine", "--classmap", "y1.hsp", "--superpixels", "sp.hss", "-o", "y2.hsp"]);
    assert_eq!(second["pixels_changed"], 0);
    assert_eq!(std::fs::read(d.join("y1.hsp")).unwrap(), std::fs::read(d.join("y2.hsp")).unwrap());
}

#[test]
fn chained_commands_reproduce_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    scene(d);
    std::fs::write(
        d.join("exp.conf"),
        "fractions = 0.05, 0.2\nseeds = 0..2\npatch_radius = 1\nn = 250\n\n[dataset s]\ncube = s.hsc\nlabels = s.hsl\n",
    )
    .unwrap();
    ok(d, &["experiment", "--config", "exp.conf", "--out", "out"]);
    let runs = read_runs_csv(std::fs::File::open(d.join("out/runs.csv")).unwrap()).unwrap();
    assert_eq!(runs.len(), 2 * 2 * 2);

    ok(d, &["superpixels", "--cube", "s.hsc", "--n", "250", "-o", "sp.hss"]);
    for (fraction, seed) in [("0.05", 1u64), ("0.2", 0)] {
        let seed_arg = seed.to_string();
        ok(
            d,
            &[
                "split",
                "--labels",
                "s.hsl",
                "--fraction",
                fraction,
                "--seed",
                &seed_arg,
                "--train-out",
                "tr.hsm",
                "--test-out",
                "te.hsm",
            ],
        );
        ok(
            d,
            &[
                "train",
                "--cube",
                "s.hsc",
                "--labels",
                "s.hsl",
                "--train-mask",
                "tr.hsm",
                "--patch-radius",
                "1",
                "--seed",
                &seed_arg,
                "-o",
                "m.hsw",
            ],
        );
        ok(d, &["predict", "--model", "m.hsw", "--cube", "s.hsc", "-o", "z.hsp"]);
        ok(d, &["refine", "--classmap", "z.hsp", "--superpixels", "sp.hss", "-o", "y.hsp"]);
        let f: f64 = fraction.parse().unwrap();
        for (method, map) in [("raw", "z.hsp"), ("refined", "y.hsp")] {
            let scored = ok(d, &["evaluate", "--classmap", map, "--labels", "s.hsl", "--mask", "te.hsm"]);
            let row = runs.iter().find(|r| r.method == method && r.train_fraction == f && r.seed == seed).unwrap();
            assert_eq!(scored["oa"].as_f64().unwrap(), row.oa, "{method} {fraction} {seed}");
            assert_eq!(scored["kappa"].as_f64().unwrap(), row.kappa, "{method} {fraction} {seed}");
        }
    }
}

#[test]
fn refine_reports_the_delta_against_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    scene(d);
    ok(d, &["split", "--labels", "s.hsl", "--fraction", "0.2", "--train-out", "tr.hsm", "--test-out", "te.hsm"]);
    ok(
        d,
        &[
            "train",
            "--cube",
            "s.hsc",
            "--labels",
            "s.hsl",
            "--train-mask",
            "tr.hsm",
            "--patch-radius",
            "0",
            "-o",
            "m.hsw",
        ],
    );
    ok(d, &["predict", "--model", "m.hsw", "--cube", "s.hsc", "-o", "z.hsp"]);
    ok(d, &["superpixels", "--method", "affinity", "--affinity", "s.hsa", "--n", "60", "-o", "sp.hss"]);
    let report = ok(
        d,
        &[
            "refine",
            "--classmap",
            "z.hsp",
            "--superpixels",
            "sp.hss",
            "-o",
            "y.hsp",
            "--labels",
            "s.hsl",
            "--test-mask",
            "te.hsm",
            "--report",
            "r.json",
        ],
    );
    let delta = report["delta"].as_f64().unwrap();
    let before = report["oa_before"].as_f64().unwrap();
    let after = report["oa_after"].as_f64().unwrap();
    assert!((after - before - delta).abs() < 1e-12);
    assert!(delta > 0.0, "{report}");
    let saved: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
}

#[test]
fn render_writes_png_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    scene(d);
    ok(d, &["superpixels", "--cube", "s.hsc", "--n", "100", "-o", "sp.hss"]);
    ok(d, &["render", "--cube", "s.hsc", "--superpixels", "sp.hss", "-o", "overlay.png"]);
    ok(d, &["render", "--labels", "s.hsl", "-o", "labels.png"]);
    for f in ["overlay.png", "labels.png"] {
        assert!(std::fs::read(d.join(f)).unwrap().starts_with(b"\x89PNG"));
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use keyhole_pep::report::{parse_csv, RunManifest};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keyhole-pep"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bound_prints_decreasing_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bound", "--snr-start", "0", "--snr-stop", "20", "--snr-step", "4"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    let b: Vec<f64> = rows.iter().map(|r| r.pep_bound_raw.unwrap()).collect();
    assert!(b.windows(2).all(|w| w[1] < w[0]));
    assert!(rows.iter().all(|r| r.pep_mc.is_none()));
}

#[test]
fn simulate_prints_mc_columns_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["simulate", "--trials", "500", "--snr-db", "0,10", "--seed", "3", "--strategy", "df-always-forward"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.pep_bound_raw.is_none() && r.trials == Some(500)));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--trials",
        "3000",
        "--snr-db",
        "0,6,12",
        "--seed",
        "11",
        "--out-dir",
        "res",
        "--name",
        "a",
    ];
    let first = run(&args, dir.path());
    assert!(first.status.success(), "{}", stderr(&first));
    let csv_a = fs::read(dir.path().join("res/a.csv")).unwrap();
    let second = run(&args, dir.path());
    assert!(second.status.success());
    assert_eq!(csv_a, fs::read(dir.path().join("res/a.csv")).unwrap());
    let manifest =
        RunManifest::from_json(&fs::read_to_string(dir.path().join("res/a.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, 11);
    assert_eq!(manifest.curves[0].file, "a.csv");
    assert_eq!(manifest.curves[0].config.simulation.trials, 3000);
}

#[test]
fn config_file_and_global_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "seed = 5\n[fading]\nkind = \"nakagami-keyhole\"\nm = 2.0\nomega = 2.0\n[sweep]\nsnr_db = [10.0]\n",
    )
    .unwrap();
    let out = run(
        &[
            "sweep",
            "--config",
            "run.toml",
            "--mode",
            "analytic",
            "--composition",
            "high-snr-union",
            "--mgf-form",
            "unscaled",
            "--clamp",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("out/sweep.manifest.json")).unwrap();
    let m = RunManifest::from_json(&text).unwrap();
    assert!(text.contains("\"high-snr-union\"") && text.contains("\"unscaled\""));
    assert!(m.selections.clamp);
    assert_eq!(m.curves[0].config.fading.rd.m, 2.0);
    assert_eq!(m.seed, 5);
}

#[test]
fn figure_writes_every_curve_with_one_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["figure", "m-sweep", "--snr-db", "10,20"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let m = RunManifest::from_json(&fs::read_to_string(dir.path().join("out/m-sweep.manifest.json")).unwrap())
        .unwrap();
    assert_eq!(m.curves.len(), 3);
    let curves: Vec<Vec<f64>> = m
        .curves
        .iter()
        .map(|c| {
            parse_csv(&fs::read_to_string(dir.path().join("out").join(&c.file)).unwrap())
                .unwrap()
                .iter()
                .map(|r| r.pep_bound_raw.unwrap())
                .collect()
        })
        .collect();
    for ((m1, m2), m3) in curves[0].iter().zip(&curves[1]).zip(&curves[2]) {
        assert!(m1 > m2 && m2 > m3);
    }
}

#[test]
fn decoder_comparison_records_decoder_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["figure", "decoder-comparison", "--snr-db", "8", "--trials", "2000"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let m = RunManifest::from_json(
        &fs::read_to_string(dir.path().join("out/decoder-comparison.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m.curves.len(), 3);
    assert_eq!(m.decoder_labels.len(), 3);
    assert!(m.decoder_labels["df-always-forward"].contains("minimum distance"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[fading]\nkind = \"nakagami-keyhole\"\nm = 0.4\n").unwrap();
    let out = run(&["bound", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("m_T ≥ 0.50"), "{}", stderr(&out));

    let out = run(&["bound", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    let out = run(&["figure", "fig9"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["simulate", "--trials", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // a file where the output directory should be
    fs::write(dir.path().join("blocked"), "").unwrap();
    let out = run(&["sweep", "--mode", "analytic", "--out-dir", "blocked/x"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    let out = run(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

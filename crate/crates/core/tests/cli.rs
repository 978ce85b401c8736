use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};

use chaos_bsde::cli::{coeffs_path, run, ExperimentConfig, RunOptions, CSV_HEADER};
use chaos_bsde::BenchmarkRegistry;

fn parse(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text, &BenchmarkRegistry::builtin()).unwrap()
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn constant_problem_is_reproduced_exactly_at_time_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let cfg = parse("example = constant\nvalue = 2.5\nT = 1\nN = 4\np = 2\nq = 2\nM = 4000\nseed = 3\n");
    let records = run(&cfg, &BenchmarkRegistry::builtin(), &out, &RunOptions::default()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].solution[0], 2.5);
    assert_eq!(records[0].exact, [2.5, 0.0, 0.0]);

    let rows = read_rows(&out);
    assert_eq!(rows[0].join(","), CSV_HEADER);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][..7], &["constant", "2", "4", "4000", "2", "3", "reuse"]);
    assert!(!rows[1][16].is_empty(), "timing recorded by default");
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let cfg = parse(
        "example = brownian\nT = 1\nN = 5\np = 1\nq = 1\nM = 1000\nrecord_timing = false\n\
         sweep_axis = M\nsweep_values = 1000, 4000, 16000\n",
    );
    run(&cfg, &BenchmarkRegistry::builtin(), &out, &RunOptions::default()).unwrap();
    let rows = read_rows(&out);
    let ms: Vec<&str> = rows[1..].iter().map(|r| r[3].as_str()).collect();
    assert_eq!(ms, ["1000", "4000", "16000"]);
    for r in &rows[1..] {
        assert_eq!(r[16], "");
        let z0: f64 = r[8].parse().unwrap();
        assert!((z0 - 1.0).abs() < 0.2, "Z0 = {z0}");
    }
}

#[test]
fn single_value_sweep_matches_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = "example = poisson_count\nT = 1\nN = 6\np = 2\nq = 1\nM = 3000\nseed = 9\nrecord_timing = false\n";
    let plain = dir.path().join("plain.csv");
    let swept = dir.path().join("swept.csv");
    let registry = BenchmarkRegistry::builtin();
    run(&parse(base), &registry, &plain, &RunOptions::default()).unwrap();
    run(
        &parse(&format!("{base}sweep_axis = seed\nsweep_values = 9\n")),
        &registry,
        &swept,
        &RunOptions::default(),
    )
    .unwrap();
    assert_eq!(fs::read(plain).unwrap(), fs::read(swept).unwrap());
}

#[test]
fn coefficient_dump_has_one_row_per_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let cfg = parse("example = poisson_count\nT = 1\nN = 3\np = 2\nq = 1\nM = 5000\nseed = 1\n");
    run(
        &cfg,
        &BenchmarkRegistry::builtin(),
        &out,
        &RunOptions { dump_coeffs: true },
    )
    .unwrap();
    let rows = read_rows(&coeffs_path(&out, 0));
    assert_eq!(rows[0].join(","), "rank,nB,nP,value,weight,std_err");
    // Constant plus C(8, 2) - 1 = 27 indices.
    assert_eq!(rows.len(), 1 + 28);
    let d0: f64 = rows[1][3].parse().unwrap();
    assert!((d0 - 1.0).abs() < 0.05, "d0 = {d0}");
    assert!(rows[1..].iter().all(|r| r[5].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn binary_reports_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    fs::write(
        &config,
        "example = example1\nT = 1\nN = 4\np = 2\nq = 1\nM = 100\nbogus = 1\n",
    )
    .unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_chaos-bsde"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().join("x.csv").to_str().unwrap(),
        ])
        .stderr(Stdio::piped())
        .output()
        .unwrap();
    assert!(!output.status.success());
    let msg = String::from_utf8_lossy(&output.stderr);
    assert!(msg.contains("bogus"), "{msg}");
}

#[test]
fn binary_seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("s.conf");
    fs::write(
        &config,
        "example = brownian\nT = 1\nN = 3\np = 1\nq = 1\nM = 500\nseed = 1\nrecord_timing = false\n",
    )
    .unwrap();
    let out = dir.path().join("s.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_chaos-bsde"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "42",
        ])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_rows(&out)[1][5], "42");
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use implied_corr::data::{load_csv, prepare_returns, to_returns, Frequency};
use implied_corr::synthetic::{gen_bivariate_gaussian, GeneratorConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_implied-corr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_synthetic(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

/// Writes both legs of a Gaussian sample as `date,close` files.
fn write_price_files(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let cfg = GeneratorConfig::gaussian(4, n, 0.42, 0.011, 0.009);
    let (r1, r2) = gen_bivariate_gaussian(&cfg).unwrap();
    let p1 = dir.join("us.csv");
    let p2 = dir.join("uk.csv");
    r1.to_price_path(100.0)
        .unwrap()
        .write_csv(std::fs::File::create(&p1).unwrap())
        .unwrap();
    r2.to_price_path(100.0)
        .unwrap()
        .write_csv(std::fs::File::create(&p2).unwrap())
        .unwrap();
    (p1, p2)
}

#[test]
fn daily_table_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = write_price_files(dir.path(), 3000);
    let o = run(&[
        "table",
        "--asset1",
        a.to_str().unwrap(),
        "--asset2",
        b.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| l.contains("% (")).collect();
    assert_eq!(rows.len(), 6, "{text}");
    for row in rows {
        let values = row
            .split_whitespace()
            .filter(|t| t.parse::<f64>().is_ok())
            .count();
        assert_eq!(values, 6, "{row}");
    }
}

#[test]
fn weekly_table_has_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = write_price_files(dir.path(), 3000);
    let o = run(&[
        "table",
        "--asset1",
        a.to_str().unwrap(),
        "--asset2",
        b.to_str().unwrap(),
        "--frequency",
        "weekly",
        "--grid",
        "paper-weekly",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(
        text.lines().filter(|l| l.contains("% (")).count(),
        4,
        "{text}"
    );
    assert!(text.contains("98.08% (1 year)"));
}

#[test]
fn insufficient_sample_names_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    // 201 closes give 200 daily returns; 200 / 520 < 1
    let (a, b) = write_price_files(dir.path(), 200);
    let o = run(&[
        "table",
        "--asset1",
        a.to_str().unwrap(),
        "--asset2",
        b.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("grid point p="), "{err}");
    assert!(err.contains("insufficient sample"), "{err}");
}

#[test]
fn usage_and_data_exit_codes() {
    assert_eq!(run(&["table"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&[
            "table",
            "--asset1",
            "a.csv",
            "--asset2",
            "b.csv",
            "--synthetic",
            "c.toml"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(run(&["table", "--asset1", "a.csv"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let o = run(&[
        "table",
        "--asset1",
        "/nope/a.csv",
        "--asset2",
        "/nope/b.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("file not found"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write_synthetic(
        dir.path(),
        "bad.csv",
        "date,close\n2024-01-02,100\n2024-01-03,-1\n",
    );
    let o = run(&[
        "table",
        "--asset1",
        bad.to_str().unwrap(),
        "--asset2",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn figure_svg_has_long_and_short_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_synthetic(dir.path(), "g.toml", "seed = 3\nn = 5000\n");
    let o = run(&["figure", "--synthetic", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = stdout(&o);
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains(">Long<") && svg.contains(">Short<"));
}

#[test]
fn figure_csv_matches_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_synthetic(dir.path(), "g.toml", "seed = 3\nn = 5000\n");
    let cfg = cfg.to_str().unwrap();
    let table = stdout(&run(&["table", "--synthetic", cfg, "--format", "csv"]));
    let figure = stdout(&run(&["figure", "--synthetic", cfg, "--format", "csv"]));
    let mut fig = figure.lines();
    assert_eq!(
        fig.next(),
        Some("probability,waiting_period,w1,w2,position,rho,in_range")
    );
    let rows: Vec<&str> = fig.collect();
    assert_eq!(rows.len(), 12);
    for row in rows {
        assert!(row.contains(",0.5,0.5,"));
        assert!(table.lines().any(|t| t == row), "{row} missing from table");
    }
}

#[test]
fn empty_grid_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_synthetic(dir.path(), "g.toml", "n = 3000\n");
    let grid = write_synthetic(dir.path(), "grid.csv", "probability,waiting_period\n");
    let o = run(&[
        "figure",
        "--synthetic",
        cfg.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
    ]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("empty grid"));
}

#[test]
fn custom_grid_file_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_synthetic(dir.path(), "g.toml", "n = 3000\n");
    let grid = write_synthetic(
        dir.path(),
        "grid.csv",
        "probability,waiting_period\n0.9,\n,50\n",
    );
    let o = run(&[
        "table",
        "--synthetic",
        cfg.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--weights",
        "0.4,0.6",
        "--position",
        "short",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.9,,0.4,0.6,short,"));
    assert!(lines[2].starts_with("0.98,50,0.4,0.6,short,"));
}

#[test]
fn out_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_synthetic(dir.path(), "g.toml", "n = 3000\n");
    let out = dir.path().join("fig.svg");
    let o = run(&[
        "figure",
        "--synthetic",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("<polyline"));
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let a = run(&["selftest", "--seed", "2"]);
    let b = run(&["selftest", "--seed", "2"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("result: PASS (36 points)"));
}

#[test]
fn selftest_tiny_sample_fails_with_named_points() {
    let o = run(&["selftest", "--sample-size", "2000"]);
    assert_eq!(o.status.code(), Some(3));
    let report = stdout(&o);
    let failing: Vec<&str> = report.lines().filter(|l| l.ends_with(" FAIL")).collect();
    assert!(!failing.is_empty(), "{report}");
    assert!(failing.iter().all(|l| l.starts_with("p=")));
}

#[test]
fn synthetic_dump_round_trips_through_load_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GeneratorConfig::gaussian(9, 400, 0.3, 0.01, 0.02);
    let (r1, r2) = gen_bivariate_gaussian(&cfg).unwrap();
    let (p1, p2) = (
        r1.to_price_path(100.0).unwrap(),
        r2.to_price_path(100.0).unwrap(),
    );
    let path = dir.path().join("leg1.csv");
    p1.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let loaded = load_csv(&path).unwrap();
    assert_eq!(loaded.observations(), p1.observations());
    assert_eq!(loaded.asset_id(), "leg1");

    let back = to_returns(&loaded).unwrap();
    for (x, y) in back.values().iter().zip(r1.values()) {
        assert!((x - y).abs() < 1e-12);
    }
    let (d1, d2) = prepare_returns(&p1, &p2, Frequency::Daily).unwrap();
    assert_eq!(d1.len(), 400);
    assert_eq!(d1.dates(), d2.dates());
}

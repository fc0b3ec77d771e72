//! End-to-end checks of the `hetfuse` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;
use tempfile::TempDir;

fn scenario(sensors: serde_json::Value, pipelines: &[&str]) -> serde_json::Value {
    json!({
        "duration_scans": 10,
        "region": { "min": [-500.0, -500.0], "max": [500.0, 500.0] },
        "sensors": sensors,
        "tracks": [
            { "birth": 1, "death": 10, "initial_state": [-100.0, 50.0, 5.0, 0.0] },
            { "birth": 3, "death": 9, "initial_state": [120.0, -80.0, 0.0, 4.0] }
        ],
        "pipelines": pipelines,
        "runs": 1,
        "seed": 7,
        "steady_state": [1, 10]
    })
}

fn two_sensors() -> serde_json::Value {
    json!([{ "position": [-300.0, 0.0] }, { "position": [300.0, 0.0] }])
}

fn write_config(dir: &Path, value: &serde_json::Value) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn hetfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetfuse"))
        .args(args)
        .env("RFS_FUSE_THREADS", "1")
        .output()
        .unwrap()
}

fn run_to(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    hetfuse(&args)
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn run_writes_one_row_per_scan_and_pipeline() {
    let dir = TempDir::new().unwrap();
    let pipelines = ["local:0", "waa-phd", "hmphd", "waa-mb", "hmmb"];
    let config = write_config(dir.path(), &scenario(two_sensors(), &pipelines));
    let out = dir.path().join("out");
    let o = run_to(&config, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["ospa.csv", "cardinality.csv"] {
        let rows = read_rows(&out.join(file));
        assert_eq!(rows.len(), 10 * pipelines.len(), "{file}");
        for p in pipelines {
            let scans: Vec<u32> = rows.iter().filter(|r| &r[1] == p).map(|r| r[0].parse().unwrap()).collect();
            assert_eq!(scans, (1..=10).collect::<Vec<_>>(), "{file} {p}");
        }
    }
    let cardinality = read_rows(&out.join("cardinality.csv"));
    let truth: Vec<f64> = cardinality.iter().take(10).map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(truth, [1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 1.0]);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"], 1);
}

#[test]
fn unknown_pipeline_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &scenario(two_sensors(), &["hmphd", "kalman"]));
    let o = run_to(&config, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kalman"));

    let config = write_config(dir.path(), &scenario(two_sensors(), &["hmphd"]));
    let o = run_to(&config, &dir.path().join("out"), &["--pipelines", "waa-phd,local:5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("local:5"));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &scenario(two_sensors(), &["waa-phd", "hmmb"]));
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        assert!(run_to(&config, out, &["--runs", "2"]).status.success());
    }
    assert!(run_to(&config, &c, &["--runs", "2", "--seed", "8"]).status.success());
    for file in ["ospa.csv", "cardinality.csv"] {
        let read = |d: &Path| std::fs::read(d.join(file)).unwrap();
        assert_eq!(read(&a), read(&b), "{file}");
    }
    assert_ne!(
        std::fs::read(a.join("ospa.csv")).unwrap(),
        std::fs::read(c.join("ospa.csv")).unwrap()
    );
}

fn weights(sensors: serde_json::Value) -> Vec<csv::StringRecord> {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &scenario(sensors, &["hmphd"]));
    let o = hetfuse(&[
        "weights",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    read_rows(&dir.path().join("weights.csv"))
}

#[test]
fn weights_csv_covers_every_cell() {
    let rows = weights(two_sensors());
    // 1000 m square in 50 m cells
    assert_eq!(rows.len(), 400);
    for r in &rows {
        assert_eq!(r.len(), 7);
        let w: f64 = r[4].parse::<f64>().unwrap() + r[5].parse::<f64>().unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_sensor_weights_are_one() {
    let rows = weights(json!([{ "position": [0.0, 0.0] }]));
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() == 1.0));
}

#[test]
fn mirrored_sensors_give_mirrored_weights() {
    let rows = weights(two_sensors());
    let at = |ix: usize, iy: usize| {
        rows.iter()
            .find(|r| r[0].parse::<usize>().unwrap() == ix && r[1].parse::<usize>().unwrap() == iy)
            .unwrap()
    };
    for ix in 0..20 {
        for iy in 0..20 {
            let w0: f64 = at(ix, iy)[4].parse().unwrap();
            let w1: f64 = at(19 - ix, iy)[5].parse().unwrap();
            assert!((w0 - w1).abs() < 1e-12, "cell ({ix}, {iy}): {w0} vs {w1}");
        }
    }
}

#[test]
fn validate_reports_coverage_or_violations() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &scenario(two_sensors(), &["hmphd"]));
    let o = hetfuse(&["validate", "--config", config.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("sensor,cell_fraction"));

    let mut bad = scenario(two_sensors(), &["hmphd"]);
    bad["tracks"][0]["death"] = json!(40);
    bad["sensors"][1]["tier_pd"] = json!([0.9, 1.5, 0.5]);
    let config = write_config(dir.path(), &bad);
    let o = hetfuse(&["validate", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("track 0"), "{text}");
    assert!(text.contains("sensor 1"), "{text}");
}

#[test]
fn missing_config_is_a_config_error() {
    let o = hetfuse(&["run", "--config", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &scenario(two_sensors(), &["waa-phd"]));
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = run_to(&config, &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

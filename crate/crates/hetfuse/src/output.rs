//! CSV and JSON writers. Floats use 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use hetfuse_core::WeightMap;

use crate::error::HarnessError;
use crate::sim::{ClusteringRecord, MonteCarloResult, PipelineSummary};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let wrap = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(format!("cannot write {}", path.display()), e))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// `scan,pipeline,mean,std`, pipeline-major.
pub fn write_ospa(path: &Path, res: &MonteCarloResult) -> Result<(), HarnessError> {
    let rows = res.pipelines.iter().enumerate().flat_map(|(j, p)| {
        res.ospa_series(j)
            .into_iter()
            .enumerate()
            .map(move |(k, (m, s))| vec![(k + 1).to_string(), p.to_string(), fmt_f64(m), fmt_f64(s)])
    });
    write_rows(path, &header(&["scan", "pipeline", "mean", "std"]), rows)
}

/// `scan,pipeline,mean_true,mean_est`, pipeline-major.
pub fn write_cardinality(path: &Path, res: &MonteCarloResult) -> Result<(), HarnessError> {
    let rows = res.pipelines.iter().enumerate().flat_map(|(j, p)| {
        res.cardinality_series(j)
            .into_iter()
            .enumerate()
            .map(move |(k, (t, e))| vec![(k + 1).to_string(), p.to_string(), fmt_f64(t), fmt_f64(e)])
    });
    write_rows(path, &header(&["scan", "pipeline", "mean_true", "mean_est"]), rows)
}

/// `run,scan,pipeline,ospa,cardinality` for every run.
pub fn write_per_run(path: &Path, res: &MonteCarloResult) -> Result<(), HarnessError> {
    let rows = res.runs.iter().enumerate().flat_map(|(r, run)| {
        res.pipelines.iter().enumerate().flat_map(move |(j, p)| {
            run.ospa[j]
                .iter()
                .zip(&run.cardinality[j])
                .enumerate()
                .map(move |(k, (o, c))| vec![r.to_string(), (k + 1).to_string(), p.to_string(), fmt_f64(*o), fmt_f64(*c)])
        })
    });
    write_rows(path, &header(&["run", "scan", "pipeline", "ospa", "cardinality"]), rows)
}

#[derive(Serialize)]
struct Summary<'a> {
    runs: usize,
    seed: u64,
    steady_state: [u32; 2],
    pipelines: &'a [PipelineSummary],
}

pub fn write_summary(path: &Path, res: &MonteCarloResult, seed: u64) -> Result<(), HarnessError> {
    let s = Summary {
        runs: res.runs.len(),
        seed,
        steady_state: res.steady_state,
        pipelines: &res.summaries(),
    };
    let file = File::create(path).map_err(|e| HarnessError::io(format!("cannot create {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &s)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(format!("cannot write {}", path.display()), e))
}

pub fn write_clustering(path: &Path, records: &[ClusteringRecord]) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(format!("cannot create {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w).map_err(|e| HarnessError::io(format!("cannot write {}", path.display()), e))?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(format!("cannot write {}", path.display()), e))
}

/// One row per cell: indices, center, one weight column per sensor and a
/// `flagged` column (1 when no sensor covers the cell center).
pub fn write_weights(path: &Path, map: &WeightMap) -> Result<(), HarnessError> {
    let p = map.partition();
    let mut cols = header(&["cell_x_index", "cell_y_index", "center_x_m", "center_y_m"]);
    cols.extend((0..map.sensor_count()).map(|i| format!("sensor_{i}_weight")));
    cols.push("flagged".into());
    let mut rows = Vec::with_capacity(p.cell_count());
    for m in 0..p.cell_count() {
        let (ix, iy) = p.indices_of(m);
        let c = p.cell_center(m)?;
        let mut row = vec![ix.to_string(), iy.to_string(), fmt_f64(c[0]), fmt_f64(c[1])];
        row.extend(map.cell_row(m).iter().map(|w| fmt_f64(*w)));
        row.push(u8::from(map.is_flagged(m)).to_string());
        rows.push(row);
    }
    write_rows(path, &cols, rows.into_iter())
}

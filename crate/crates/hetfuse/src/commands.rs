//! The `run`, `weights` and `validate` subcommands.
//!
//! Flags given on the command line override the values in the scenario file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hetfuse_core::models::fov_indicator;
use hetfuse_core::StateVector;

use crate::config::Config;
use crate::error::HarnessError;
use crate::output;
use crate::pipeline::parse_list;
use crate::sim::{build_weight_map_parallel, generate_truth, with_pool, Experiment, MonteCarloResult};

/// Command-line overrides of scenario values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub runs: Option<u32>,
    pub seed: Option<u64>,
    /// Comma-separated pipeline names.
    pub pipelines: Option<String>,
}

impl Overrides {
    pub fn apply(&self, config: &mut Config) -> Result<(), HarnessError> {
        if let Some(r) = self.runs {
            config.runs = r;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(p) = &self.pipelines {
            config.pipelines = parse_list(p)?;
        }
        Ok(())
    }
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Config, HarnessError> {
    let mut c = Config::from_path(path)?;
    overrides.apply(&mut c)?;
    Ok(c)
}

fn create_dir(out: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(format!("cannot create {}", out.display()), e))
}

/// Runs the experiment and writes `ospa.csv`, `cardinality.csv` and
/// `summary.json` (plus any enabled exports) into `out`.
pub fn cmd_run(config: Config, out: &Path) -> Result<MonteCarloResult, HarnessError> {
    let exp = with_pool(|| Experiment::new(config))??;
    let res = with_pool(|| exp.run_all())??;
    create_dir(out)?;
    output::write_ospa(&out.join("ospa.csv"), &res)?;
    output::write_cardinality(&out.join("cardinality.csv"), &res)?;
    output::write_summary(&out.join("summary.json"), &res, exp.config.seed)?;
    if exp.config.exports.per_run {
        output::write_per_run(&out.join("ospa_runs.csv"), &res)?;
    }
    if exp.config.exports.clustering {
        let records: Vec<_> = res.runs.first().map(|r| r.clustering.clone()).unwrap_or_default();
        output::write_clustering(&out.join("clustering.jsonl"), &records)?;
    }
    if exp.config.exports.weights {
        let map = match &exp.weight_map {
            Some(m) => m.clone(),
            None => with_pool(|| build_weight_map_parallel(&exp.sensors, &exp.config.partition()?, &exp.euf))??,
        };
        output::write_weights(&out.join("weights.csv"), &map)?;
    }
    Ok(res)
}

/// Writes the EUF weight map to `path` and returns the number of flagged cells.
pub fn cmd_weights(config: &Config, path: &Path) -> Result<usize, HarnessError> {
    config.validate()?;
    let map = with_pool(|| build_weight_map_parallel(&config.sensor_models(), &config.partition()?, &config.euf_params()))??;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    output::write_weights(path, &map)?;
    Ok(map.flagged_count())
}

/// Validation report: listed violations (if any) followed by per-sensor
/// coverage statistics.
#[derive(Debug, Clone)]
pub struct Report {
    pub violations: Vec<String>,
    pub text: String,
}

impl Report {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn cmd_validate(config: &Config) -> Report {
    let violations = config.violations();
    let mut text = String::new();
    for v in &violations {
        let _ = writeln!(text, "violation: {v}");
    }
    if violations.is_empty() {
        let _ = writeln!(
            text,
            "ok: {} sensors, {} tracks, {} scans",
            config.sensors.len(),
            config.tracks.len(),
            config.duration_scans
        );
        coverage(config, &mut text);
    }
    Report { violations, text }
}

fn coverage(config: &Config, text: &mut String) {
    let (Ok(partition), Ok(motion)) = (config.partition(), config.motion_model()) else {
        return;
    };
    let sensors = config.sensor_models();
    let truth = generate_truth::<rand_chacha::ChaCha8Rng>(&config.tracks, config.duration_scans, &motion, None);
    let states: Vec<&StateVector> = truth.iter().flatten().collect();
    let cells = partition.cell_count();
    let centers: Vec<StateVector> = (0..cells)
        .filter_map(|m| partition.cell_center(m).ok())
        .map(|c| StateVector::new(c[0], c[1], 0.0, 0.0))
        .collect();
    let seen_by = |x: &StateVector| sensors.iter().filter(|s| fov_indicator(x, s) == 1).count();
    let _ = writeln!(text, "sensor,cell_fraction,exclusive_cell_fraction,truth_fraction");
    for (i, s) in sensors.iter().enumerate() {
        let covered = centers.iter().filter(|x| fov_indicator(x, s) == 1).count();
        let exclusive = centers.iter().filter(|x| fov_indicator(x, s) == 1 && seen_by(x) == 1).count();
        let truth_hits = states.iter().filter(|x| fov_indicator(x, s) == 1).count();
        let _ = writeln!(
            text,
            "{i},{:.4},{:.4},{:.4}",
            covered as f64 / cells as f64,
            exclusive as f64 / cells as f64,
            if states.is_empty() {
                0.0
            } else {
                truth_hits as f64 / states.len() as f64
            }
        );
    }
    let unseen = states.iter().filter(|x| seen_by(x) == 0).count();
    let _ = writeln!(text, "uncovered cells: {}", centers.iter().filter(|x| seen_by(x) == 0).count());
    let _ = writeln!(text, "truth states outside every FoV: {unseen} of {}", states.len());
}

/// Default output directory when `--out` is absent.
pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}

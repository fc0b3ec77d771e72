//! Ground truth, measurement synthesis and the Monte-Carlo runner.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::Cholesky;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use hetfuse_core::filters::mb::{mb_prune, mb_step};
use hetfuse_core::filters::phd::phd_step;
use hetfuse_core::filters::{extract_mb_estimates, extract_phd_estimates, prune_merge, FilterParams};
use hetfuse_core::fusion::{c2_violations, hmmb_fuse, hmphd_fuse, waa_fuse_mb, waa_fuse_phd, FusedMb, FusionInputPhd};
use hetfuse_core::math::wrap_angle;
use hetfuse_core::metrics::{ospa, OspaParams};
use hetfuse_core::models::{detection_probability, fov_indicator, measure};
use hetfuse_core::weights::{cell_weights, WeightMap};
use hetfuse_core::EufParams;
use hetfuse_core::{BirthModel, MbDensity, Measurement, MotionModel, MppDensity, SensorModel, SpacePartition, StateVector};

use crate::config::{Config, TrackConfig};
use crate::error::HarnessError;
use crate::pipeline::Pipeline;
use crate::rng::{measurement_rng, run_seed, truth_rng};

/// Alive states per scan; index 0 is scan 1.
pub type Truth = Vec<Vec<StateVector>>;

/// Measurements indexed by `[scan][sensor]`.
pub type ScanData = Vec<Vec<Vec<Measurement>>>;

/// Propagates every track between its birth and death scans. With `rng`,
/// process noise drawn from the motion model is added at every step.
pub fn generate_truth<R: Rng>(tracks: &[TrackConfig], duration: u32, motion: &MotionModel, mut rng: Option<&mut R>) -> Truth {
    let chol = Cholesky::new(motion.process_noise).map(|c| c.l());
    let mut out = vec![Vec::new(); duration as usize];
    for t in tracks {
        let mut x = StateVector::from(t.initial_state);
        for scan in t.birth..=t.death.min(duration) {
            if scan > t.birth {
                x = motion.transition * x;
                if let (Some(rng), Some(l)) = (rng.as_deref_mut(), chol.as_ref()) {
                    let n = StateVector::from_fn(|_, _| rng.sample(StandardNormal));
                    x += l * n;
                }
            }
            if scan >= 1 {
                out[scan as usize - 1].push(x);
            }
        }
    }
    out
}

/// Detections and clutter of one sensor for one scan.
pub fn sensor_scan<R: Rng>(states: &[StateVector], sensor: &SensorModel, rng: &mut R) -> Vec<Measurement> {
    let mut z = Vec::new();
    for x in states {
        if fov_indicator(x, sensor) == 0 {
            continue;
        }
        let pd = detection_probability(x, sensor);
        if rng.random::<f64>() >= pd {
            continue;
        }
        let Ok(m) = measure(x, sensor) else { continue };
        let n_theta: f64 = rng.sample(StandardNormal);
        let n_r: f64 = rng.sample(StandardNormal);
        z.push(Measurement::new(
            wrap_angle(m[0] + sensor.sigma_theta * n_theta),
            (m[1] + sensor.sigma_r * n_r).abs(),
        ));
    }
    if sensor.clutter_rate > 0.0 {
        let count = Poisson::new(sensor.clutter_rate).map(|p| p.sample(rng) as usize).unwrap_or(0);
        for _ in 0..count {
            // (-pi, pi]
            let theta = PI - 2.0 * PI * rng.random::<f64>();
            let r = sensor.fov_max() * rng.random::<f64>();
            z.push(Measurement::new(theta, r));
        }
    }
    z
}

/// Measurements of every sensor at every scan, each from its own RNG stream.
pub fn generate_measurements(truth: &Truth, sensors: &[SensorModel], run_seed: u64) -> ScanData {
    truth
        .iter()
        .enumerate()
        .map(|(k, states)| {
            sensors
                .iter()
                .enumerate()
                .map(|(i, s)| sensor_scan(states, s, &mut measurement_rng(run_seed, i, k as u32 + 1)))
                .collect()
        })
        .collect()
}

/// Builds the EUF weight map, one cell per rayon task.
pub fn build_weight_map_parallel(
    sensors: &[SensorModel],
    partition: &SpacePartition,
    params: &EufParams,
) -> Result<WeightMap, HarnessError> {
    let cells: Vec<_> = (0..partition.cell_count())
        .into_par_iter()
        .map(|m| {
            let c = partition.cell_center(m)?;
            Ok(cell_weights(sensors, [c[0], c[1]], params))
        })
        .collect::<Result<_, hetfuse_core::Error>>()?;
    Ok(WeightMap::from_cells(partition.clone(), sensors.len(), cells)?)
}

/// Everything a run needs, resolved from a validated [`Config`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: Config,
    pub pipelines: Vec<Pipeline>,
    pub sensors: Vec<SensorModel>,
    pub motion: MotionModel,
    pub births: Vec<BirthModel>,
    pub filter: FilterParams,
    pub ospa: OspaParams,
    pub mb_fusion: hetfuse_core::MbFusionParams,
    pub euf: EufParams,
    /// Present when a heterogeneous pipeline is enabled.
    pub weight_map: Option<WeightMap>,
    pub homogeneous: Vec<f64>,
}

impl Experiment {
    pub fn new(config: Config) -> Result<Self, HarnessError> {
        config.validate()?;
        let pipelines = config.parsed_pipelines()?;
        let sensors = config.sensor_models();
        let birth = config.birth_model();
        // Each sensor only initiates objects it can see.
        let births = sensors.iter().map(|s| birth.filtered(|c| fov_indicator(&c.mean, s) == 1)).collect();
        let euf = config.euf_params();
        let weight_map = if pipelines.iter().any(|p| matches!(p, Pipeline::Hmphd | Pipeline::Hmmb)) {
            Some(build_weight_map_parallel(&sensors, &config.partition()?, &euf)?)
        } else {
            None
        };
        let n = sensors.len();
        Ok(Self {
            motion: config.motion_model()?,
            filter: config.filter_params(),
            ospa: config.ospa_params(),
            mb_fusion: config.mb_fusion_params(),
            homogeneous: vec![1.0 / n as f64; n],
            pipelines,
            sensors,
            births,
            euf,
            weight_map,
            config,
        })
    }

    fn truth(&self, seed: u64) -> Truth {
        let c = &self.config;
        if c.motion.noisy_truth {
            generate_truth(&c.tracks, c.duration_scans, &self.motion, Some(&mut truth_rng(seed)))
        } else {
            generate_truth::<rand_chacha::ChaCha8Rng>(&c.tracks, c.duration_scans, &self.motion, None)
        }
    }

    /// One Monte-Carlo run. `record_clustering` keeps the per-scan MB
    /// clustering of the fused MB pipelines.
    pub fn run(&self, run: u32, record_clustering: bool) -> Result<RunResult, HarnessError> {
        let seed = run_seed(self.config.seed, run);
        let truth = self.truth(seed);
        let scans = generate_measurements(&truth, &self.sensors, seed);
        let n = self.sensors.len();
        let p = self.pipelines.len();
        let want_phd = self.pipelines.iter().any(Pipeline::uses_phd);
        let want_mb = self.pipelines.iter().any(Pipeline::uses_mb);
        let mut phd: Vec<MppDensity> = vec![MppDensity::default(); n];
        let mut mb: Vec<MbDensity> = vec![MbDensity::default(); n];
        let mut phd_time = vec![0.0; n];
        let mut mb_time = vec![0.0; n];
        let mut fuse_time = vec![0.0; p];
        let mut result = RunResult {
            ospa: vec![Vec::with_capacity(truth.len()); p],
            cardinality: vec![Vec::with_capacity(truth.len()); p],
            true_cardinality: truth.iter().map(|t| t.len()).collect(),
            runtime_s: vec![0.0; p],
            clustering: Vec::new(),
        };

        for (k, z) in scans.iter().enumerate() {
            for i in 0..n {
                if want_phd {
                    let t = Instant::now();
                    phd[i] = phd_step(&phd[i], &z[i], &self.motion, &self.births[i], &self.sensors[i], &self.filter);
                    phd_time[i] += t.elapsed().as_secs_f64();
                }
                if want_mb {
                    let t = Instant::now();
                    mb[i] = mb_step(&mb[i], &z[i], &self.motion, &self.births[i], &self.sensors[i], &self.filter);
                    mb_time[i] += t.elapsed().as_secs_f64();
                }
            }
            let truth_pos: Vec<[f64; 2]> = truth[k].iter().map(|x| [x[0], x[1]]).collect();
            for (j, pipe) in self.pipelines.iter().enumerate() {
                let t = Instant::now();
                let estimates = match pipe {
                    Pipeline::Local(i) => extract_phd_estimates(&phd[*i]),
                    Pipeline::LocalMb(i) => extract_mb_estimates(&mb[*i], &self.filter),
                    Pipeline::WaaPhd => self.fused_phd_estimates(waa_fuse_phd(&phd, &self.homogeneous)?),
                    Pipeline::Hmphd => {
                        let map = self.weight_map.as_ref().expect("weight map built for hmphd");
                        self.fused_phd_estimates(hmphd_fuse(&FusionInputPhd::with_map(&phd, map))?)
                    }
                    Pipeline::WaaMb | Pipeline::Hmmb => {
                        let fused = match pipe {
                            Pipeline::WaaMb => waa_fuse_mb(&mb, &self.homogeneous, &self.mb_fusion)?,
                            _ => hmmb_fuse(&mb, self.weight_map.as_ref().expect("weight map built for hmmb"), &self.mb_fusion)?,
                        };
                        if record_clustering {
                            result.clustering.push(self.clustering_record(k as u32 + 1, *pipe, &mb, &fused));
                        }
                        extract_mb_estimates(&mb_prune(&fused.density, &self.filter), &self.filter)
                    }
                };
                fuse_time[j] += t.elapsed().as_secs_f64();
                let est: Vec<[f64; 2]> = estimates.iter().map(|x| [x[0], x[1]]).collect();
                result.ospa[j].push(ospa(&truth_pos, &est, &self.ospa));
                result.cardinality[j].push(est.len() as f64);
            }
        }

        let phd_all: f64 = phd_time.iter().sum();
        let mb_all: f64 = mb_time.iter().sum();
        for (j, pipe) in self.pipelines.iter().enumerate() {
            result.runtime_s[j] = fuse_time[j]
                + match pipe {
                    Pipeline::Local(i) => phd_time[*i],
                    Pipeline::LocalMb(i) => mb_time[*i],
                    Pipeline::WaaPhd | Pipeline::Hmphd => phd_all,
                    Pipeline::WaaMb | Pipeline::Hmmb => mb_all,
                };
        }
        Ok(result)
    }

    fn fused_phd_estimates(&self, fused: MppDensity) -> Vec<StateVector> {
        extract_phd_estimates(&MppDensity::new(prune_merge(&fused.intensity, &self.filter)))
    }

    fn clustering_record(&self, scan: u32, pipeline: Pipeline, local: &[MbDensity], fused: &FusedMb) -> ClusteringRecord {
        ClusteringRecord {
            scan,
            pipeline: pipeline.to_string(),
            clusters: fused.clustering.clusters.iter().map(|c| c.members.clone()).collect(),
            weights: fused.weights.clone(),
            fused_existence: fused.density.components.iter().map(|b| b.existence).collect(),
            renormalized: fused.renormalized,
            c2_violations: c2_violations(local, &fused.clustering, &self.sensors, &self.mb_fusion, &self.euf),
        }
    }

    /// All runs on the rayon pool, returned in run order.
    pub fn run_all(&self) -> Result<MonteCarloResult, HarnessError> {
        let export = self.config.exports.clustering;
        let runs: Vec<RunResult> = (0..self.config.runs)
            .into_par_iter()
            .map(|r| self.run(r, export && r == 0))
            .collect::<Result<_, _>>()?;
        Ok(MonteCarloResult {
            pipelines: self.pipelines.clone(),
            steady_state: self.config.steady_state,
            runs,
        })
    }
}

/// Per-scan MB clustering diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct ClusteringRecord {
    pub scan: u32,
    pub pipeline: String,
    /// `(sensor, component)` members of each cluster.
    pub clusters: Vec<Vec<(usize, usize)>>,
    pub weights: Vec<Vec<f64>>,
    pub fused_existence: Vec<f64>,
    pub renormalized: usize,
    pub c2_violations: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// `[pipeline][scan]`
    pub ospa: Vec<Vec<f64>>,
    /// `[pipeline][scan]`
    pub cardinality: Vec<Vec<f64>>,
    pub true_cardinality: Vec<usize>,
    /// Wall time per pipeline, local filters included.
    pub runtime_s: Vec<f64>,
    pub clustering: Vec<ClusteringRecord>,
}

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub pipelines: Vec<Pipeline>,
    pub steady_state: [u32; 2],
    pub runs: Vec<RunResult>,
}

/// Steady-state statistics of one pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub pipeline: String,
    /// Mean over runs of each run's steady-state mean OSPA.
    pub ospa_mean: f64,
    /// Sample standard deviation of the per-run steady-state means.
    pub ospa_std: f64,
    /// `ospa_std / sqrt(runs)`.
    pub ospa_se: f64,
    pub cardinality_mean: f64,
    pub true_cardinality_mean: f64,
    /// Mean wall time per run.
    pub runtime_s: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl MonteCarloResult {
    fn window(&self) -> std::ops::Range<usize> {
        let len = self.runs.first().map_or(0, |r| r.true_cardinality.len());
        let [a, b] = self.steady_state;
        (a as usize - 1).min(len)..(b as usize).min(len)
    }

    /// Per-scan `(mean, std)` of OSPA across runs for pipeline `j`.
    pub fn ospa_series(&self, j: usize) -> Vec<(f64, f64)> {
        self.series(|r| &r.ospa[j])
    }

    /// Per-scan `(mean_true, mean_est)` cardinality for pipeline `j`.
    pub fn cardinality_series(&self, j: usize) -> Vec<(f64, f64)> {
        let scans = self.runs.first().map_or(0, |r| r.true_cardinality.len());
        (0..scans)
            .map(|k| {
                let t: Vec<f64> = self.runs.iter().map(|r| r.true_cardinality[k] as f64).collect();
                let e: Vec<f64> = self.runs.iter().map(|r| r.cardinality[j][k]).collect();
                (mean(&t), mean(&e))
            })
            .collect()
    }

    fn series(&self, f: impl Fn(&RunResult) -> &Vec<f64>) -> Vec<(f64, f64)> {
        let scans = self.runs.first().map_or(0, |r| f(r).len());
        (0..scans)
            .map(|k| {
                let v: Vec<f64> = self.runs.iter().map(|r| f(r)[k]).collect();
                (mean(&v), sample_std(&v))
            })
            .collect()
    }

    pub fn summary(&self, j: usize) -> PipelineSummary {
        let w = self.window();
        let per_run: Vec<f64> = self.runs.iter().map(|r| mean(&r.ospa[j][w.clone()])).collect();
        let card: Vec<f64> = self.runs.iter().map(|r| mean(&r.cardinality[j][w.clone()])).collect();
        let truth: Vec<f64> = self
            .runs
            .iter()
            .map(|r| r.true_cardinality[w.clone()].iter().sum::<usize>() as f64 / w.len() as f64)
            .collect();
        let runtimes: Vec<f64> = self.runs.iter().map(|r| r.runtime_s[j]).collect();
        let std = sample_std(&per_run);
        PipelineSummary {
            pipeline: self.pipelines[j].to_string(),
            ospa_mean: mean(&per_run),
            ospa_std: std,
            ospa_se: std / (per_run.len() as f64).sqrt(),
            cardinality_mean: mean(&card),
            true_cardinality_mean: mean(&truth),
            runtime_s: mean(&runtimes),
        }
    }

    pub fn summaries(&self) -> Vec<PipelineSummary> {
        (0..self.pipelines.len()).map(|j| self.summary(j)).collect()
    }

    pub fn index_of(&self, p: Pipeline) -> Option<usize> {
        self.pipelines.iter().position(|q| *q == p)
    }
}

/// Runs `f` on a rayon pool capped by `RFS_FUSE_THREADS` when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    let threads = match std::env::var("RFS_FUSE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::Config(format!("RFS_FUSE_THREADS must be a positive integer, got '{v}'")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hetfuse_core::models::MotionModel;

    #[test]
    fn stationary_and_moving_tracks() {
        let m = MotionModel::constant_velocity(1.0, 0.1, 0.98).unwrap();
        let tracks = vec![
            TrackConfig {
                birth: 1,
                death: 10,
                initial_state: [5.0, 5.0, 0.0, 0.0],
            },
            TrackConfig {
                birth: 3,
                death: 5,
                initial_state: [0.0, 0.0, 2.0, -1.0],
            },
        ];
        let t = generate_truth::<rand_chacha::ChaCha8Rng>(&tracks, 10, &m, None);
        assert_eq!(t.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 1, 2, 2, 2, 1, 1, 1, 1, 1]);
        assert!(t.iter().all(|s| s[0] == StateVector::new(5.0, 5.0, 0.0, 0.0)));
        assert_eq!(t[4][1], StateVector::new(4.0, -2.0, 2.0, -1.0));
    }
}

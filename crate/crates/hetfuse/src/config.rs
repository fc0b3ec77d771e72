//! Scenario file schema (JSON) and its conversion into core models.

use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use hetfuse_core::filters::FilterParams;
use hetfuse_core::fusion::MbFusionParams;
use hetfuse_core::metrics::OspaParams;
use hetfuse_core::models::{MotionModel, SensorModel};
use hetfuse_core::partition::SpacePartition;
use hetfuse_core::rfs::{GaussianComponent, GmDensity, StateCovariance, StateVector};
use hetfuse_core::weights::EufParams;
use hetfuse_core::BirthModel;

use crate::error::HarnessError;
use crate::pipeline::Pipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_duration")]
    pub duration_scans: u32,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub motion: MotionConfig,
    pub sensors: Vec<SensorConfig>,
    pub tracks: Vec<TrackConfig>,
    #[serde(default)]
    pub birth: BirthConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub euf: EufConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default)]
    pub mb_fusion: MbFusionConfig,
    #[serde(default)]
    pub ospa: OspaConfig,
    #[serde(default = "default_pipelines")]
    pub pipelines: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default)]
    pub seed: u64,
    /// Inclusive scan range used for steady-state summaries.
    #[serde(default = "default_steady_state")]
    pub steady_state: [u32; 2],
    #[serde(default)]
    pub exports: ExportConfig,
}

fn default_duration() -> u32 {
    80
}

fn default_runs() -> u32 {
    20
}

fn default_steady_state() -> [u32; 2] {
    [20, 80]
}

fn default_pipelines() -> Vec<String> {
    ["waa-phd", "hmphd", "waa-mb", "hmmb"].iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            min: [-2500.0; 2],
            max: [2500.0; 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    pub sampling_interval: f64,
    pub sigma_v: f64,
    pub survival_probability: f64,
    /// Drive ground truth with process noise instead of the mean dynamics.
    pub noisy_truth: bool,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            sampling_interval: 1.0,
            sigma_v: 0.1,
            survival_probability: 0.98,
            noisy_truth: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub position: [f64; 2],
    #[serde(default = "default_tiers")]
    pub range_tiers: [f64; 3],
    #[serde(default = "default_tier_pd")]
    pub tier_pd: [f64; 3],
    #[serde(default = "default_clutter")]
    pub clutter_rate: f64,
    #[serde(default = "default_sigma_theta")]
    pub sigma_theta_deg: f64,
    #[serde(default = "default_sigma_r")]
    pub sigma_r: f64,
}

fn default_tiers() -> [f64; 3] {
    [500.0, 800.0, 1200.0]
}

fn default_tier_pd() -> [f64; 3] {
    [0.98, 0.8, 0.6]
}

fn default_clutter() -> f64 {
    5.0
}

fn default_sigma_theta() -> f64 {
    2.0
}

fn default_sigma_r() -> f64 {
    20.0
}

impl SensorConfig {
    pub fn at(position: [f64; 2]) -> Self {
        Self {
            position,
            range_tiers: default_tiers(),
            tier_pd: default_tier_pd(),
            clutter_rate: default_clutter(),
            sigma_theta_deg: default_sigma_theta(),
            sigma_r: default_sigma_r(),
        }
    }

    /// Unvalidated model; see [`Config::validate`].
    pub fn model(&self) -> SensorModel {
        SensorModel {
            position: Vector2::new(self.position[0], self.position[1]),
            range_tiers: self.range_tiers,
            tier_pd: self.tier_pd,
            clutter_rate: self.clutter_rate,
            sigma_theta: self.sigma_theta_deg.to_radians(),
            sigma_r: self.sigma_r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    /// First scan (1-based) at which the object exists.
    pub birth: u32,
    /// Last scan at which the object exists.
    pub death: u32,
    /// `[px, py, vx, vy]` at the birth scan.
    pub initial_state: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthConfig {
    /// Per-scan mass (PHD) or existence (MB) of each birth component.
    #[serde(default = "default_birth_mass")]
    pub mass: f64,
    #[serde(default = "default_birth_pos_std")]
    pub position_std: f64,
    #[serde(default = "default_birth_vel_std")]
    pub velocity_std: f64,
    /// Birth means `[px, py, vx, vy]`. Empty means: one component at each
    /// distinct track start.
    #[serde(default)]
    pub locations: Vec<[f64; 4]>,
}

fn default_birth_mass() -> f64 {
    0.1
}

fn default_birth_pos_std() -> f64 {
    30.0
}

fn default_birth_vel_std() -> f64 {
    15.0
}

impl Default for BirthConfig {
    fn default() -> Self {
        Self {
            mass: default_birth_mass(),
            position_std: default_birth_pos_std(),
            velocity_std: default_birth_vel_std(),
            locations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    pub max_components: usize,
    pub max_gaussians_per_bernoulli: usize,
    pub max_bernoullis: usize,
    pub existence_prune: f64,
    pub extraction_threshold: f64,
    pub gate_threshold: f64,
    pub max_existence: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let p = FilterParams::default();
        Self {
            prune_threshold: p.prune_threshold,
            merge_threshold: p.merge_threshold,
            max_components: p.max_components,
            max_gaussians_per_bernoulli: p.max_gaussians_per_bernoulli,
            max_bernoullis: p.max_bernoullis,
            existence_prune: p.existence_prune,
            extraction_threshold: p.extraction_threshold,
            gate_threshold: p.gate_threshold,
            max_existence: p.max_existence,
        }
    }
}

impl FilterConfig {
    pub fn params(&self) -> FilterParams {
        FilterParams {
            prune_threshold: self.prune_threshold,
            merge_threshold: self.merge_threshold,
            max_components: self.max_components,
            max_gaussians_per_bernoulli: self.max_gaussians_per_bernoulli,
            max_bernoullis: self.max_bernoullis,
            existence_prune: self.existence_prune,
            extraction_threshold: self.extraction_threshold,
            gate_threshold: self.gate_threshold,
            max_existence: self.max_existence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EufConfig {
    pub u1: f64,
    pub u2: f64,
}

impl Default for EufConfig {
    fn default() -> Self {
        let p = EufParams::default();
        Self { u1: p.u1, u2: p.u2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionConfig {
    pub cell_size: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { cell_size: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MbFusionConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub delta_epsilon: f64,
    pub symmetric_kld: bool,
}

impl Default for MbFusionConfig {
    fn default() -> Self {
        let p = MbFusionParams::default();
        Self {
            gamma: p.gamma,
            alpha: p.alpha,
            delta_epsilon: p.delta_epsilon,
            symmetric_kld: p.symmetric_kld,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OspaConfig {
    pub order: f64,
    pub cutoff: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self { order: 1.0, cutoff: 100.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    /// Write `weights.csv` next to the run results.
    pub weights: bool,
    /// Write `clustering.jsonl` for the first run.
    pub clustering: bool,
    /// Write `ospa_runs.csv` with every run's per-scan values.
    pub per_run: bool,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn sensor_models(&self) -> Vec<SensorModel> {
        self.sensors.iter().map(SensorConfig::model).collect()
    }

    pub fn motion_model(&self) -> Result<MotionModel, HarnessError> {
        MotionModel::constant_velocity(self.motion.sampling_interval, self.motion.sigma_v, self.motion.survival_probability)
            .map_err(|e| HarnessError::Config(format!("motion: {e}")))
    }

    pub fn partition(&self) -> Result<SpacePartition, HarnessError> {
        let c = self.partition.cell_size;
        SpacePartition::with_cell_size(self.region.min, self.region.max, [c, c])
            .map_err(|e| HarnessError::Config(format!("partition: {e}")))
    }

    pub fn euf_params(&self) -> EufParams {
        EufParams {
            u1: self.euf.u1,
            u2: self.euf.u2,
        }
    }

    pub fn filter_params(&self) -> FilterParams {
        self.filter.params()
    }

    pub fn mb_fusion_params(&self) -> MbFusionParams {
        MbFusionParams {
            gamma: self.mb_fusion.gamma,
            alpha: self.mb_fusion.alpha,
            delta_epsilon: self.mb_fusion.delta_epsilon,
            symmetric_kld: self.mb_fusion.symmetric_kld,
        }
    }

    pub fn ospa_params(&self) -> OspaParams {
        OspaParams {
            order: self.ospa.order,
            cutoff: self.ospa.cutoff,
        }
    }

    pub fn parsed_pipelines(&self) -> Result<Vec<Pipeline>, HarnessError> {
        let mut out = Vec::with_capacity(self.pipelines.len());
        for name in &self.pipelines {
            let p: Pipeline = name.parse()?;
            match p {
                Pipeline::Local(i) | Pipeline::LocalMb(i) if i >= self.sensors.len() => {
                    return Err(HarnessError::Config(format!(
                        "pipeline '{name}' refers to sensor {i}, but only {} are configured",
                        self.sensors.len()
                    )))
                }
                _ => {}
            }
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Birth intensity shared by all sensors before FoV filtering.
    pub fn birth_model(&self) -> BirthModel {
        let mut means: Vec<[f64; 4]> = self.birth.locations.clone();
        if means.is_empty() {
            for t in &self.tracks {
                if !means.contains(&t.initial_state) {
                    means.push(t.initial_state);
                }
            }
        }
        let (ps, vs) = (self.birth.position_std, self.birth.velocity_std);
        let cov = StateCovariance::from_diagonal(&nalgebra::Vector4::new(ps * ps, ps * ps, vs * vs, vs * vs));
        BirthModel::new(GmDensity::new(
            means
                .iter()
                .map(|m| GaussianComponent::new(self.birth.mass, StateVector::from(*m), cov))
                .collect(),
        ))
    }

    /// Every violated invariant, in a human-readable form. Empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.duration_scans == 0 {
            v.push("duration_scans must be >= 1".into());
        }
        let [x0, y0] = self.region.min;
        let [x1, y1] = self.region.max;
        if !(x1 > x0 && y1 > y0) {
            v.push("region max must exceed min on both axes".into());
        }
        if self.sensors.is_empty() {
            v.push("at least one sensor is required".into());
        }
        for (i, s) in self.sensors.iter().enumerate() {
            if let Err(e) = s.model().validate() {
                v.push(format!("sensor {i}: {e}"));
            }
        }
        for (k, t) in self.tracks.iter().enumerate() {
            if t.birth < 1 || t.birth >= t.death {
                v.push(format!(
                    "track {k}: birth scan {} must be >= 1 and before death scan {}",
                    t.birth, t.death
                ));
            }
            if t.death > self.duration_scans {
                v.push(format!(
                    "track {k}: death scan {} exceeds duration {}",
                    t.death, self.duration_scans
                ));
            }
            let [px, py, ..] = t.initial_state;
            if !(px >= x0 && px <= x1 && py >= y0 && py <= y1) {
                v.push(format!("track {k}: initial position ({px}, {py}) lies outside the region"));
            }
            if t.initial_state.iter().any(|c| !c.is_finite()) {
                v.push(format!("track {k}: initial state must be finite"));
            }
        }
        if let Err(e) = self.motion_model() {
            v.push(e.to_string());
        }
        if !(self.birth.mass >= 0.0 && self.birth.mass <= 1.0) {
            v.push("birth mass must lie in [0, 1]".into());
        }
        if !(self.birth.position_std > 0.0 && self.birth.velocity_std > 0.0) {
            v.push("birth standard deviations must be > 0".into());
        }
        if let Err(e) = self.filter_params().validate() {
            v.push(format!("filter: {e}"));
        }
        if let Err(e) = self.euf_params().validate() {
            v.push(format!("euf: {e}"));
        }
        if x1 > x0 && y1 > y0 {
            if let Err(e) = self.partition() {
                v.push(e.to_string());
            }
        }
        if let Err(e) = self.mb_fusion_params().validate() {
            v.push(format!("mb_fusion: {e}"));
        }
        if let Err(e) = self.ospa_params().validate() {
            v.push(format!("ospa: {e}"));
        }
        if self.pipelines.is_empty() {
            v.push("at least one pipeline is required".into());
        }
        if let Err(e) = self.parsed_pipelines() {
            v.push(e.to_string());
        }
        if self.runs == 0 {
            v.push("runs must be >= 1".into());
        }
        let [s0, s1] = self.steady_state;
        if s0 < 1 || s0 > s1 || s1 > self.duration_scans {
            v.push(format!("steady_state [{s0}, {s1}] must lie within 1..={}", self.duration_scans));
        }
        v
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(v.join("; ")))
        }
    }
}

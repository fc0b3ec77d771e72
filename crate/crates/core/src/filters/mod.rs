//! Local Gaussian-mixture PHD and multi-Bernoulli filters with extended-Kalman
//! linearization of the range-bearing model.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4x2};

use crate::math::wrap_angle;
use crate::models::{measure, measure_jacobian, Measurement, SensorModel};
use crate::rfs::{symmetrize, BernoulliComponent, GaussianComponent, GmDensity, MbDensity, MppDensity, StateCovariance, StateVector};

pub mod mb;
pub mod mixture;
pub mod phd;

pub use mb::{extract_mb_estimates, mb_predict, mb_update};
pub use mixture::prune_merge;
pub use phd::{extract_phd_estimates, phd_predict, phd_update};

/// Static birth intensity. Each component's weight is its per-scan birth
/// mass; for the MB filter it becomes the existence of a birth Bernoulli.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BirthModel {
    pub components: GmDensity,
}

impl BirthModel {
    pub fn new(components: GmDensity) -> Self {
        Self { components }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn mass(&self) -> f64 {
        self.components.mass()
    }

    /// Keeps only the birth components whose mean passes `keep`.
    pub fn filtered(&self, keep: impl Fn(&GaussianComponent) -> bool) -> Self {
        Self::new(GmDensity::new(
            self.components.components.iter().filter(|c| keep(c)).cloned().collect(),
        ))
    }

    pub fn bernoullis(&self) -> Vec<BernoulliComponent> {
        self.components
            .components
            .iter()
            .map(|c| BernoulliComponent {
                existence: c.weight.clamp(0.0, 1.0),
                spatial: GmDensity::new(alloc::vec![GaussianComponent { weight: 1.0, ..c.clone() }]),
            })
            .collect()
    }
}

/// Pruning, merging, gating and extraction settings shared by the local
/// filters and the post-fusion clean-up.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    pub prune_threshold: f64,
    /// Squared Mahalanobis distance.
    pub merge_threshold: f64,
    /// Cap on the PHD mixture size.
    pub max_components: usize,
    /// Cap on the mixture size inside one Bernoulli.
    pub max_gaussians_per_bernoulli: usize,
    /// Cap on the number of Bernoulli components.
    pub max_bernoullis: usize,
    /// Bernoullis below this existence are dropped.
    pub existence_prune: f64,
    /// Bernoullis below this existence are never reported as estimates.
    pub extraction_threshold: f64,
    /// Squared Mahalanobis gate in measurement space.
    pub gate_threshold: f64,
    /// Existence ceiling; keeps `r / (1 - r)` finite in the MB update.
    pub max_existence: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-5,
            merge_threshold: 4.0,
            max_components: 100,
            max_gaussians_per_bernoulli: 20,
            max_bernoullis: 100,
            existence_prune: 1e-3,
            extraction_threshold: 0.0,
            gate_threshold: 25.0,
            max_existence: 0.999,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> crate::Result<()> {
        let non_neg = [
            self.prune_threshold,
            self.merge_threshold,
            self.existence_prune,
            self.extraction_threshold,
            self.gate_threshold,
        ];
        if non_neg.iter().any(|v| !(*v >= 0.0)) {
            return Err(crate::Error::InvalidArgument("filter thresholds must be >= 0"));
        }
        if self.max_components == 0 || self.max_gaussians_per_bernoulli == 0 || self.max_bernoullis == 0 {
            return Err(crate::Error::InvalidArgument("component caps must be >= 1"));
        }
        if !(self.max_existence > 0.0 && self.max_existence <= 1.0) {
            return Err(crate::Error::InvalidArgument("max_existence must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Predicts one Gaussian through the motion model (weight untouched).
pub(crate) fn predict_gaussian(c: &GaussianComponent, motion: &crate::models::MotionModel) -> GaussianComponent {
    let f = &motion.transition;
    GaussianComponent {
        weight: c.weight,
        mean: f * c.mean,
        covariance: symmetrize(&(f * c.covariance * f.transpose() + motion.process_noise)),
    }
}

/// Extended-Kalman linearization of one component about its mean.
pub(crate) struct Linearized {
    z_pred: Measurement,
    s_inv: Matrix2<f64>,
    norm: f64,
    gain: Matrix4x2<f64>,
    cov_post: StateCovariance,
}

impl Linearized {
    pub(crate) fn new(c: &GaussianComponent, sensor: &SensorModel) -> Option<Self> {
        let z_pred = measure(&c.mean, sensor).ok()?;
        let h = measure_jacobian(&c.mean, sensor).ok()?;
        let r = sensor.noise_covariance();
        let s = h * c.covariance * h.transpose() + r;
        let s = (s + s.transpose()) * 0.5;
        let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
        if !(det > 0.0) {
            return None;
        }
        let s_inv = Matrix2::new(s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]) / det;
        let gain = c.covariance * h.transpose() * s_inv;
        // Joseph form
        let ikh = StateCovariance::identity() - gain * h;
        let cov_post = ikh * c.covariance * ikh.transpose() + gain * r * gain.transpose();
        Some(Self {
            z_pred,
            s_inv,
            norm: 1.0 / (2.0 * PI * libm::sqrt(det)),
            gain,
            cov_post: symmetrize(&cov_post),
        })
    }

    fn innovation(&self, z: &Measurement) -> Measurement {
        Measurement::new(wrap_angle(z[0] - self.z_pred[0]), z[1] - self.z_pred[1])
    }

    /// Squared Mahalanobis distance of `z` from the predicted measurement.
    pub(crate) fn mahalanobis(&self, z: &Measurement) -> f64 {
        let nu = self.innovation(z);
        nu.dot(&(self.s_inv * nu))
    }

    /// Gaussian likelihood `N(z; h(m), S)`.
    pub(crate) fn likelihood(&self, z: &Measurement) -> f64 {
        self.norm * libm::exp(-0.5 * self.mahalanobis(z))
    }

    pub(crate) fn updated(&self, c: &GaussianComponent, z: &Measurement, weight: f64) -> GaussianComponent {
        let nu = self.innovation(z);
        GaussianComponent {
            weight,
            mean: c.mean + self.gain * nu,
            covariance: self.cov_post,
        }
    }
}

/// Position (first two coordinates) of each extracted state.
pub fn positions(states: &[StateVector]) -> Vec<[f64; 2]> {
    states.iter().map(|s| [s[0], s[1]]).collect()
}

/// Convenience for callers that keep MPP densities.
pub fn mpp_mass(d: &MppDensity) -> f64 {
    d.mean_cardinality()
}

/// Convenience for callers that keep MB densities.
pub fn mb_mass(d: &MbDensity) -> f64 {
    d.mean_cardinality()
}

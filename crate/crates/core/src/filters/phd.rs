//! Gaussian-mixture PHD recursion.

use alloc::vec::Vec;

use crate::filters::{predict_gaussian, BirthModel, FilterParams, Linearized};
use crate::models::{detection_probability, Measurement, MotionModel, SensorModel};
use crate::rfs::{GaussianComponent, GmDensity, MppDensity, StateVector};

/// Survival-weighted prediction plus birth.
pub fn phd_predict(prior: &MppDensity, motion: &MotionModel, birth: &BirthModel) -> MppDensity {
    let ps = motion.survival_probability;
    let mut components: Vec<GaussianComponent> = prior
        .intensity
        .components
        .iter()
        .map(|c| {
            let mut p = predict_gaussian(c, motion);
            p.weight *= ps;
            p
        })
        .collect();
    components.extend(birth.components.components.iter().cloned());
    MppDensity::new(GmDensity::new(components))
}

/// Measurement update with state-dependent detection probability (evaluated
/// at each component mean), uniform clutter and Mahalanobis gating.
///
/// The result is not pruned; see [`phd_step`].
pub fn phd_update(predicted: &MppDensity, measurements: &[Measurement], sensor: &SensorModel, params: &FilterParams) -> MppDensity {
    let comps = &predicted.intensity.components;
    let pd: Vec<f64> = comps.iter().map(|c| detection_probability(&c.mean, sensor)).collect();

    let mut out: Vec<GaussianComponent> = comps
        .iter()
        .zip(&pd)
        .map(|(c, &p)| GaussianComponent {
            weight: (1.0 - p) * c.weight,
            ..c.clone()
        })
        .collect();

    let lin: Vec<Option<Linearized>> = comps
        .iter()
        .zip(&pd)
        .map(|(c, &p)| {
            if p > 0.0 && c.weight > 0.0 {
                Linearized::new(c, sensor)
            } else {
                None
            }
        })
        .collect();

    let kappa = sensor.clutter_intensity();
    for z in measurements {
        let clutter = if z[1] <= sensor.fov_max() { kappa } else { 0.0 };
        let start = out.len();
        let mut total = 0.0;
        for (i, c) in comps.iter().enumerate() {
            let Some(l) = &lin[i] else { continue };
            if l.mahalanobis(z) > params.gate_threshold {
                continue;
            }
            let w = pd[i] * c.weight * l.likelihood(z);
            if w > 0.0 {
                total += w;
                out.push(l.updated(c, z, w));
            }
        }
        let denom = clutter + total;
        if denom > 0.0 {
            for c in &mut out[start..] {
                c.weight /= denom;
            }
        } else {
            out.truncate(start);
        }
    }
    MppDensity::new(GmDensity::new(out))
}

/// One predict/update/prune cycle of a local PHD filter.
pub fn phd_step(
    prior: &MppDensity,
    measurements: &[Measurement],
    motion: &MotionModel,
    birth: &BirthModel,
    sensor: &SensorModel,
    params: &FilterParams,
) -> MppDensity {
    let predicted = phd_predict(prior, motion, birth);
    let updated = phd_update(&predicted, measurements, sensor, params);
    MppDensity::new(crate::filters::prune_merge(&updated.intensity, params))
}

/// Means of the `floor(mass)` heaviest components (ties by index).
pub fn extract_phd_estimates(density: &MppDensity) -> Vec<StateVector> {
    let comps = &density.intensity.components;
    let mass = density.mean_cardinality();
    let n = if mass.is_finite() && mass > 0.0 {
        libm::floor(mass) as usize
    } else {
        0
    };
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&a, &b| comps[b].weight.total_cmp(&comps[a].weight));
    order.into_iter().take(n).map(|i| comps[i].mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::measure;
    use crate::rfs::StateCovariance;
    use alloc::vec;
    use nalgebra::{Vector2, Vector4};

    fn sensor() -> SensorModel {
        SensorModel::new(Vector2::new(0.0, 0.0), [500.0, 800.0, 1200.0], [0.98, 0.8, 0.6], 5.0, 0.035, 20.0).unwrap()
    }

    fn comp(w: f64, x: f64, y: f64) -> GaussianComponent {
        GaussianComponent::new(
            w,
            StateVector::new(x, y, 1.0, -1.0),
            StateCovariance::from_diagonal(&Vector4::new(400.0, 400.0, 25.0, 25.0)),
        )
    }

    #[test]
    fn predict_mass_identity() {
        let m = MotionModel::constant_velocity(1.0, 0.1, 0.98).unwrap();
        let prior = MppDensity::new(GmDensity::new((0..10).map(|i| comp(1.0, 10.0 * i as f64, 0.0)).collect()));
        let birth = BirthModel::new(GmDensity::new(vec![comp(0.1, 0.0, 0.0), comp(0.1, 5.0, 5.0)]));
        let p = phd_predict(&prior, &m, &birth);
        assert!((p.mean_cardinality() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn identity_dynamics_keep_intensity() {
        let prior = MppDensity::new(GmDensity::new(vec![comp(0.7, 100.0, 200.0)]));
        let p = phd_predict(&prior, &MotionModel::identity(1.0), &BirthModel::none());
        assert_eq!(p, prior);
    }

    #[test]
    fn empty_scan_is_missed_detection() {
        let s = sensor();
        let prior = MppDensity::new(GmDensity::new(vec![
            comp(1.0, 300.0, 0.0),
            comp(0.5, 0.0, 1000.0),
            comp(0.2, 3000.0, 0.0),
        ]));
        let u = phd_update(&prior, &[], &s, &FilterParams::default());
        let w: Vec<f64> = u.intensity.components.iter().map(|c| c.weight).collect();
        assert!((w[0] - 0.02).abs() < 1e-15);
        assert!((w[1] - 0.2).abs() < 1e-15);
        assert_eq!(w[2], 0.2);
    }

    #[test]
    fn detection_beats_miss() {
        let s = SensorModel {
            clutter_rate: 0.0,
            ..sensor()
        };
        let c = comp(1.0, 300.0, 400.0);
        let z = measure(&c.mean, &s).unwrap();
        let u = phd_update(&MppDensity::new(GmDensity::new(vec![c])), &[z], &s, &FilterParams::default());
        assert_eq!(u.intensity.len(), 2);
        assert!(u.intensity.components[1].weight > u.intensity.components[0].weight);
        // zero clutter: each measurement contributes exactly unit mass
        assert!((u.intensity.components[1].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extraction_uses_floor() {
        let d = |ws: &[f64]| {
            MppDensity::new(GmDensity::new(
                ws.iter().enumerate().map(|(i, &w)| comp(w, i as f64, 0.0)).collect(),
            ))
        };
        assert!(extract_phd_estimates(&d(&[0.4])).is_empty());
        let est = extract_phd_estimates(&d(&[0.9, 1.2, 0.2]));
        assert_eq!(est.len(), 2);
        assert_eq!(est[0][0], 1.0);
        assert_eq!(est[1][0], 0.0);
        assert_eq!(extract_phd_estimates(&d(&[1.0])).len(), 1);
    }
}

//! Gaussian-mixture cardinality-balanced multi-Bernoulli recursion.

use alloc::vec::Vec;

use crate::filters::mixture::prune_merge_capped;
use crate::filters::{predict_gaussian, BirthModel, FilterParams, Linearized};
use crate::models::{detection_probability, Measurement, MotionModel, SensorModel};
use crate::rfs::{BernoulliComponent, GaussianComponent, GmDensity, MbDensity, StateVector};

/// `r' = p_S r` per component, spatial densities predicted, births appended.
pub fn mb_predict(prior: &MbDensity, motion: &MotionModel, birth: &BirthModel) -> MbDensity {
    let ps = motion.survival_probability;
    let mut components: Vec<BernoulliComponent> = prior
        .components
        .iter()
        .map(|b| BernoulliComponent {
            existence: ps * b.existence,
            spatial: GmDensity::new(b.spatial.components.iter().map(|c| predict_gaussian(c, motion)).collect()),
        })
        .collect();
    components.extend(birth.bernoullis());
    MbDensity::new(components)
}

/// Legacy (missed-detection) tracks followed by one measurement-updated
/// track per measurement. The result is not pruned; see [`mb_step`].
pub fn mb_update(predicted: &MbDensity, measurements: &[Measurement], sensor: &SensorModel, params: &FilterParams) -> MbDensity {
    struct Track<'a> {
        r: f64,
        comps: &'a [GaussianComponent],
        pd: Vec<f64>,
        lin: Vec<Option<Linearized>>,
        mean_pd: f64,
    }

    let tracks: Vec<Track> = predicted
        .components
        .iter()
        .map(|b| {
            let comps = &b.spatial.components[..];
            let pd: Vec<f64> = comps.iter().map(|c| detection_probability(&c.mean, sensor)).collect();
            let mean_pd = comps.iter().zip(&pd).map(|(c, p)| c.weight * p).sum::<f64>();
            let lin = comps
                .iter()
                .zip(&pd)
                .map(|(c, &p)| if p > 0.0 { Linearized::new(c, sensor) } else { None })
                .collect();
            Track {
                r: b.existence.clamp(0.0, params.max_existence),
                comps,
                pd,
                lin,
                mean_pd,
            }
        })
        .collect();

    let mut out = Vec::with_capacity(tracks.len() + measurements.len());
    for t in &tracks {
        let denom = 1.0 - t.r * t.mean_pd;
        let existence = if denom > 0.0 { t.r * (1.0 - t.mean_pd) / denom } else { 0.0 };
        let spatial = GmDensity::new(
            t.comps
                .iter()
                .zip(&t.pd)
                .map(|(c, p)| GaussianComponent {
                    weight: c.weight * (1.0 - p),
                    ..c.clone()
                })
                .collect(),
        );
        match spatial.normalized() {
            Some(spatial) => out.push(BernoulliComponent { existence, spatial }),
            // certain detection: the hypothesis cannot survive a miss
            None => out.push(BernoulliComponent {
                existence: 0.0,
                spatial: GmDensity::new(t.comps.to_vec()),
            }),
        }
    }

    let kappa = sensor.clutter_intensity();
    for z in measurements {
        let clutter = if z[1] <= sensor.fov_max() { kappa } else { 0.0 };
        let mut num = 0.0;
        let mut den = clutter;
        let mut spatial = Vec::new();
        for t in &tracks {
            if t.r <= 0.0 {
                continue;
            }
            let one_minus = 1.0 - t.r * t.mean_pd;
            let odds = t.r / (1.0 - t.r);
            let mut rho = 0.0;
            for (j, c) in t.comps.iter().enumerate() {
                let Some(l) = &t.lin[j] else { continue };
                if l.mahalanobis(z) > params.gate_threshold {
                    continue;
                }
                let q = c.weight * t.pd[j] * l.likelihood(z);
                if q > 0.0 {
                    rho += q;
                    spatial.push(l.updated(c, z, odds * q));
                }
            }
            if rho > 0.0 && one_minus > 0.0 {
                num += t.r * (1.0 - t.r) * rho / (one_minus * one_minus);
                den += t.r * rho / one_minus;
            }
        }
        if !(den > 0.0) || spatial.is_empty() {
            continue;
        }
        if let Some(spatial) = GmDensity::new(spatial).normalized() {
            out.push(BernoulliComponent {
                existence: (num / den).clamp(0.0, 1.0),
                spatial,
            });
        }
    }
    MbDensity::new(out)
}

/// Drops weak Bernoullis, prunes and merges each spatial mixture, and keeps
/// at most `max_bernoullis` components by descending existence.
pub fn mb_prune(density: &MbDensity, params: &FilterParams) -> MbDensity {
    let mut kept: Vec<BernoulliComponent> = density
        .components
        .iter()
        .filter(|b| b.existence >= params.existence_prune)
        .filter_map(|b| {
            let reduced = prune_merge_capped(
                &b.spatial,
                params.prune_threshold,
                params.merge_threshold,
                params.max_gaussians_per_bernoulli,
            );
            BernoulliComponent::normalized(b.existence, reduced)
        })
        .collect();
    if kept.len() > params.max_bernoullis {
        kept.sort_by(|a, b| b.existence.total_cmp(&a.existence));
        kept.truncate(params.max_bernoullis);
    }
    MbDensity::new(kept)
}

/// One predict/update/prune cycle of a local MB filter.
pub fn mb_step(
    prior: &MbDensity,
    measurements: &[Measurement],
    motion: &MotionModel,
    birth: &BirthModel,
    sensor: &SensorModel,
    params: &FilterParams,
) -> MbDensity {
    let predicted = mb_predict(prior, motion, birth);
    let updated = mb_update(&predicted, measurements, sensor, params);
    mb_prune(&updated, params)
}

/// `round(sum r)` estimates taken by descending existence (ties by index),
/// skipping components below `extraction_threshold`. Each estimate is the
/// mean of the heaviest Gaussian.
pub fn extract_mb_estimates(density: &MbDensity, params: &FilterParams) -> Vec<StateVector> {
    let total = density.mean_cardinality();
    let n = if total.is_finite() && total > 0.0 {
        libm::round(total) as usize
    } else {
        0
    };
    let mut order: Vec<usize> = (0..density.len()).collect();
    order.sort_by(|&a, &b| density.components[b].existence.total_cmp(&density.components[a].existence));
    order
        .into_iter()
        .filter(|&i| density.components[i].existence >= params.extraction_threshold)
        .take(n)
        .filter_map(|i| density.components[i].mode())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::measure;
    use crate::rfs::StateCovariance;
    use alloc::vec;
    use nalgebra::{Vector2, Vector4};

    fn sensor(pd: f64) -> SensorModel {
        SensorModel::new(Vector2::new(0.0, 0.0), [500.0, 800.0, 1200.0], [pd; 3], 5.0, 0.035, 20.0).unwrap()
    }

    fn bern(r: f64, x: f64, y: f64) -> BernoulliComponent {
        BernoulliComponent::try_new(
            r,
            GmDensity::single(
                StateVector::new(x, y, 0.0, 0.0),
                StateCovariance::from_diagonal(&Vector4::new(400.0, 400.0, 25.0, 25.0)),
            ),
        )
        .unwrap()
    }

    #[test]
    fn predict_scales_existence() {
        let prior = MbDensity::new(vec![bern(0.5, 100.0, 100.0)]);
        let m = MotionModel::constant_velocity(1.0, 0.1, 0.98).unwrap();
        let p = mb_predict(&prior, &m, &BirthModel::none());
        assert!((p.components[0].existence - 0.49).abs() < 1e-15);
        let p = mb_predict(&prior, &MotionModel::identity(1.0), &BirthModel::none());
        assert_eq!(p, prior);
    }

    #[test]
    fn certain_miss_and_blind_scan() {
        let prior = MbDensity::new(vec![bern(0.7, 300.0, 0.0)]);
        let p = FilterParams::default();
        let u = mb_update(&prior, &[], &sensor(1.0), &p);
        assert_eq!(u.components[0].existence, 0.0);
        let u = mb_update(&prior, &[], &sensor(0.0), &p);
        assert!((u.components[0].existence - 0.7).abs() < 1e-15);
    }

    #[test]
    fn co_located_measurement_raises_existence() {
        let s = sensor(0.9);
        let b = bern(0.5, 300.0, 400.0);
        let z = measure(&b.spatial.components[0].mean, &s).unwrap();
        let u = mb_update(&MbDensity::new(vec![b]), &[z], &s, &FilterParams::default());
        assert_eq!(u.len(), 2);
        assert!(u.components[1].existence > 0.5);
        assert!(u.components.iter().all(|c| (0.0..=1.0).contains(&c.existence)));
    }

    #[test]
    fn extraction_rounds_and_breaks_ties_by_index() {
        let p = FilterParams::default();
        let d = MbDensity::new(vec![bern(0.2, 0.0, 0.0), bern(0.2, 1.0, 0.0)]);
        assert!(extract_mb_estimates(&d, &p).is_empty());
        let d = MbDensity::new(vec![bern(0.95, 0.0, 0.0), bern(0.1, 1.0, 0.0), bern(0.9, 2.0, 0.0)]);
        let e = extract_mb_estimates(&d, &p);
        assert_eq!(e.len(), 2);
        assert_eq!((e[0][0], e[1][0]), (0.0, 2.0));
        let d = MbDensity::new(vec![bern(0.5, 0.0, 0.0), bern(0.5, 1.0, 0.0), bern(0.5, 2.0, 0.0)]);
        let e = extract_mb_estimates(&d, &p);
        assert_eq!(e.len(), 2);
        assert_eq!((e[0][0], e[1][0]), (0.0, 1.0));
    }

    #[test]
    fn prune_caps_and_drops() {
        let p = FilterParams {
            max_bernoullis: 2,
            ..FilterParams::default()
        };
        let d = MbDensity::new(vec![
            bern(1e-4, 0.0, 0.0),
            bern(0.3, 1.0, 0.0),
            bern(0.6, 2.0, 0.0),
            bern(0.2, 3.0, 0.0),
        ]);
        let out = mb_prune(&d, &p);
        let r: Vec<f64> = out.components.iter().map(|b| b.existence).collect();
        assert_eq!(r, vec![0.6, 0.3]);
    }
}

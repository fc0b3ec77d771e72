//! Arithmetic-average fusion of Poisson densities.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fusion::check_weights;
use crate::rfs::{mpp_decompose, GaussianComponent, GmDensity, MppDensity};
use crate::weights::{lookup_weight, WeightMap};

/// How each sensor's density is weighted.
#[derive(Debug, Clone, Copy)]
pub enum Weighting<'a> {
    /// Space-varying weights.
    Map(&'a WeightMap),
    /// One weight per sensor, summing to one.
    Scalar(&'a [f64]),
}

/// Per-sensor densities plus their weighting.
#[derive(Debug, Clone, Copy)]
pub struct FusionInputPhd<'a> {
    pub densities: &'a [MppDensity],
    pub weighting: Weighting<'a>,
}

impl<'a> FusionInputPhd<'a> {
    pub fn with_map(densities: &'a [MppDensity], map: &'a WeightMap) -> Self {
        Self {
            densities,
            weighting: Weighting::Map(map),
        }
    }

    pub fn with_weights(densities: &'a [MppDensity], weights: &'a [f64]) -> Self {
        Self {
            densities,
            weighting: Weighting::Scalar(weights),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.densities.is_empty() {
            return Err(Error::InvalidArgument("fusion needs at least one sensor"));
        }
        match self.weighting {
            Weighting::Map(map) if map.sensor_count() != self.densities.len() => {
                Err(Error::InvalidArgument("weight map sensor count differs from density count"))
            }
            Weighting::Scalar(w) if w.len() != self.densities.len() => Err(Error::InvalidArgument("one weight per sensor is required")),
            Weighting::Scalar(w) => check_weights(w),
            _ => Ok(()),
        }
    }

    /// Weight applied to component `c` of sensor `i`.
    fn weight_of(&self, i: usize, c: &GaussianComponent) -> f64 {
        match self.weighting {
            Weighting::Map(map) => lookup_weight(map, i, &c.mean),
            Weighting::Scalar(w) => w[i],
        }
    }
}

/// Weighted arithmetic average `sum_i w_i v_i` with constant weights.
pub fn waa_fuse_phd(densities: &[MppDensity], weights: &[f64]) -> Result<MppDensity> {
    hmphd_fuse(&FusionInputPhd::with_weights(densities, weights))
}

/// Space-varying average: every component of sensor `i` is scaled by the
/// sensor's weight at the component mean, and the scaled mixtures are
/// concatenated in sensor order.
///
/// The result is not pruned or merged.
pub fn hmphd_fuse(input: &FusionInputPhd) -> Result<MppDensity> {
    input.validate()?;
    let total: usize = input.densities.iter().map(|d| d.intensity.len()).sum();
    let mut out = Vec::with_capacity(total);
    for (i, d) in input.densities.iter().enumerate() {
        for c in &d.intensity.components {
            let w = input.weight_of(i, c);
            out.push(GaussianComponent {
                weight: w * c.weight,
                ..c.clone()
            });
        }
    }
    Ok(MppDensity::new(GmDensity::new(out)))
}

/// Fused mean cardinality `sum_i sum_j w_i(m_ij) a_ij`, summed in the same
/// order as the mass of [`hmphd_fuse`]'s output.
pub fn fused_cardinality(input: &FusionInputPhd) -> Result<f64> {
    input.validate()?;
    let mut total = 0.0;
    for (i, d) in input.densities.iter().enumerate() {
        for c in &d.intensity.components {
            total += input.weight_of(i, c) * c.weight;
        }
    }
    Ok(total)
}

/// Cell-exact fusion: each sensor's intensity is restricted to every cell,
/// scaled by that cell's weight, and the pieces are united. Slow; intended as
/// a reference for [`hmphd_fuse`].
pub fn hmphd_fuse_exact(densities: &[MppDensity], map: &WeightMap) -> Result<MppDensity> {
    FusionInputPhd::with_map(densities, map).validate()?;
    let mut out = Vec::new();
    for (i, d) in densities.iter().enumerate() {
        for (m, part) in mpp_decompose(d, map.partition()).into_iter().enumerate() {
            let w = map.weight(i, m);
            if w == 0.0 {
                continue;
            }
            out.extend(
                part.intensity
                    .components
                    .into_iter()
                    .map(|c| GaussianComponent { weight: w * c.weight, ..c }),
            );
        }
    }
    Ok(MppDensity::new(GmDensity::new(out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::SpacePartition;
    use crate::rfs::{StateCovariance, StateVector};
    use alloc::vec;

    fn mpp(items: &[(f64, f64, f64)]) -> MppDensity {
        MppDensity::new(GmDensity::new(
            items
                .iter()
                .map(|&(w, x, y)| GaussianComponent::new(w, StateVector::new(x, y, 0.0, 0.0), StateCovariance::identity()))
                .collect(),
        ))
    }

    fn two_cell_map() -> WeightMap {
        let p = SpacePartition::new([0.0, 0.0], [20.0, 10.0], [2, 1]).unwrap();
        WeightMap::from_cells(
            p,
            2,
            vec![(vec![0.8, 0.2], vec![4.0, 1.0], false), (vec![0.3, 0.7], vec![3.0, 7.0], false)],
        )
        .unwrap()
    }

    #[test]
    fn single_sensor_identity() {
        let d = vec![mpp(&[(0.7, 1.0, 2.0), (1.3, 5.0, 5.0)])];
        let p = SpacePartition::new([0.0, 0.0], [10.0, 10.0], [2, 2]).unwrap();
        let map = WeightMap::uniform(p, 1).unwrap();
        assert_eq!(hmphd_fuse(&FusionInputPhd::with_map(&d, &map)).unwrap(), d[0]);
    }

    #[test]
    fn hand_case_two_sensors() {
        let d = vec![mpp(&[(1.0, 5.0, 5.0)]), mpp(&[(1.0, 5.0, 5.0)])];
        let map = two_cell_map();
        let input = FusionInputPhd::with_map(&d, &map);
        let f = hmphd_fuse(&input).unwrap();
        let w: Vec<f64> = f.intensity.components.iter().map(|c| c.weight).collect();
        assert_eq!(w, vec![0.8, 0.2]);
        assert_eq!(f.mean_cardinality(), 1.0);
        assert_eq!(fused_cardinality(&input).unwrap(), 1.0);
    }

    #[test]
    fn waa_cases() {
        let a = mpp(&[(10.0, 0.0, 0.0)]);
        let b = mpp(&[(6.0, 3.0, 0.0)]);
        let f = waa_fuse_phd(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        assert_eq!(f.mean_cardinality(), 8.0);
        let f = waa_fuse_phd(&[a.clone(), b], &[1.0, 0.0]).unwrap();
        assert_eq!(f.intensity.components[0], a.intensity.components[0]);
        assert!(matches!(waa_fuse_phd(&[a.clone(), a], &[0.6, 0.6]), Err(Error::WeightSum { .. })));
        assert!(hmphd_fuse(&FusionInputPhd::with_weights(&[], &[])).is_err());
    }

    #[test]
    fn zero_weight_region_contributes_nothing() {
        let p = SpacePartition::new([0.0, 0.0], [20.0, 10.0], [2, 1]).unwrap();
        let map = WeightMap::from_cells(
            p,
            2,
            vec![(vec![0.0, 1.0], vec![0.0, 1.0], false), (vec![1.0, 0.0], vec![1.0, 0.0], false)],
        )
        .unwrap();
        let d = vec![mpp(&[(2.0, 5.0, 5.0)]), mpp(&[(0.0, 15.0, 5.0)])];
        assert_eq!(fused_cardinality(&FusionInputPhd::with_map(&d, &map)).unwrap(), 0.0);
    }

    #[test]
    fn exact_path_agrees_on_concentrated_components() {
        let map = two_cell_map();
        let d = vec![mpp(&[(1.0, 5.0, 5.0), (0.5, 15.0, 5.0)]), mpp(&[(2.0, 15.0, 4.0)])];
        let approx = hmphd_fuse(&FusionInputPhd::with_map(&d, &map)).unwrap();
        let exact = hmphd_fuse_exact(&d, &map).unwrap();
        assert!((approx.mean_cardinality() - exact.mean_cardinality()).abs() < 1e-5);
    }
}

//! Estimation-uncertainty functions and space-varying fusion weights.
//!
//! The uncertainty of a sensor about an object at `x` combines an accuracy
//! term (determinant of the converted measurement covariance at the ideal
//! measurement of `x`) and a cardinality term (clutter density over detection
//! probability). Confidence is its reciprocal; per-cell weights are
//! confidences normalized across sensors.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::{converted_covariance, detection_probability, measure, Measurement, SensorModel};
use crate::partition::SpacePartition;
use crate::rfs::StateVector;

/// Trade-off between the accuracy (`u1`) and cardinality (`u2`) terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EufParams {
    pub u1: f64,
    pub u2: f64,
}

impl Default for EufParams {
    fn default() -> Self {
        Self { u1: 1.0, u2: 800.0 }
    }
}

impl EufParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.u1 >= 0.0) || !(self.u2 >= 0.0) {
            return Err(Error::InvalidArgument("u1 and u2 must be >= 0"));
        }
        Ok(())
    }
}

/// Accuracy uncertainty: determinant of the converted covariance evaluated at
/// the noise-free measurement of `x`.
pub fn aeuf(x: &StateVector, sensor: &SensorModel) -> Result<f64> {
    let z = measure(x, sensor)?;
    converted_det(&z, sensor)
}

fn converted_det(z: &Measurement, sensor: &SensorModel) -> Result<f64> {
    let r = converted_covariance(z, sensor.sigma_r, sensor.sigma_theta)?;
    Ok(r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)])
}

/// Clutter intensity per unit area inside the FoV disc.
pub fn clutter_area_density(sensor: &SensorModel) -> f64 {
    let rmax = sensor.fov_max();
    sensor.clutter_rate / (PI * rmax * rmax)
}

/// Cardinality uncertainty; `+inf` outside the FoV (or where `p_D = 0`).
pub fn ceuf(x: &StateVector, sensor: &SensorModel) -> f64 {
    let pd = detection_probability(x, sensor);
    if !(pd > 0.0) {
        return f64::INFINITY;
    }
    clutter_area_density(sensor) / pd
}

/// `u1 * aeuf + u2 * ceuf`; `+inf` iff the cardinality term is infinite.
///
/// At the sensor position itself the accuracy term takes its zero-range limit.
pub fn euf(x: &StateVector, sensor: &SensorModel, params: &EufParams) -> f64 {
    let c = ceuf(x, sensor);
    if c.is_infinite() {
        return f64::INFINITY;
    }
    let a = match aeuf(x, sensor) {
        Ok(a) => a,
        Err(_) => converted_det(&Measurement::new(0.0, 0.0), sensor).unwrap_or(0.0),
    };
    let cardinality = if params.u2 == 0.0 { 0.0 } else { params.u2 * c };
    let accuracy = if params.u1 == 0.0 { 0.0 } else { params.u1 * a };
    accuracy + cardinality
}

/// Information confidence coefficient `1 / euf`; exactly 0 for infinite EUF.
pub fn icc(x: &StateVector, sensor: &SensorModel, params: &EufParams) -> f64 {
    let e = euf(x, sensor, params);
    if e.is_infinite() {
        0.0
    } else {
        1.0 / e
    }
}

/// Normalizes confidences to weights. Returns `(weights, flagged)` where
/// `flagged` marks an all-zero input, which yields uniform weights.
pub fn normalize_weights(iccs: &[f64]) -> (Vec<f64>, bool) {
    let total: f64 = iccs.iter().sum();
    if iccs.is_empty() {
        return (Vec::new(), true);
    }
    if !(total > 0.0) || !total.is_finite() {
        let u = 1.0 / iccs.len() as f64;
        return (alloc::vec![u; iccs.len()], true);
    }
    (iccs.iter().map(|v| v / total).collect(), false)
}

/// Per-cell confidences and weights at a cell's evaluation point (its
/// center, zero velocity).
pub fn cell_weights(sensors: &[SensorModel], center: [f64; 2], params: &EufParams) -> (Vec<f64>, Vec<f64>, bool) {
    let x = StateVector::new(center[0], center[1], 0.0, 0.0);
    let iccs: Vec<f64> = sensors.iter().map(|s| icc(&x, s, params)).collect();
    let (w, flagged) = normalize_weights(&iccs);
    (w, iccs, flagged)
}

/// Per-sensor, per-cell fusion weights over a space partition.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    partition: SpacePartition,
    sensors: usize,
    /// `weights[cell * sensors + i]`
    weights: Vec<f64>,
    iccs: Vec<f64>,
    flagged: Vec<bool>,
}

impl WeightMap {
    /// Assembles a map from per-cell rows, ordered by cell index.
    pub fn from_cells(partition: SpacePartition, sensors: usize, cells: Vec<(Vec<f64>, Vec<f64>, bool)>) -> Result<Self> {
        if sensors == 0 {
            return Err(Error::InvalidArgument("weight map needs at least one sensor"));
        }
        if cells.len() != partition.cell_count() {
            return Err(Error::InvalidArgument("one row per partition cell is required"));
        }
        let mut weights = Vec::with_capacity(cells.len() * sensors);
        let mut iccs = Vec::with_capacity(cells.len() * sensors);
        let mut flagged = Vec::with_capacity(cells.len());
        for (w, c, f) in cells {
            if w.len() != sensors || c.len() != sensors {
                return Err(Error::InvalidArgument("row length must equal the sensor count"));
            }
            weights.extend(w);
            iccs.extend(c);
            flagged.push(f);
        }
        Ok(Self {
            partition,
            sensors,
            weights,
            iccs,
            flagged,
        })
    }

    /// Spatially constant weights (the homogeneous special case).
    pub fn constant(partition: SpacePartition, weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("constant weights must be non-empty and >= 0"));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum { sum });
        }
        let n = partition.cell_count();
        let cells = (0..n).map(|_| (weights.to_vec(), weights.to_vec(), false)).collect();
        Self::from_cells(partition, weights.len(), cells)
    }

    /// Uniform `1 / n` weights everywhere.
    pub fn uniform(partition: SpacePartition, sensors: usize) -> Result<Self> {
        if sensors == 0 {
            return Err(Error::InvalidArgument("weight map needs at least one sensor"));
        }
        Self::constant(partition, &alloc::vec![1.0 / sensors as f64; sensors])
    }

    pub fn partition(&self) -> &SpacePartition {
        &self.partition
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors
    }

    pub fn weight(&self, sensor: usize, cell: usize) -> f64 {
        self.weights[cell * self.sensors + sensor]
    }

    pub fn icc(&self, sensor: usize, cell: usize) -> f64 {
        self.iccs[cell * self.sensors + sensor]
    }

    /// All sensor weights of one cell.
    pub fn cell_row(&self, cell: usize) -> &[f64] {
        &self.weights[cell * self.sensors..(cell + 1) * self.sensors]
    }

    /// `true` where every sensor had zero confidence.
    pub fn is_flagged(&self, cell: usize) -> bool {
        self.flagged[cell]
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|f| **f).count()
    }
}

/// Evaluates every cell serially. See [`cell_weights`] for a per-cell entry
/// point suitable for parallel construction.
pub fn build_weight_map(sensors: &[SensorModel], partition: &SpacePartition, params: &EufParams) -> Result<WeightMap> {
    if sensors.is_empty() {
        return Err(Error::InvalidArgument("weight map needs at least one sensor"));
    }
    let cells = (0..partition.cell_count())
        .map(|m| {
            let c = partition.cell_center(m).expect("cell index in range");
            cell_weights(sensors, [c[0], c[1]], params)
        })
        .collect();
    WeightMap::from_cells(partition.clone(), sensors.len(), cells)
}

/// Weight of `sensor` in the cell containing the position of `x` (clamped to
/// the grid).
pub fn lookup_weight(map: &WeightMap, sensor: usize, x: &StateVector) -> f64 {
    let cell = map.partition.locate(x[0], x[1]);
    map.weight(sensor, cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::Vector2;

    fn sensor_at(x: f64, y: f64) -> SensorModel {
        SensorModel::new(
            Vector2::new(x, y),
            [500.0, 800.0, 1200.0],
            [0.98, 0.8, 0.6],
            5.0,
            2f64.to_radians(),
            20.0,
        )
        .unwrap()
    }

    fn at(x: f64, y: f64) -> StateVector {
        StateVector::new(x, y, 0.0, 0.0)
    }

    #[test]
    fn aeuf_grows_with_range() {
        let s = sensor_at(0.0, 0.0);
        let mut last = 0.0;
        for k in 1..=48 {
            let r = 50.0 * k as f64;
            let v = aeuf(&at(r * 0.6, r * 0.8), &s).unwrap();
            assert!(v > last);
            last = v;
        }
        assert!(aeuf(&at(0.0, 0.0), &s).is_err());
    }

    #[test]
    fn aeuf_half_turn_symmetry() {
        let s = sensor_at(0.0, 0.0);
        let a = aeuf(&at(300.0, 700.0), &s).unwrap();
        let b = aeuf(&at(-300.0, -700.0), &s).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn ceuf_tiers_and_fov() {
        let s = sensor_at(0.0, 0.0);
        assert!(ceuf(&at(1300.0, 0.0), &s).is_infinite());
        let ratio = ceuf(&at(1100.0, 0.0), &s) / ceuf(&at(400.0, 0.0), &s);
        assert!((ratio - 0.98 / 0.6).abs() < 1e-12);
        let quiet = SensorModel { clutter_rate: 0.0, ..s };
        assert_eq!(ceuf(&at(100.0, 0.0), &quiet), 0.0);
    }

    #[test]
    fn euf_decouples() {
        let s = sensor_at(0.0, 0.0);
        let x = at(200.0, 250.0);
        let a = euf(&x, &s, &EufParams { u1: 1.0, u2: 0.0 });
        assert_eq!(a, aeuf(&x, &s).unwrap());
        let c = euf(&x, &s, &EufParams { u1: 0.0, u2: 3.0 });
        assert_eq!(c, 3.0 * clutter_area_density(&s) / 0.98);
        assert_eq!(icc(&at(5000.0, 0.0), &s, &EufParams::default()), 0.0);
    }

    #[test]
    fn normalization_cases() {
        let (w, f) = normalize_weights(&[1.0, 1.0, 1.0]);
        assert!(!f);
        assert!(w.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(normalize_weights(&[2.0, 1.0, 1.0]).0, vec![0.5, 0.25, 0.25]);
        assert_eq!(normalize_weights(&[0.7, 0.0, 0.0]).0, vec![1.0, 0.0, 0.0]);
        let (w, f) = normalize_weights(&[0.0, 0.0]);
        assert!(f);
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn map_cases() {
        let p = SpacePartition::with_cell_size([-1000.0; 2], [1000.0; 2], [100.0; 2]).unwrap();
        let one = build_weight_map(&[sensor_at(0.0, 0.0)], &p, &EufParams::default()).unwrap();
        for m in 0..p.cell_count() {
            if !one.is_flagged(m) {
                assert_eq!(one.weight(0, m), 1.0);
            }
        }
        let twin = build_weight_map(&[sensor_at(10.0, 0.0), sensor_at(10.0, 0.0)], &p, &EufParams::default()).unwrap();
        for m in 0..p.cell_count() {
            assert_eq!(twin.cell_row(m), &[0.5, 0.5]);
        }
    }

    #[test]
    fn lookup_on_edges_and_outside() {
        let p = SpacePartition::new([0.0, 0.0], [20.0, 10.0], [2, 1]).unwrap();
        let map = WeightMap::from_cells(
            p,
            2,
            vec![(vec![0.9, 0.1], vec![9.0, 1.0], false), (vec![0.2, 0.8], vec![2.0, 8.0], false)],
        )
        .unwrap();
        assert_eq!(lookup_weight(&map, 0, &at(5.0, 5.0)), 0.9);
        assert_eq!(lookup_weight(&map, 0, &at(10.0, 5.0)), 0.9);
        assert_eq!(lookup_weight(&map, 1, &at(15.0, 5.0)), 0.8);
        assert_eq!(lookup_weight(&map, 1, &at(500.0, -40.0)), 0.8);
        assert_eq!(lookup_weight(&map, 0, &at(-500.0, 40.0)), 0.9);
    }
}

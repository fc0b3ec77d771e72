//! Object motion and range-bearing sensor models.

use core::f64::consts::PI;

use nalgebra::{Matrix2, Matrix2x4, Vector2};

use crate::error::{Error, Result};
use crate::rfs::{StateCovariance, StateVector};

/// `[bearing (rad), range (m)]`; bearing is `atan2(dx, dy)`, i.e. measured
/// from the +y axis towards +x.
pub type Measurement = Vector2<f64>;

/// Linear-Gaussian constant-velocity motion with survival probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub transition: StateCovariance,
    pub process_noise: StateCovariance,
    pub sampling_interval: f64,
    pub survival_probability: f64,
}

impl MotionModel {
    /// `F = [[1, T], [0, 1]] (x) I2`, `Q = sigma_v^2 [[T^3/3, T^2/2], [T^2/2, T]] (x) I2`.
    pub fn constant_velocity(sampling_interval: f64, sigma_v: f64, survival_probability: f64) -> Result<Self> {
        if !(sampling_interval > 0.0) || !(sigma_v >= 0.0) {
            return Err(Error::InvalidArgument("sampling interval must be > 0 and sigma_v >= 0"));
        }
        if !(0.0..=1.0).contains(&survival_probability) {
            return Err(Error::InvalidArgument("survival probability must lie in [0, 1]"));
        }
        let t = sampling_interval;
        let mut f = StateCovariance::identity();
        f[(0, 2)] = t;
        f[(1, 3)] = t;
        let q2 = sigma_v * sigma_v;
        let mut q = StateCovariance::zeros();
        for a in 0..2 {
            q[(a, a)] = q2 * t * t * t / 3.0;
            q[(a, a + 2)] = q2 * t * t / 2.0;
            q[(a + 2, a)] = q2 * t * t / 2.0;
            q[(a + 2, a + 2)] = q2 * t;
        }
        Ok(Self {
            transition: f,
            process_noise: q,
            sampling_interval,
            survival_probability,
        })
    }

    /// Identity dynamics, no noise.
    pub fn identity(survival_probability: f64) -> Self {
        Self {
            transition: StateCovariance::identity(),
            process_noise: StateCovariance::zeros(),
            sampling_interval: 1.0,
            survival_probability,
        }
    }

    pub fn predict_mean(&self, x: &StateVector) -> StateVector {
        self.transition * x
    }
}

/// Range-bearing sensor with a disc field of view and tiered detection.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub position: Vector2<f64>,
    /// `(inner, middle, max)` range thresholds in metres.
    pub range_tiers: [f64; 3],
    /// Detection probability inside each tier.
    pub tier_pd: [f64; 3],
    /// Expected clutter count per scan.
    pub clutter_rate: f64,
    pub sigma_theta: f64,
    pub sigma_r: f64,
}

impl SensorModel {
    pub fn new(
        position: Vector2<f64>,
        range_tiers: [f64; 3],
        tier_pd: [f64; 3],
        clutter_rate: f64,
        sigma_theta: f64,
        sigma_r: f64,
    ) -> Result<Self> {
        let s = Self {
            position,
            range_tiers,
            tier_pd,
            clutter_rate,
            sigma_theta,
            sigma_r,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let [u1, u2, umax] = self.range_tiers;
        if !(0.0 < u1 && u1 <= u2 && u2 <= umax) {
            return Err(Error::InvalidArgument("range tiers must satisfy 0 < inner <= middle <= max"));
        }
        if self.tier_pd.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("tier detection probabilities must lie in [0, 1]"));
        }
        if !(self.clutter_rate >= 0.0) {
            return Err(Error::InvalidArgument("clutter rate must be >= 0"));
        }
        if !(self.sigma_theta >= 0.0) || !(self.sigma_r >= 0.0) {
            return Err(Error::InvalidArgument("noise standard deviations must be >= 0"));
        }
        Ok(())
    }

    pub fn fov_max(&self) -> f64 {
        self.range_tiers[2]
    }

    pub fn noise_covariance(&self) -> Matrix2<f64> {
        Matrix2::new(self.sigma_theta * self.sigma_theta, 0.0, 0.0, self.sigma_r * self.sigma_r)
    }

    /// Uniform clutter intensity per unit of `(rad x m)` over the FoV.
    pub fn clutter_intensity(&self) -> f64 {
        self.clutter_rate / (2.0 * PI * self.fov_max())
    }

    pub fn distance(&self, x: &StateVector) -> f64 {
        libm::hypot(x[0] - self.position[0], x[1] - self.position[1])
    }

    /// Position of a noise-free measurement `z`.
    pub fn polar_to_cartesian(&self, z: &Measurement) -> Vector2<f64> {
        Vector2::new(self.position[0] + z[1] * libm::sin(z[0]), self.position[1] + z[1] * libm::cos(z[0]))
    }
}

/// Noise-free measurement of a state.
pub fn measure(state: &StateVector, sensor: &SensorModel) -> Result<Measurement> {
    let dx = state[0] - sensor.position[0];
    let dy = state[1] - sensor.position[1];
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    let mut angle = libm::atan2(dx, dy);
    if angle == -PI {
        angle = PI;
    }
    Ok(Measurement::new(angle, libm::hypot(dx, dy)))
}

/// Jacobian of [`measure`] with respect to the state.
pub fn measure_jacobian(state: &StateVector, sensor: &SensorModel) -> Result<Matrix2x4<f64>> {
    let dx = state[0] - sensor.position[0];
    let dy = state[1] - sensor.position[1];
    let r2 = dx * dx + dy * dy;
    if !(r2 > 0.0) {
        return Err(Error::DegenerateGeometry);
    }
    let r = libm::sqrt(r2);
    Ok(Matrix2x4::new(dy / r2, -dx / r2, 0.0, 0.0, dx / r, dy / r, 0.0, 0.0))
}

/// Covariance of a polar measurement converted to Cartesian coordinates,
/// conditioned on `z = [theta, r]` (Lerro & Bar-Shalom, 13a-13c).
///
/// The angle is interpreted in the usual polar convention (`x = r cos theta`).
/// Fed a sensor bearing instead, the result is the same matrix with the axes
/// swapped; the determinant is unaffected.
pub fn converted_covariance(z: &Measurement, sigma_r: f64, sigma_theta: f64) -> Result<Matrix2<f64>> {
    let theta = z[0];
    let r = z[1];
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument("range must be >= 0"));
    }
    if !(sigma_r >= 0.0) || !(sigma_theta >= 0.0) {
        return Err(Error::InvalidArgument("noise standard deviations must be >= 0"));
    }
    let s2 = sigma_theta * sigma_theta;
    let sr2 = sigma_r * sigma_r;
    let r2 = r * r;
    let e2 = libm::exp(-2.0 * s2);
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    let (c2, sn2) = (cos * cos, sin * sin);
    let ch2 = libm::cosh(2.0 * s2);
    let ch1 = libm::cosh(s2);
    let sh2 = libm::sinh(2.0 * s2);
    let sh1 = libm::sinh(s2);

    let r11 = r2 * e2 * (c2 * (ch2 - ch1) + sn2 * (sh2 - sh1)) + sr2 * e2 * (c2 * (2.0 * ch2 - ch1) + sn2 * (2.0 * sh2 - sh1));
    let r22 = r2 * e2 * (sn2 * (ch2 - ch1) + c2 * (sh2 - sh1)) + sr2 * e2 * (sn2 * (2.0 * ch2 - ch1) + c2 * (2.0 * sh2 - sh1));
    let r12 = sin * cos * libm::exp(-4.0 * s2) * (sr2 + (1.0 - libm::exp(s2)) * (r2 + sr2));
    Ok(Matrix2::new(r11, r12, r12, r22))
}

/// 1 inside the FoV disc (boundary included), else 0.
pub fn fov_indicator(state: &StateVector, sensor: &SensorModel) -> u8 {
    u8::from(sensor.distance(state) <= sensor.fov_max())
}

/// Tiered detection probability; 0 outside the FoV. Tier edges resolve to the
/// inner (higher) probability.
pub fn detection_probability(state: &StateVector, sensor: &SensorModel) -> f64 {
    let d = sensor.distance(state);
    let [u1, u2, umax] = sensor.range_tiers;
    if d <= u1 {
        sensor.tier_pd[0]
    } else if d <= u2 {
        sensor.tier_pd[1]
    } else if d <= umax {
        sensor.tier_pd[2]
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sensor() -> SensorModel {
        SensorModel::new(
            Vector2::new(0.0, 0.0),
            [500.0, 800.0, 1200.0],
            [0.98, 0.8, 0.6],
            5.0,
            2f64.to_radians(),
            20.0,
        )
        .unwrap()
    }

    fn at(x: f64, y: f64) -> StateVector {
        StateVector::new(x, y, 3.0, -4.0)
    }

    #[test]
    fn measure_axis_cases() {
        let s = sensor();
        let z = measure(&at(0.0, 1000.0), &s).unwrap();
        assert_eq!(z, Measurement::new(0.0, 1000.0));
        let z = measure(&at(1000.0, 0.0), &s).unwrap();
        assert!((z[0] - PI / 2.0).abs() < 1e-15);
        assert_eq!(z[1], 1000.0);
        let z = measure(&at(300.0, 400.0), &s).unwrap();
        assert_eq!(z[1], 500.0);
        assert!((z[0] - libm::atan2(300.0, 400.0)).abs() < 1e-15);
        // due south maps to +pi, never -pi
        assert_eq!(measure(&at(0.0, -5.0), &s).unwrap()[0], PI);
        assert_eq!(measure(&at(0.0, 0.0), &s), Err(Error::DegenerateGeometry));
    }

    #[test]
    fn jacobian_axis_cases() {
        let s = sensor();
        let j = measure_jacobian(&at(1000.0, 0.0), &s).unwrap();
        assert!((j[(1, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(j[(1, 1)], 0.0);
        for c in 2..4 {
            assert_eq!(j[(0, c)], 0.0);
            assert_eq!(j[(1, c)], 0.0);
        }
        assert!(measure_jacobian(&at(0.0, 0.0), &s).is_err());
    }

    #[test]
    fn polar_round_trip() {
        let s = SensorModel {
            position: Vector2::new(-300.0, 750.0),
            ..sensor()
        };
        for &(r, b) in &[(1.5, 0.3), (100.0, -2.9), (2400.0, 3.1), (700.0, PI)] {
            let z = Measurement::new(b, r);
            let p = s.polar_to_cartesian(&z);
            let back = measure(&at(p[0], p[1]), &s).unwrap();
            assert!((back[1] - r).abs() < 1e-9);
            assert!((crate::math::wrap_angle(back[0] - b)).abs() < 1e-9);
        }
    }

    #[test]
    fn converted_covariance_symmetries() {
        let z0 = Measurement::new(0.0, 1000.0);
        let r = converted_covariance(&z0, 20.0, 0.035).unwrap();
        assert_eq!(r[(0, 1)], 0.0);
        let z45 = Measurement::new(PI / 4.0, 1000.0);
        let r = converted_covariance(&z45, 20.0, 0.035).unwrap();
        assert!((r[(0, 0)] - r[(1, 1)]).abs() < 1e-9 * r[(0, 0)]);
        assert_eq!(r[(0, 1)], r[(1, 0)]);
        assert!(converted_covariance(&Measurement::new(0.0, -1.0), 20.0, 0.035).is_err());
    }

    #[test]
    fn fov_boundary_inclusive() {
        let s = sensor();
        assert_eq!(fov_indicator(&at(0.0, 0.0), &s), 1);
        assert_eq!(fov_indicator(&at(1200.0, 0.0), &s), 1);
        assert_eq!(fov_indicator(&at(1201.0, 0.0), &s), 0);
    }

    #[test]
    fn detection_tiers() {
        let s = sensor();
        assert_eq!(detection_probability(&at(400.0, 0.0), &s), 0.98);
        assert_eq!(detection_probability(&at(700.0, 0.0), &s), 0.8);
        assert_eq!(detection_probability(&at(1100.0, 0.0), &s), 0.6);
        assert_eq!(detection_probability(&at(1300.0, 0.0), &s), 0.0);
        // ties go to the inner tier
        assert_eq!(detection_probability(&at(500.0, 0.0), &s), 0.98);
        assert_eq!(detection_probability(&at(0.0, 800.0), &s), 0.8);
    }

    #[test]
    fn cv_model_structure() {
        let m = MotionModel::constant_velocity(1.0, 0.1, 0.98).unwrap();
        let x = m.predict_mean(&StateVector::new(1.0, 2.0, 3.0, 4.0));
        assert_eq!(x, StateVector::new(4.0, 6.0, 3.0, 4.0));
        assert!((m.process_noise[(0, 0)] - 0.01 / 3.0).abs() < 1e-15);
        assert!((m.process_noise[(1, 3)] - 0.005).abs() < 1e-15);
        assert!((m.process_noise[(3, 3)] - 0.01).abs() < 1e-15);
        assert_eq!(m.process_noise[(0, 1)], 0.0);
        assert!(MotionModel::constant_velocity(1.0, 0.1, 1.5).is_err());
    }

    #[test]
    fn sensor_validation() {
        let mut s = sensor();
        s.range_tiers = [1300.0, 800.0, 1200.0];
        assert!(s.validate().is_err());
        let mut s = sensor();
        s.tier_pd[1] = 1.2;
        assert!(s.validate().is_err());
    }
}

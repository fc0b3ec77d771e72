//! Random-finite-set densities in Gaussian-mixture form.
//!
//! A Poisson (MPP) multi-object density is carried entirely by its intensity;
//! a multi-Bernoulli density by its list of `(existence, spatial density)`
//! pairs. States are `[px, py, vx, vy]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::math::gaussian_rectangle_mass;
use crate::partition::SpacePartition;

pub type StateVector = Vector4<f64>;
pub type StateCovariance = Matrix4<f64>;

/// `(A + A^T) / 2`
pub fn symmetrize(m: &StateCovariance) -> StateCovariance {
    (m + m.transpose()) * 0.5
}

/// One weighted Gaussian term of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl GaussianComponent {
    /// Builds a component, symmetrizing the covariance.
    pub fn new(weight: f64, mean: StateVector, covariance: StateCovariance) -> Self {
        Self {
            weight,
            mean,
            covariance: symmetrize(&covariance),
        }
    }

    /// Builds a component after checking weight sign, symmetry and PSD-ness.
    pub fn try_new(weight: f64, mean: StateVector, covariance: StateCovariance) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument("component weight must be finite and >= 0"));
        }
        let asym = (covariance - covariance.transpose()).abs().max();
        let scale = covariance.abs().max().max(f64::MIN_POSITIVE);
        if asym > 1e-10 * scale {
            return Err(Error::InvalidArgument("covariance is not symmetric"));
        }
        let c = symmetrize(&covariance);
        let trace = c.trace();
        let min_eig = c.symmetric_eigenvalues().min();
        if min_eig < -1e-9 * trace.abs() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            weight,
            mean,
            covariance: c,
        })
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.mean[0], self.mean[1])
    }

    pub fn position_covariance(&self) -> Matrix2<f64> {
        self.covariance.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Weighted density at a full state.
    pub fn eval(&self, x: &StateVector) -> f64 {
        self.weight * gaussian_pdf4(x, &self.mean, &self.covariance)
    }

    /// Weighted position-marginal density at `(px, py)`.
    pub fn eval_position(&self, p: &Vector2<f64>) -> f64 {
        self.weight * gaussian_pdf2(p, &self.position(), &self.position_covariance())
    }

    /// Probability mass of this (unweighted) Gaussian inside a partition cell.
    pub fn cell_mass(&self, partition: &SpacePartition, cell: usize) -> Result<f64> {
        let (x, y) = partition.cell_region(cell)?;
        let c = self.position_covariance();
        Ok(gaussian_rectangle_mass(
            [self.mean[0], self.mean[1]],
            [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
            x,
            y,
        ))
    }
}

pub(crate) fn gaussian_pdf4(x: &StateVector, mean: &StateVector, cov: &StateCovariance) -> f64 {
    match cov.cholesky() {
        Some(ch) => {
            let d = x - mean;
            let sol = ch.solve(&d);
            let maha = d.dot(&sol);
            let l = ch.l_dirty();
            let det_sqrt = l[(0, 0)] * l[(1, 1)] * l[(2, 2)] * l[(3, 3)];
            libm::exp(-0.5 * maha) / (4.0 * PI * PI * det_sqrt)
        }
        None => 0.0,
    }
}

pub(crate) fn gaussian_pdf2(x: &Vector2<f64>, mean: &Vector2<f64>, cov: &Matrix2<f64>) -> f64 {
    let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
    if !(det > 0.0) {
        return 0.0;
    }
    let d = x - mean;
    let inv = Matrix2::new(cov[(1, 1)], -cov[(0, 1)], -cov[(1, 0)], cov[(0, 0)]) / det;
    let maha = d.dot(&(inv * d));
    libm::exp(-0.5 * maha) / (2.0 * PI * libm::sqrt(det))
}

/// Weighted sum of Gaussians: an intensity function or (mass 1) a spatial density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GmDensity {
    pub components: Vec<GaussianComponent>,
}

impl GmDensity {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(mean: StateVector, covariance: StateCovariance) -> Self {
        Self::new(alloc::vec![GaussianComponent::new(1.0, mean, covariance)])
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Total weight.
    pub fn mass(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn eval(&self, x: &StateVector) -> f64 {
        self.components.iter().map(|c| c.eval(x)).sum()
    }

    /// Position-marginal evaluation (velocity integrated out).
    pub fn eval_position(&self, p: &Vector2<f64>) -> f64 {
        self.components.iter().map(|c| c.eval_position(p)).sum()
    }

    /// Returns a copy with weights scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.components
                .iter()
                .map(|c| GaussianComponent {
                    weight: c.weight * factor,
                    ..c.clone()
                })
                .collect(),
        )
    }

    /// Returns a copy rescaled to unit mass; `None` when the mass is zero.
    pub fn normalized(&self) -> Option<Self> {
        let m = self.mass();
        if m > 0.0 && m.is_finite() {
            Some(self.scaled(1.0 / m))
        } else {
            None
        }
    }

    /// Index of the heaviest component (lowest index on ties).
    pub fn heaviest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in self.components.iter().enumerate() {
            match best {
                Some(b) if self.components[b].weight >= c.weight => {}
                _ => best = Some(i),
            }
        }
        best
    }

    /// Mean and covariance of the normalized mixture.
    pub fn moments(&self) -> Option<(StateVector, StateCovariance)> {
        let m = self.mass();
        if !(m > 0.0) {
            return None;
        }
        let mean = self.components.iter().fold(StateVector::zeros(), |acc, c| acc + c.mean * c.weight) / m;
        let cov = self.components.iter().fold(StateCovariance::zeros(), |acc, c| {
            let d = c.mean - mean;
            acc + (c.covariance + d * d.transpose()) * c.weight
        }) / m;
        Some((mean, symmetrize(&cov)))
    }
}

/// Poisson multi-object density, carried by its intensity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MppDensity {
    pub intensity: GmDensity,
}

impl MppDensity {
    pub fn new(intensity: GmDensity) -> Self {
        Self { intensity }
    }

    /// Mean cardinality (total intensity mass).
    pub fn mean_cardinality(&self) -> f64 {
        self.intensity.mass()
    }

    /// Normalized location density, `None` for an empty intensity.
    pub fn location_density(&self) -> Option<GmDensity> {
        self.intensity.normalized()
    }
}

/// Bernoulli RFS: empty with probability `1 - existence`, otherwise a single
/// object distributed as `spatial`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent {
    pub existence: f64,
    pub spatial: GmDensity,
}

impl BernoulliComponent {
    /// Checks `0 <= existence <= 1` and unit spatial mass.
    pub fn try_new(existence: f64, spatial: GmDensity) -> Result<Self> {
        if !(0.0..=1.0).contains(&existence) {
            return Err(Error::InvalidArgument("existence must lie in [0, 1]"));
        }
        if (spatial.mass() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("spatial density must have unit mass"));
        }
        Ok(Self { existence, spatial })
    }

    /// Normalizes the spatial density and clamps the existence into `[0, 1]`.
    pub fn normalized(existence: f64, spatial: GmDensity) -> Option<Self> {
        Some(Self {
            existence: existence.clamp(0.0, 1.0),
            spatial: spatial.normalized()?,
        })
    }

    /// Mean of the heaviest Gaussian: the mode proxy used for extraction and
    /// weight lookup.
    pub fn mode(&self) -> Option<StateVector> {
        self.spatial.heaviest().map(|i| self.spatial.components[i].mean)
    }
}

/// Multi-Bernoulli density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MbDensity {
    pub components: Vec<BernoulliComponent>,
}

impl MbDensity {
    pub fn new(components: Vec<BernoulliComponent>) -> Self {
        Self { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Expected cardinality, `sum r_b`.
    pub fn mean_cardinality(&self) -> f64 {
        self.components.iter().map(|b| b.existence).sum()
    }
}

/// Restricts an MPP to one cell of a space partition.
///
/// Each Gaussian is kept whole and reweighted by its cell mass, so the
/// returned cardinality is `lambda * p_m`.
pub fn mpp_restrict(density: &MppDensity, partition: &SpacePartition, cell_index: usize) -> Result<MppDensity> {
    if cell_index >= partition.cell_count() {
        return Err(Error::OutOfRange {
            index: cell_index,
            len: partition.cell_count(),
        });
    }
    let mut out = Vec::with_capacity(density.intensity.len());
    for c in &density.intensity.components {
        let p = c.cell_mass(partition, cell_index)?;
        if p > 0.0 {
            out.push(GaussianComponent {
                weight: c.weight * p,
                ..c.clone()
            });
        }
    }
    Ok(MppDensity::new(GmDensity::new(out)))
}

/// Restricts an MPP to every cell at once. Equivalent to calling
/// [`mpp_restrict`] per cell, but skips cells a component cannot reach.
pub fn mpp_decompose(density: &MppDensity, partition: &SpacePartition) -> Vec<MppDensity> {
    let mut cells: Vec<MppDensity> = (0..partition.cell_count()).map(|_| MppDensity::default()).collect();
    for c in &density.intensity.components {
        let pc = c.position_covariance();
        let reach = 12.0;
        let (sx, sy) = (libm::sqrt(pc[(0, 0)]) * reach, libm::sqrt(pc[(1, 1)]) * reach);
        let (ix0, iy0) = partition.locate_indices(c.mean[0] - sx, c.mean[1] - sy);
        let (ix1, iy1) = partition.locate_indices(c.mean[0] + sx, c.mean[1] + sy);
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                let idx = partition.index_of(ix, iy);
                let p = c.cell_mass(partition, idx).unwrap_or(0.0);
                if p > 0.0 {
                    cells[idx].intensity.components.push(GaussianComponent {
                        weight: c.weight * p,
                        ..c.clone()
                    });
                }
            }
        }
    }
    cells
}

/// Union of independent MPPs: intensities add.
pub fn mpp_union(parts: &[MppDensity]) -> Result<MppDensity> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("mpp_union needs at least one part"));
    }
    let components = parts.iter().flat_map(|p| p.intensity.components.iter().cloned()).collect();
    Ok(MppDensity::new(GmDensity::new(components)))
}

/// PHD of a multi-Bernoulli density, `sum_b r_b f_b(x)`.
pub fn phd_of_mb(density: &MbDensity) -> GmDensity {
    let components = density
        .components
        .iter()
        .flat_map(|b| {
            b.spatial.components.iter().map(move |g| GaussianComponent {
                weight: b.existence * g.weight,
                ..g.clone()
            })
        })
        .collect();
    GmDensity::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn g(w: f64, px: f64, py: f64, s: f64) -> GaussianComponent {
        GaussianComponent::new(
            w,
            StateVector::new(px, py, 0.0, 0.0),
            StateCovariance::from_diagonal(&Vector4::new(s * s, s * s, 1.0, 1.0)),
        )
    }

    fn quad_partition() -> SpacePartition {
        SpacePartition::new([-100.0, -100.0], [100.0, 100.0], [2, 2]).unwrap()
    }

    #[test]
    fn try_new_rejects_bad_components() {
        let m = StateVector::zeros();
        assert!(GaussianComponent::try_new(-1.0, m, StateCovariance::identity()).is_err());
        let mut asym = StateCovariance::identity();
        asym[(0, 1)] = 0.5;
        assert!(GaussianComponent::try_new(1.0, m, asym).is_err());
        let neg = StateCovariance::from_diagonal(&Vector4::new(1.0, -1.0, 1.0, 1.0));
        assert_eq!(GaussianComponent::try_new(1.0, m, neg), Err(Error::NotPositiveDefinite));
        assert!(GaussianComponent::try_new(0.0, m, StateCovariance::identity()).is_ok());
    }

    #[test]
    fn restrict_concentrated_component() {
        let p = quad_partition();
        let d = MppDensity::new(GmDensity::new(vec![g(2.0, 50.0, 50.0, 1.0)]));
        let idx = p.locate(50.0, 50.0);
        let lam = mpp_restrict(&d, &p, idx).unwrap().mean_cardinality();
        assert!((lam - 2.0).abs() < 1e-12);
        for other in (0..4).filter(|&i| i != idx) {
            assert!(mpp_restrict(&d, &p, other).unwrap().mean_cardinality() < 1e-12);
        }
    }

    #[test]
    fn restrict_symmetric_on_boundary() {
        let p = quad_partition();
        // centered on the x = 0 edge, inside the upper row
        let d = MppDensity::new(GmDensity::new(vec![g(2.0, 0.0, 50.0, 10.0)]));
        let left = mpp_restrict(&d, &p, p.locate(-50.0, 50.0)).unwrap().mean_cardinality();
        let right = mpp_restrict(&d, &p, p.locate(50.0, 50.0)).unwrap().mean_cardinality();
        assert!((left - right).abs() < 1e-12);
        assert!((left - 1.0).abs() < 1e-6);
    }

    #[test]
    fn restrict_rejects_bad_index() {
        let p = quad_partition();
        let err = mpp_restrict(&MppDensity::default(), &p, 4).unwrap_err();
        assert_eq!(err, Error::OutOfRange { index: 4, len: 4 });
    }

    #[test]
    fn decompose_matches_restrict() {
        let p = SpacePartition::new([-100.0, -100.0], [100.0, 100.0], [5, 4]).unwrap();
        let mut c = g(3.0, 13.0, -7.0, 30.0);
        c.covariance[(0, 1)] = 300.0;
        c.covariance[(1, 0)] = 300.0;
        let d = MppDensity::new(GmDensity::new(vec![c]));
        let parts = mpp_decompose(&d, &p);
        for (i, part) in parts.iter().enumerate() {
            let r = mpp_restrict(&d, &p, i).unwrap();
            assert!((part.mean_cardinality() - r.mean_cardinality()).abs() < 1e-15);
        }
        let total: f64 = parts.iter().map(MppDensity::mean_cardinality).sum();
        assert!((total - 3.0).abs() < 1e-9);
    }

    #[test]
    fn union_adds_mass() {
        let a = MppDensity::new(GmDensity::new(vec![g(1.0, 0.0, 0.0, 1.0)]));
        let b = MppDensity::new(GmDensity::new(vec![g(2.0, 5.0, 0.0, 1.0)]));
        let u = mpp_union(&[a.clone(), b]).unwrap();
        assert_eq!(u.mean_cardinality(), 3.0);
        let same = mpp_union(&[a.clone(), MppDensity::default()]).unwrap();
        assert_eq!(same, a);
        assert!(mpp_union(&[]).is_err());
    }

    #[test]
    fn phd_of_mb_masses() {
        assert!(phd_of_mb(&MbDensity::default()).is_empty());
        let b = |r| BernoulliComponent::try_new(r, GmDensity::new(vec![g(1.0, 0.0, 0.0, 1.0)])).unwrap();
        let one = phd_of_mb(&MbDensity::new(vec![b(0.5)]));
        assert_eq!(one.len(), 1);
        assert_eq!(one.components[0].weight, 0.5);
        let two = phd_of_mb(&MbDensity::new(vec![b(0.9), b(0.3)]));
        assert!((two.mass() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_validation() {
        let s = GmDensity::new(vec![g(1.0, 0.0, 0.0, 1.0)]);
        assert!(BernoulliComponent::try_new(1.2, s.clone()).is_err());
        assert!(BernoulliComponent::try_new(0.5, s.scaled(2.0)).is_err());
        assert!(BernoulliComponent::try_new(0.5, s).is_ok());
    }

    #[test]
    fn moments_of_two_component_mixture() {
        let d = GmDensity::new(vec![g(0.5, -1.0, 0.0, 1.0), g(0.5, 1.0, 0.0, 1.0)]);
        let (m, p) = d.moments().unwrap();
        assert!(m.norm() < 1e-15);
        assert!((p[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((p[(1, 1)] - 1.0).abs() < 1e-15);
    }
}

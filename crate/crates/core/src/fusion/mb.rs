//! Cluster-wise arithmetic-average fusion of multi-Bernoulli densities.
//!
//! Bernoulli components from different sensors that describe the same object
//! are grouped by Kullback-Leibler divergence; each group holds at most one
//! component per sensor. Every group is then fused into a single Bernoulli by
//! a weighted arithmetic average whose weights come from a weight map
//! evaluated at each member's mode.

use alloc::vec::Vec;

use nalgebra::{Matrix2, Vector2};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::fusion::check_weights;
use crate::math::chi_square_quantile;
use crate::models::SensorModel;
use crate::rfs::{BernoulliComponent, GaussianComponent, GmDensity, MbDensity, StateCovariance, StateVector};
use crate::weights::{euf, lookup_weight, EufParams, WeightMap};

/// Clustering and consistency settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MbFusionParams {
    /// Divergence threshold for linking two components.
    pub gamma: f64,
    /// Credibility of the HPD region used by [`check_c2`].
    pub alpha: f64,
    /// Largest EUF spread over an HPD region still deemed consistent.
    pub delta_epsilon: f64,
    /// Link on the mean of both directed divergences instead of their minimum.
    pub symmetric_kld: bool,
}

impl Default for MbFusionParams {
    fn default() -> Self {
        Self {
            gamma: 10.0,
            alpha: 0.95,
            delta_epsilon: 5.0e5,
            symmetric_kld: false,
        }
    }
}

impl MbFusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidArgument("gamma must be > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
        }
        if !(self.delta_epsilon >= 0.0) {
            return Err(Error::InvalidArgument("delta_epsilon must be >= 0"));
        }
        Ok(())
    }
}

/// Moment-matched Gaussian of a spatial density, with cached inverse and
/// log-determinant.
#[derive(Debug, Clone)]
struct Moments {
    mean: StateVector,
    cov: StateCovariance,
    inv: StateCovariance,
    log_det: f64,
}

impl Moments {
    fn of(d: &GmDensity) -> Option<Self> {
        let (mean, cov) = d.moments()?;
        let ch = cov.cholesky()?;
        let l = ch.l_dirty();
        let log_det = 2.0 * (0..4).map(|k| libm::log(l[(k, k)])).sum::<f64>();
        Some(Self {
            mean,
            cov,
            inv: ch.inverse(),
            log_det,
        })
    }

    /// `D(self || other)` between Gaussians.
    fn kld_to(&self, other: &Moments) -> f64 {
        let d = other.mean - self.mean;
        // tr(inv * cov) with both symmetric
        let tr = other.inv.component_mul(&self.cov).sum();
        let v = 0.5 * (tr + d.dot(&(other.inv * d)) - 4.0 + other.log_det - self.log_det);
        v.max(0.0)
    }
}

/// `x ln(x / y)` with the `0 ln 0 = 0` convention.
fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * libm::log(x / y)
    }
}

fn existence_kld(ra: f64, rb: f64) -> f64 {
    xlogx_over(1.0 - ra, 1.0 - rb) + xlogx_over(ra, rb)
}

fn kld_with(ra: f64, ma: Option<&Moments>, rb: f64, mb: Option<&Moments>) -> f64 {
    let e = existence_kld(ra, rb);
    if ra == 0.0 || e.is_infinite() {
        return e;
    }
    match (ma, mb) {
        (Some(a), Some(b)) => e + ra * a.kld_to(b),
        _ => f64::INFINITY,
    }
}

/// Kullback-Leibler divergence `D(a || b)` between Bernoulli densities.
///
/// Spatial mixtures are moment-matched to single Gaussians. Returns `+inf`
/// when `b` makes an event certain or impossible that `a` does not.
pub fn bernoulli_kld(a: &BernoulliComponent, b: &BernoulliComponent) -> Result<f64> {
    for r in [a.existence, b.existence] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidArgument("existence must lie in [0, 1]"));
        }
    }
    let ma = Moments::of(&a.spatial);
    let mb = Moments::of(&b.spatial);
    if a.existence > 0.0 && (ma.is_none() || mb.is_none()) {
        return Err(Error::InvalidArgument("spatial density must be a proper Gaussian mixture"));
    }
    Ok(kld_with(a.existence, ma.as_ref(), b.existence, mb.as_ref()))
}

/// Credible ellipsoid `{x : (x - c)^T S^-1 (x - c) <= radius2}` of the
/// dominant Gaussian of a density.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: StateVector,
    pub shape: StateCovariance,
    pub radius2: f64,
}

/// Position-plane credible ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse {
    pub center: Vector2<f64>,
    pub shape: Matrix2<f64>,
    pub radius2: f64,
}

impl Ellipse {
    /// Center followed by `n` evenly spaced boundary points.
    pub fn sample_points(&self, n: usize) -> Vec<Vector2<f64>> {
        let mut pts = alloc::vec![self.center];
        let l = match self.shape.cholesky() {
            Some(ch) => ch.l(),
            None => return pts,
        };
        let scale = libm::sqrt(self.radius2);
        for k in 0..n {
            let phi = 2.0 * core::f64::consts::PI * k as f64 / n as f64;
            let u = Vector2::new(libm::cos(phi), libm::sin(phi)) * scale;
            pts.push(self.center + l * u);
        }
        pts
    }
}

impl Ellipsoid {
    /// Credible ellipse of the position marginal at the same level.
    pub fn position_marginal(&self, alpha: f64) -> Ellipse {
        Ellipse {
            center: Vector2::new(self.center[0], self.center[1]),
            shape: self.shape.fixed_view::<2, 2>(0, 0).into_owned(),
            radius2: chi_square_quantile(alpha, 2),
        }
    }
}

/// HPD region of the dominant (heaviest) Gaussian at credibility `alpha`.
pub fn hpd_region(density: &GmDensity, alpha: f64) -> Result<Ellipsoid> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
    }
    let i = density.heaviest().ok_or(Error::InvalidArgument("density has no components"))?;
    let c = &density.components[i];
    Ok(Ellipsoid {
        center: c.mean,
        shape: c.covariance,
        radius2: chi_square_quantile(alpha, 4),
    })
}

/// Whether the EUF of `sensor` is nearly constant over the position HPD
/// region of `component` (spread at most `delta_epsilon`). Sampled at the
/// center and 16 boundary points.
pub fn check_c2(component: &BernoulliComponent, sensor: &SensorModel, params: &MbFusionParams, euf_params: &EufParams) -> bool {
    let Ok(region) = hpd_region(&component.spatial, params.alpha) else {
        return true;
    };
    let values: Vec<f64> = region
        .position_marginal(params.alpha)
        .sample_points(16)
        .iter()
        .map(|p| euf(&StateVector::new(p[0], p[1], 0.0, 0.0), sensor, euf_params))
        .collect();
    let infinite = values.iter().filter(|v| v.is_infinite()).count();
    if infinite == values.len() {
        return true;
    }
    if infinite > 0 {
        return false;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo <= params.delta_epsilon
}

/// Members of one cluster as `(sensor, component)` pairs, at most one per
/// sensor, ordered by sensor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cluster {
    pub members: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Checks the partition and one-per-sensor properties against the
    /// component counts of each sensor.
    pub fn is_valid_for(&self, counts: &[usize]) -> bool {
        let total: usize = counts.iter().sum();
        let offsets: Vec<usize> = counts
            .iter()
            .scan(0, |acc, &c| {
                let o = *acc;
                *acc += c;
                Some(o)
            })
            .collect();
        let mut seen = alloc::vec![false; total];
        for c in &self.clusters {
            if c.members.is_empty() {
                return false;
            }
            for (k, &(s, b)) in c.members.iter().enumerate() {
                if s >= counts.len() || b >= counts[s] {
                    return false;
                }
                if c.members[..k].iter().any(|&(s2, _)| s2 == s) {
                    return false;
                }
                let idx = offsets[s] + b;
                if seen[idx] {
                    return false;
                }
                seen[idx] = true;
            }
        }
        seen.iter().all(|s| *s)
    }
}

/// Distance used for linking: minimum (or mean) of the two directed
/// divergences.
fn link_distance(params: &MbFusionParams, ab: f64, ba: f64) -> f64 {
    if params.symmetric_kld {
        0.5 * (ab + ba)
    } else {
        ab.min(ba)
    }
}

/// Groups components across sensors.
///
/// Cross-sensor pairs within `gamma` are linked and joined by union-find.
/// Within each joined set, a sensor contributing several components keeps
/// only the one with the smallest summed distance to the other sensors'
/// members; any member still farther than `gamma` from another is then
/// evicted, most violations first. Evicted components are clustered again
/// among themselves, so every component ends in exactly one cluster.
pub fn cluster_components(densities: &[MbDensity], params: &MbFusionParams) -> Clustering {
    let nodes: Vec<(usize, usize)> = densities
        .iter()
        .enumerate()
        .flat_map(|(s, d)| (0..d.len()).map(move |b| (s, b)))
        .collect();
    let moments: Vec<Option<Moments>> = nodes
        .iter()
        .map(|&(s, b)| Moments::of(&densities[s].components[b].spatial))
        .collect();
    let existence: Vec<f64> = nodes.iter().map(|&(s, b)| densities[s].components[b].existence).collect();
    let n = nodes.len();

    let mut dist = alloc::vec![f64::INFINITY; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            if nodes[a].0 == nodes[b].0 {
                continue;
            }
            let ab = kld_with(existence[a], moments[a].as_ref(), existence[b], moments[b].as_ref());
            let ba = kld_with(existence[b], moments[b].as_ref(), existence[a], moments[a].as_ref());
            let d = link_distance(params, ab, ba);
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    let d = |a: usize, b: usize| dist[a * n + b];

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut pool: Vec<usize> = (0..n).collect();
    while !pool.is_empty() {
        let mut sets = DisjointSets::new(pool.len());
        for i in 0..pool.len() {
            for j in (i + 1)..pool.len() {
                if d(pool[i], pool[j]) <= params.gamma {
                    sets.union(i, j);
                }
            }
        }
        let mut evicted = Vec::new();
        for group in sets.groups() {
            let mut members: Vec<usize> = group.iter().map(|&k| pool[k]).collect();

            // one component per sensor: smallest summed distance wins
            let score: Vec<f64> = members
                .iter()
                .map(|&x| members.iter().filter(|&&o| nodes[o].0 != nodes[x].0).map(|&o| d(x, o)).sum())
                .collect();
            let mut best: Vec<(usize, usize)> = Vec::new(); // (sensor, position in members)
            for (k, &m) in members.iter().enumerate() {
                match best.iter_mut().find(|(s, _)| *s == nodes[m].0) {
                    None => best.push((nodes[m].0, k)),
                    Some(slot) => {
                        let cur = members[slot.1];
                        if score[k].total_cmp(&score[slot.1]).then(m.cmp(&cur)).is_lt() {
                            slot.1 = k;
                        }
                    }
                }
            }
            let winners: Vec<usize> = best.iter().map(|&(_, k)| members[k]).collect();
            evicted.extend(members.iter().copied().filter(|m| !winners.contains(m)));
            members.retain(|m| winners.contains(m));

            // every pair within gamma
            let mut violations: Vec<usize> = members
                .iter()
                .map(|&x| members.iter().filter(|&&o| o != x && d(x, o) > params.gamma).count())
                .collect();
            while let Some(&most) = violations.iter().max() {
                if most == 0 {
                    break;
                }
                let sum = |x: usize| -> f64 { members.iter().filter(|&&o| o != x).map(|&o| d(x, o)).sum() };
                let k = (0..members.len())
                    .filter(|&k| violations[k] == most)
                    .max_by(|&a, &b| sum(members[a]).total_cmp(&sum(members[b])).then(members[a].cmp(&members[b])))
                    .expect("non-empty");
                let x = members.remove(k);
                violations.remove(k);
                for (v, &o) in violations.iter_mut().zip(&members) {
                    if d(x, o) > params.gamma {
                        *v -= 1;
                    }
                }
                evicted.push(x);
            }
            clusters.push(members);
        }
        evicted.sort_unstable();
        pool = evicted;
    }

    clusters.sort_by_key(|c| c.iter().copied().min());
    Clustering {
        clusters: clusters
            .into_iter()
            .map(|mut c| {
                c.sort_by_key(|&k| nodes[k]);
                Cluster {
                    members: c.into_iter().map(|k| nodes[k]).collect(),
                }
            })
            .collect(),
    }
}

/// Weighted average of Bernoulli components without a weight-sum check.
/// Returns the fused component and whether the fused existence was zero.
fn fuse_weighted(members: &[(&BernoulliComponent, f64)]) -> (BernoulliComponent, bool) {
    let r: f64 = members.iter().map(|(b, w)| w * b.existence).sum();
    if r > 0.0 {
        let comps = members
            .iter()
            .flat_map(|&(b, w)| {
                let scale = w * b.existence / r;
                b.spatial.components.iter().map(move |g| GaussianComponent {
                    weight: scale * g.weight,
                    ..g.clone()
                })
            })
            .filter(|g| g.weight > 0.0)
            .collect();
        (
            BernoulliComponent {
                existence: r.min(1.0),
                spatial: GmDensity::new(comps),
            },
            false,
        )
    } else {
        let n = members.len() as f64;
        let comps: Vec<GaussianComponent> = members
            .iter()
            .flat_map(|&(b, _)| {
                b.spatial.components.iter().map(move |g| GaussianComponent {
                    weight: g.weight / n,
                    ..g.clone()
                })
            })
            .collect();
        (
            BernoulliComponent {
                existence: 0.0,
                spatial: GmDensity::new(comps),
            },
            true,
        )
    }
}

/// Fuses one cluster: `r = sum w r_i`, `f = sum w r_i f_i / r`.
///
/// Weights must sum to one. The flag is set when the fused existence is zero,
/// in which case the spatial density is the unweighted average.
pub fn bernoulli_waa_fuse(cluster: &[(BernoulliComponent, f64)]) -> Result<(BernoulliComponent, bool)> {
    if cluster.is_empty() {
        return Err(Error::InvalidArgument("cluster must not be empty"));
    }
    let w: Vec<f64> = cluster.iter().map(|(_, w)| *w).collect();
    check_weights(&w)?;
    let refs: Vec<(&BernoulliComponent, f64)> = cluster.iter().map(|(b, w)| (b, *w)).collect();
    Ok(fuse_weighted(&refs))
}

/// Output of a multi-Bernoulli fusion step.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedMb {
    pub density: MbDensity,
    pub clustering: Clustering,
    /// Weight of each cluster member, parallel to `clustering`.
    pub weights: Vec<Vec<f64>>,
    /// Clusters whose member weights summed above one and were rescaled.
    pub renormalized: usize,
    /// Clusters whose fused existence was zero.
    pub zero_existence: usize,
}

fn fuse_clusters(densities: &[MbDensity], params: &MbFusionParams, weight_of: impl Fn(usize, &BernoulliComponent) -> f64) -> FusedMb {
    let clustering = cluster_components(densities, params);
    let mut out = Vec::with_capacity(clustering.len());
    let mut weights = Vec::with_capacity(clustering.len());
    let (mut renormalized, mut zero_existence) = (0, 0);
    for c in &clustering.clusters {
        let mut members: Vec<(&BernoulliComponent, f64)> = c
            .members
            .iter()
            .map(|&(s, b)| {
                let comp = &densities[s].components[b];
                (comp, weight_of(s, comp))
            })
            .collect();
        let sum: f64 = members.iter().map(|m| m.1).sum();
        if sum > 1.0 + 1e-12 {
            for m in &mut members {
                m.1 /= sum;
            }
            renormalized += 1;
        }
        let (fused, zero) = fuse_weighted(&members);
        if zero {
            zero_existence += 1;
        }
        weights.push(members.iter().map(|m| m.1).collect());
        out.push(fused);
    }
    FusedMb {
        density: MbDensity::new(out),
        clustering,
        weights,
        renormalized,
        zero_existence,
    }
}

/// Space-varying fusion: each member is weighted by its sensor's map weight
/// at the member's mode. Weights are not renormalized within a cluster, so a
/// sensor that has no member there contributes an empty Bernoulli.
pub fn hmmb_fuse(densities: &[MbDensity], map: &WeightMap, params: &MbFusionParams) -> Result<FusedMb> {
    params.validate()?;
    if densities.is_empty() {
        return Err(Error::InvalidArgument("fusion needs at least one sensor"));
    }
    if map.sensor_count() != densities.len() {
        return Err(Error::InvalidArgument("weight map sensor count differs from density count"));
    }
    Ok(fuse_clusters(densities, params, |s, b| match b.mode() {
        Some(x) => lookup_weight(map, s, &x),
        None => 0.0,
    }))
}

/// Constant-weight fusion over the same clustering.
pub fn waa_fuse_mb(densities: &[MbDensity], weights: &[f64], params: &MbFusionParams) -> Result<FusedMb> {
    params.validate()?;
    if weights.len() != densities.len() {
        return Err(Error::InvalidArgument("one weight per sensor is required"));
    }
    check_weights(weights)?;
    Ok(fuse_clusters(densities, params, |s, _| weights[s]))
}

/// Number of fused-cluster members whose sensor's EUF is inconsistent over
/// the member's HPD region.
pub fn c2_violations(
    densities: &[MbDensity],
    clustering: &Clustering,
    sensors: &[SensorModel],
    params: &MbFusionParams,
    euf_params: &EufParams,
) -> usize {
    clustering
        .clusters
        .iter()
        .filter(|c| c.members.len() > 1)
        .flat_map(|c| c.members.iter())
        .filter(|&&(s, b)| !check_c2(&densities[s].components[b], &sensors[s], params, euf_params))
        .count()
}

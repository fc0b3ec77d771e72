//! Slow, brute-force reference computations used only by the test suites:
//! discretized set integrals, Monte-Carlo samplers, dense quadrature and
//! exhaustive searches.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use hetfuse_core::fusion::{bernoulli_kld, Cluster, Clustering, MbFusionParams};
use hetfuse_core::{GaussianComponent, MbDensity, MppDensity, StateVector};
use nalgebra::Vector4;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Quadrature nodes over a bounded 1-D interval or 2-D rectangle, plus the
/// cardinality at which set integrals are truncated.
#[derive(Debug, Clone)]
pub struct DiscretizedSpace {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub max_cardinality: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

fn gl_axis(lo: f64, hi: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (hi - lo) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(a + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

impl DiscretizedSpace {
    /// Midpoint rule with `n` cells on `[lo, hi]` (second coordinate 0).
    pub fn midpoint_1d(lo: f64, hi: f64, n: usize, max_cardinality: usize) -> Self {
        assert!(hi > lo && n > 0);
        let h = (hi - lo) / n as f64;
        Self {
            nodes: (0..n).map(|k| [lo + (k as f64 + 0.5) * h, 0.0]).collect(),
            weights: vec![h; n],
            max_cardinality,
        }
    }

    /// Composite Gauss-Legendre rule on `[lo, hi]` (second coordinate 0).
    pub fn gauss_legendre_1d(lo: f64, hi: f64, panels: usize, order: usize, max_cardinality: usize) -> Self {
        assert!(hi > lo && panels > 0 && order > 0);
        let (xs, ws) = gl_axis(lo, hi, panels, order);
        Self {
            nodes: xs.into_iter().map(|x| [x, 0.0]).collect(),
            weights: ws,
            max_cardinality,
        }
    }

    /// Tensor-product midpoint rule on a rectangle.
    pub fn midpoint_2d(x: (f64, f64), y: (f64, f64), n: [usize; 2], max_cardinality: usize) -> Self {
        let hx = (x.1 - x.0) / n[0] as f64;
        let hy = (y.1 - y.0) / n[1] as f64;
        let mut nodes = Vec::with_capacity(n[0] * n[1]);
        for j in 0..n[1] {
            for i in 0..n[0] {
                nodes.push([x.0 + (i as f64 + 0.5) * hx, y.0 + (j as f64 + 0.5) * hy]);
            }
        }
        Self {
            weights: vec![hx * hy; nodes.len()],
            nodes,
            max_cardinality,
        }
    }

    /// Tensor-product composite Gauss-Legendre rule on a rectangle.
    pub fn gauss_legendre_2d(x: (f64, f64), y: (f64, f64), panels: usize, order: usize, max_cardinality: usize) -> Self {
        let (xs, wx) = gl_axis(x.0, x.1, panels, order);
        let (ys, wy) = gl_axis(y.0, y.1, panels, order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (yv, wyv) in ys.iter().zip(&wy) {
            for (xv, wxv) in xs.iter().zip(&wx) {
                nodes.push([*xv, *yv]);
                weights.push(wxv * wyv);
            }
        }
        Self {
            nodes,
            weights,
            max_cardinality,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Total measure of the space.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Smallest cardinality `K` with `P(N > K) < tail` for `N ~ Poisson(lambda)`.
pub fn poisson_truncation(lambda: f64, tail: f64) -> usize {
    let mut term = (-lambda).exp();
    let mut cdf = term;
    let mut k = 0;
    while 1.0 - cdf >= tail {
        k += 1;
        term *= lambda / k as f64;
        cdf += term;
    }
    k
}

/// Set integral `sum_n (1/n!) int pi({x_1..x_n}) dx_1..dx_n` on a discretized
/// space, truncated at `space.max_cardinality`.
///
/// Ordered tuples are folded into multisets: a multiset with multiplicities
/// `m_k` stands for `n! / prod m_k!` tuples, so its quadrature weight is
/// `prod w_k^{m_k} / prod m_k!`.
pub fn set_integral(density: impl Fn(&[[f64; 2]]) -> f64, space: &DiscretizedSpace) -> f64 {
    fn walk(
        density: &dyn Fn(&[[f64; 2]]) -> f64,
        space: &DiscretizedSpace,
        start: usize,
        points: &mut Vec<[f64; 2]>,
        weight: f64,
        last_run: usize,
        total: &mut f64,
    ) {
        *total += weight * density(points);
        if points.len() == space.max_cardinality {
            return;
        }
        for k in start..space.len() {
            let run = if k == start && !points.is_empty() { last_run + 1 } else { 1 };
            points.push(space.nodes[k]);
            walk(density, space, k, points, weight * space.weights[k] / run as f64, run, total);
            points.pop();
        }
    }
    let mut total = 0.0;
    let mut points = Vec::with_capacity(space.max_cardinality);
    walk(&density, space, 0, &mut points, 1.0, 0, &mut total);
    total
}

/// One draw from a Gaussian component (weight ignored).
pub fn sample_gaussian<R: Rng + ?Sized>(c: &GaussianComponent, rng: &mut R) -> StateVector {
    let l = c
        .covariance
        .cholesky()
        .map(|ch| ch.l())
        .unwrap_or_else(|| nalgebra::Matrix4::from_diagonal(&c.covariance.diagonal().map(|v| v.max(0.0).sqrt())));
    let u = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    c.mean + l * u
}

/// Draws a finite set from a Poisson density: `N ~ Poisson(lambda)`, then
/// i.i.d. points from the normalized intensity.
pub fn sample_mpp<R: Rng + ?Sized>(density: &MppDensity, rng: &mut R) -> Vec<StateVector> {
    let lambda = density.mean_cardinality();
    if !(lambda > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(lambda).expect("positive rate").sample(rng) as usize;
    let comps = &density.intensity.components;
    (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * lambda;
            let mut pick = comps.len() - 1;
            for (i, c) in comps.iter().enumerate() {
                if u < c.weight {
                    pick = i;
                    break;
                }
                u -= c.weight;
            }
            sample_gaussian(&comps[pick], rng)
        })
        .collect()
}

/// Refusal for instances too large to enumerate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TooLarge {
    pub size: usize,
    pub limit: usize,
}

fn permutations(n: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(k: usize, perm: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if k == perm.len() {
            visit(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            go(k + 1, perm, visit);
            perm.swap(k, i);
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    go(0, &mut perm, visit);
}

/// Exact minimum of `sum_i costs[i][perm(i)]` over all permutations of a
/// square row-major matrix, `n <= 6`. Costs are summed in ascending order.
pub fn brute_force_assignment(costs: &[f64], n: usize) -> Result<f64, TooLarge> {
    if n > 6 {
        return Err(TooLarge { size: n, limit: 6 });
    }
    assert_eq!(costs.len(), n * n);
    let mut best = f64::INFINITY;
    permutations(n, &mut |perm| {
        let mut chosen: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| costs[i * n + j]).collect();
        chosen.sort_by(f64::total_cmp);
        let s: f64 = chosen.iter().sum();
        if s < best {
            best = s;
        }
    });
    Ok(best)
}

/// OSPA by exhaustive search over injections of the smaller set into the
/// larger one (both of size at most 6).
pub fn brute_force_ospa(truth: &[[f64; 2]], estimate: &[[f64; 2]], order: f64, cutoff: f64) -> Result<f64, TooLarge> {
    let (small, large) = if truth.len() <= estimate.len() {
        (truth, estimate)
    } else {
        (estimate, truth)
    };
    let (m, n) = (small.len(), large.len());
    if n > 6 {
        return Err(TooLarge { size: n, limit: 6 });
    }
    if n == 0 {
        return Ok(0.0);
    }
    if m == 0 {
        return Ok(cutoff);
    }
    // same floating-point primitives as the library, so results compare exactly
    let cost = |a: &[f64; 2], b: &[f64; 2]| libm::pow(libm::hypot(a[0] - b[0], a[1] - b[1]).min(cutoff), order);
    let mut best = f64::INFINITY;
    permutations(n, &mut |perm| {
        let mut chosen: Vec<f64> = (0..m).map(|i| cost(&small[i], &large[perm[i]])).collect();
        chosen.sort_by(f64::total_cmp);
        let s: f64 = chosen.iter().sum();
        if s < best {
            best = s;
        }
    });
    let total = (best + libm::pow(cutoff, order) * (n - m) as f64) / n as f64;
    Ok(libm::pow(total, 1.0 / order).min(cutoff))
}

/// Optimal clustering by enumerating every set partition of the components
/// (at most 8). Feasible partitions hold at most one component per sensor per
/// block and keep every cross-sensor pair in a block within `gamma`. Among
/// them the fewest blocks win, then the smallest summed pairwise distance.
pub fn brute_force_clustering(densities: &[MbDensity], params: &MbFusionParams) -> Result<Clustering, TooLarge> {
    let nodes: Vec<(usize, usize)> = densities
        .iter()
        .enumerate()
        .flat_map(|(s, d)| (0..d.len()).map(move |b| (s, b)))
        .collect();
    let n = nodes.len();
    if n > 8 {
        return Err(TooLarge { size: n, limit: 8 });
    }
    let comp = |k: usize| &densities[nodes[k].0].components[nodes[k].1];
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let ab = bernoulli_kld(comp(a), comp(b)).unwrap();
                let ba = bernoulli_kld(comp(b), comp(a)).unwrap();
                dist[a * n + b] = if params.symmetric_kld { 0.5 * (ab + ba) } else { ab.min(ba) };
            }
        }
    }

    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    let mut labels = vec![0usize; n];
    fn restricted_growth(k: usize, max: usize, labels: &mut Vec<usize>, visit: &mut impl FnMut(&[usize], usize)) {
        if k == labels.len() {
            visit(labels, max);
            return;
        }
        for l in 0..=max {
            labels[k] = l;
            restricted_growth(k + 1, max.max(l + 1), labels, visit);
        }
    }
    if n > 0 {
        restricted_growth(0, 0, &mut labels, &mut |labels, blocks| {
            let mut cost = 0.0;
            for a in 0..n {
                for b in (a + 1)..n {
                    if labels[a] != labels[b] {
                        continue;
                    }
                    if nodes[a].0 == nodes[b].0 {
                        return;
                    }
                    let d = dist[a * n + b];
                    if d > params.gamma {
                        return;
                    }
                    cost += d;
                }
            }
            let better = match &best {
                None => true,
                Some((bb, bc, _)) => blocks < *bb || (blocks == *bb && cost < *bc),
            };
            if better {
                best = Some((blocks, cost, labels.to_vec()));
            }
        });
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    if let Some((blocks, _, labels)) = best {
        for l in 0..blocks {
            let members: Vec<(usize, usize)> = (0..n).filter(|&k| labels[k] == l).map(|k| nodes[k]).collect();
            clusters.push(Cluster { members });
        }
    }
    clusters.sort();
    Ok(Clustering { clusters })
}

/// Mass of a component's position marginal inside a rectangle by an
/// `n x n` midpoint rule. Infinite sides are clipped at 12 standard
/// deviations from the mean.
pub fn quadrature_cell_mass(c: &GaussianComponent, x: (f64, f64), y: (f64, f64), n: usize) -> f64 {
    let p = c.position_covariance();
    let (sx, sy) = (p[(0, 0)].sqrt(), p[(1, 1)].sqrt());
    let clip = |(lo, hi): (f64, f64), m: f64, s: f64| (lo.max(m - 12.0 * s), hi.min(m + 12.0 * s));
    let (x0, x1) = clip(x, c.mean[0], sx);
    let (y0, y1) = clip(y, c.mean[1], sy);
    if !(x1 > x0 && y1 > y0) {
        return 0.0;
    }
    let unit = GaussianComponent { weight: 1.0, ..c.clone() };
    let hx = (x1 - x0) / n as f64;
    let hy = (y1 - y0) / n as f64;
    let mut total = 0.0;
    for j in 0..n {
        let py = y0 + (j as f64 + 0.5) * hy;
        let mut row = 0.0;
        for i in 0..n {
            let px = x0 + (i as f64 + 0.5) * hx;
            row += unit.eval_position(&nalgebra::Vector2::new(px, py));
        }
        total += row;
    }
    total * hx * hy
}

/// Pearson chi-square goodness-of-fit p-value of observed counts against
/// expected probabilities. Bins with expected count below 5 are pooled into
/// their neighbour.
pub fn chi_square_p_value(observed: &[u64], expected_prob: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_prob.len());
    let total: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, p) in observed.iter().zip(expected_prob) {
        o_acc += *o as f64;
        e_acc += p * total as f64;
        if e_acc >= 5.0 {
            bins.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => bins.push((o_acc, e_acc)),
        }
    }
    if bins.len() < 2 {
        return 1.0;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dist = ChiSquared::new((bins.len() - 1) as f64).expect("positive dof");
    1.0 - dist.cdf(stat)
}

/// Poisson probabilities `P(N = 0..=k_max)` with the upper tail folded into
/// the last entry.
pub fn poisson_pmf(lambda: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut term = (-lambda).exp();
    for k in 0..=k_max {
        if k > 0 {
            term *= lambda / k as f64;
        }
        out.push(term);
    }
    let head: f64 = out[..k_max].iter().sum();
    out[k_max] = 1.0 - head;
    out
}

/// Largest absolute difference of two functions over a regular grid of
/// positions on a rectangle (`n x n` points including the edges).
pub fn grid_sup_norm(f: impl Fn(f64, f64) -> f64, g: impl Fn(f64, f64) -> f64, x: (f64, f64), y: (f64, f64), n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let py = y.0 + (y.1 - y.0) * j as f64 / (n - 1) as f64;
        for i in 0..n {
            let px = x.0 + (x.1 - x.0) * i as f64 / (n - 1) as f64;
            worst = worst.max((f(px, py) - g(px, py)).abs());
        }
    }
    worst
}

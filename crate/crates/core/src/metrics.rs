//! OSPA distance and cardinality statistics.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// OSPA order `p` and cutoff `c` (metres).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaParams {
    pub order: f64,
    pub cutoff: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self { order: 1.0, cutoff: 100.0 }
    }
}

impl OspaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.order >= 1.0) || !self.order.is_finite() {
            return Err(Error::InvalidArgument("OSPA order must be >= 1"));
        }
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(Error::InvalidArgument("OSPA cutoff must be > 0"));
        }
        Ok(())
    }
}

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`)
/// of a row-major cost matrix. Returns the column chosen for each row.
pub fn min_cost_assignment(costs: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols, "assignment needs rows <= cols");
    assert_eq!(costs.len(), rows * cols);
    if rows == 0 {
        return Vec::new();
    }
    // shortest augmenting paths with row/column potentials, 1-based
    let inf = f64::INFINITY;
    let mut u = alloc::vec![0.0; rows + 1];
    let mut v = alloc::vec![0.0; cols + 1];
    let mut owner = alloc::vec![0usize; cols + 1];
    let mut way = alloc::vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = alloc::vec![inf; cols + 1];
        let mut used = alloc::vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = costs[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = alloc::vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

/// Sum of values in ascending order, so equal multisets give equal sums.
pub fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// OSPA distance between two position sets. Both empty gives 0; exactly one
/// empty gives the cutoff.
pub fn ospa(truth: &[[f64; 2]], estimate: &[[f64; 2]], params: &OspaParams) -> f64 {
    let (small, large) = if truth.len() <= estimate.len() {
        (truth, estimate)
    } else {
        (estimate, truth)
    };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    let (p, c) = (params.order, params.cutoff);
    let cp = libm::pow(c, p);
    if m == 0 {
        return c;
    }
    let mut costs = Vec::with_capacity(m * n);
    for a in small {
        for b in large {
            costs.push(libm::pow(dist(a, b).min(c), p));
        }
    }
    let assignment = min_cost_assignment(&costs, m, n);
    let mut chosen: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| costs[i * n + j]).collect();
    let loc = sorted_sum(&mut chosen);
    let total = (loc + cp * (n - m) as f64) / n as f64;
    libm::pow(total, 1.0 / p).min(c)
}

/// Estimate count per scan.
pub fn cardinality_series<T>(estimates: &[Vec<T>]) -> Vec<f64> {
    estimates.iter().map(|e| e.len() as f64).collect()
}

/// Per-index arithmetic mean over runs of equal-length series. Empty input
/// gives an empty series.
pub fn mean_series(runs: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = runs.len() as f64;
    (0..first.len()).map(|k| runs.iter().map(|r| r[k]).sum::<f64>() / n).collect()
}

/// Per-index sample standard deviation over runs (0 for a single run).
pub fn std_series(runs: &[Vec<f64>]) -> Vec<f64> {
    let mean = mean_series(runs);
    if runs.len() < 2 {
        return alloc::vec![0.0; mean.len()];
    }
    let n = runs.len() as f64;
    mean.iter()
        .enumerate()
        .map(|(k, mu)| libm::sqrt(runs.iter().map(|r| (r[k] - mu) * (r[k] - mu)).sum::<f64>() / (n - 1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ospa_conventions() {
        let p = OspaParams::default();
        assert_eq!(ospa(&[], &[], &p), 0.0);
        assert_eq!(ospa(&[[0.0, 0.0]], &[], &p), 100.0);
        assert_eq!(ospa(&[[1.0, 2.0], [3.0, 4.0]], &[[3.0, 4.0], [1.0, 2.0]], &p), 0.0);
        let d = ospa(&[[0.0, 0.0]], &[[3.0, 4.0], [500.0, 0.0]], &p);
        assert!((d - (5.0 + 100.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn assignment_small_cases() {
        assert_eq!(min_cost_assignment(&[0.0, 5.0, 5.0, 0.0], 2, 2), vec![0, 1]);
        assert_eq!(min_cost_assignment(&[5.0, 1.0, 1.0, 5.0], 2, 2), vec![1, 0]);
        assert_eq!(min_cost_assignment(&[3.0, 1.0, 2.0], 1, 3), vec![1]);
    }

    #[test]
    fn series_helpers() {
        let empty: Vec<Vec<u8>> = vec![vec![], vec![]];
        assert_eq!(cardinality_series(&empty), vec![0.0, 0.0]);
        assert_eq!(mean_series(&[vec![1.0, 2.0], vec![3.0, 6.0]]), vec![2.0, 4.0]);
        assert_eq!(std_series(&[vec![1.0]]), vec![0.0]);
        assert!(mean_series(&[]).is_empty());
    }
}

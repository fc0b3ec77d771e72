//! Pruning and merging of Gaussian mixtures.

use alloc::vec::Vec;

use crate::filters::FilterParams;
use crate::rfs::{symmetrize, GaussianComponent, GmDensity, StateCovariance};

/// Prunes components lighter than `prune_threshold`, greedily merges
/// components within `merge_threshold` (squared Mahalanobis distance) of the
/// heaviest remaining one, and keeps at most `max_components` of the result.
///
/// Merging preserves weight, mean and covariance of the merged set.
pub fn prune_merge(density: &GmDensity, params: &FilterParams) -> GmDensity {
    prune_merge_capped(density, params.prune_threshold, params.merge_threshold, params.max_components)
}

pub(crate) fn prune_merge_capped(density: &GmDensity, prune: f64, merge: f64, cap: usize) -> GmDensity {
    let mut pool: Vec<(GaussianComponent, Option<StateCovariance>)> = density
        .components
        .iter()
        .filter(|c| c.weight > prune)
        .map(|c| {
            let inv = c.covariance.cholesky().map(|ch| ch.inverse());
            (c.clone(), inv)
        })
        .collect();
    // heaviest first; stable on ties so earlier components win
    pool.sort_by(|a, b| b.0.weight.total_cmp(&a.0.weight));

    let mut alive = alloc::vec![true; pool.len()];
    let mut out = Vec::new();
    for j in 0..pool.len() {
        if !alive[j] {
            continue;
        }
        let anchor_mean = pool[j].0.mean;
        let mut members = Vec::new();
        for i in j..pool.len() {
            if !alive[i] {
                continue;
            }
            let close = if i == j {
                true
            } else {
                match &pool[i].1 {
                    Some(inv) => {
                        let d = pool[i].0.mean - anchor_mean;
                        d.dot(&(inv * d)) <= merge
                    }
                    None => pool[i].0.mean == anchor_mean,
                }
            };
            if close {
                alive[i] = false;
                members.push(i);
            }
        }
        if members.len() == 1 {
            out.push(pool[j].0.clone());
            continue;
        }
        let w: f64 = members.iter().map(|&i| pool[i].0.weight).sum();
        let mean = members
            .iter()
            .fold(crate::rfs::StateVector::zeros(), |acc, &i| acc + pool[i].0.mean * pool[i].0.weight)
            / w;
        let cov = members.iter().fold(StateCovariance::zeros(), |acc, &i| {
            let c = &pool[i].0;
            let d = mean - c.mean;
            acc + (c.covariance + d * d.transpose()) * c.weight
        }) / w;
        out.push(GaussianComponent {
            weight: w,
            mean,
            covariance: symmetrize(&cov),
        });
    }
    out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    out.truncate(cap);
    GmDensity::new(out)
}

//! Fusion-center rules: weighted arithmetic averaging of Poisson and
//! multi-Bernoulli densities with constant or space-varying weights.

pub mod mb;
pub mod phd;

pub use mb::{
    bernoulli_kld, bernoulli_waa_fuse, c2_violations, check_c2, cluster_components, hmmb_fuse, hpd_region, waa_fuse_mb, Cluster,
    Clustering, Ellipse, Ellipsoid, FusedMb, MbFusionParams,
};
pub use phd::{fused_cardinality, hmphd_fuse, hmphd_fuse_exact, waa_fuse_phd, FusionInputPhd, Weighting};

use crate::error::{Error, Result};

/// Checks that scalar weights are non-negative and sum to one within 1e-9.
pub fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("at least one weight is required"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be >= 0"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::WeightSum { sum });
    }
    Ok(())
}

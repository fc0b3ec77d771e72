//! Random-finite-set densities, local Gaussian-mixture filters and
//! heterogeneous multi-sensor fusion for range-bearing sensor networks.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]
// NaN must fail parameter checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dsu;
pub mod error;
pub mod filters;
pub mod fusion;
pub mod math;
pub mod metrics;
pub mod models;
pub mod partition;
pub mod rfs;
pub mod weights;

pub use error::{Error, Result};
pub use filters::{BirthModel, FilterParams};
pub use fusion::{FusionInputPhd, MbFusionParams, Weighting};
pub use metrics::OspaParams;
pub use models::{Measurement, MotionModel, SensorModel};
pub use partition::SpacePartition;
pub use rfs::{BernoulliComponent, GaussianComponent, GmDensity, MbDensity, MppDensity, StateCovariance, StateVector};
pub use weights::{EufParams, WeightMap};

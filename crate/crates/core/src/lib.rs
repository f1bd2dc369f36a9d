//! Higher-order intensity correlations of `N` thermal point sources applied
//! to remote ranging.
//!
//! The crate covers the analytic normalized `m`-th order correlation function,
//! the Fisher information it carries about the object distance `z2` (discrete
//! sum, singular-integrand quadrature, closed forms for `N = 2, 3`, a lower
//! bound and a fitted surrogate), a Gaussian-speckle Monte Carlo simulator,
//! and a Poisson maximum-likelihood range estimator.

pub mod correlation;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod fitkit;
pub mod geometry;
pub mod quadrature;
pub mod speckle;

pub use error::{Error, Result};
pub use geometry::{DetectorPlane, SetupConfig, SetupGeometry, SourceArray};

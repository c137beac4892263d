//! Random projection trees and the numerical machinery used to check their
//! geometric behaviour empirically.
//!
//! * [`math`]: datasets, random directions, enclosing balls, covariance and a
//!   cyclic Jacobi eigensolver.
//! * [`rptree`]: RPTree-Max / RPTree-Mean construction, ball containment,
//!   packing counts and size-reduction measurements.
//! * [`split_stats`]: Monte Carlo estimators for split probabilities and the
//!   projection tail bounds they rest on.
//! * [`intrinsic_dim`]: doubling-dimension and local-covariance estimators.
//! * [`manifolds`]: synthetic spheres, flats and tori with analytic
//!   closest-point and tangent queries.

pub mod error;
pub mod intrinsic_dim;
pub mod manifolds;
pub mod math;
pub mod rptree;
pub mod split_stats;

pub use error::{Error, Result};

pub use math::{Ball, Dataset, Direction, SymmetricMatrix};
pub use manifolds::{ManifoldKind, ManifoldSpec};
pub use rptree::{build_tree, BuildParams, SplitRule, Tree};


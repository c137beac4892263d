//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rptlab_core::manifolds::{sample_global, ManifoldKind, ManifoldSpec};
use rptlab_core::Dataset;

/// `n` points on a `d`-flat in ℝ^`dim`, fixed seed.
pub fn flat(d: usize, dim: usize, n: usize) -> Arc<Dataset> {
    let spec = ManifoldSpec::new(ManifoldKind::Flat { d, extent: 1.0 }, dim, 1).expect("valid spec");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    Arc::new(sample_global(&spec, n, &mut rng).expect("n > 0"))
}

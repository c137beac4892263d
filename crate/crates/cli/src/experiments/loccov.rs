use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rptlab_core::intrinsic_dim::{local_covariance_check, tangent_energy_check};
use rptlab_core::manifolds::{sample_global, sample_patch, ManifoldKind};
use rptlab_core::Error;

use super::{Context, Job, Row};
use crate::record::Value;

pub const COLUMNS: &[&str] = &[
    "manifold",
    "d",
    "D",
    "eps",
    "r",
    "points",
    "eigen_fraction",
    "tangent_fraction",
    "mean_to_q",
    "max_point_to_q",
    "eigen_pass",
    "tangent_pass",
    "mean_pass",
    "spread_pass",
    "pass",
];

/// Neighbourhood radius √ε·τ/3. A flat has no curvature scale, so its
/// extent stands in for τ.
pub fn patch_radius(kind: ManifoldKind, eps: f64) -> f64 {
    let tau = match kind {
        ManifoldKind::Sphere { tau, .. } => tau,
        ManifoldKind::Torus { minor, .. } => minor,
        ManifoldKind::Flat { extent, .. } => extent,
    };
    eps.sqrt() * tau / 3.0
}

pub fn run(ctx: &Context, job: &Job, d: usize, dim: usize, eps: f64) -> anyhow::Result<Vec<Row>> {
    // Patches are noise-free regardless of the configured ambient noise.
    let spec = ctx.manifold(d, dim)?.with_noise(0.0)?;
    let r = patch_radius(spec.kind(), eps);
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let x0 = sample_global(&spec, 1, &mut rng)?;
    let mut values: Vec<(&'static str, Value)> = vec![
        ("manifold", ctx.shape()?.0.name().into()),
        ("d", d.into()),
        ("D", dim.into()),
        ("eps", eps.into()),
        ("r", r.into()),
    ];
    let patch = match sample_patch(&spec, x0.row(0), r, ctx.cfg.grid.patch_points, &mut rng) {
        Ok(p) => p,
        Err(Error::GaveUp { .. } | Error::InsufficientSample { .. }) => {
            values.extend(COLUMNS[5..].iter().map(|&c| (c, Value::Null)));
            return Ok(vec![(values, true)]);
        }
        Err(e) => return Err(e.into()),
    };
    let refs = patch.refs();
    let lc = match local_covariance_check(&refs, x0.row(0), r, d, eps) {
        Ok(lc) => lc,
        Err(Error::InsufficientSample { .. }) => {
            values.extend(COLUMNS[5..].iter().map(|&c| (c, Value::Null)));
            return Ok(vec![(values, true)]);
        }
        Err(e) => return Err(e.into()),
    };
    let te = tangent_energy_check(&refs, &spec)?;
    let tangent_pass = te.fraction >= 1.0 - eps;
    let mean_pass = te.mean_to_q <= r;
    let spread_pass = te.max_point_to_q <= 3.0 * r;
    values.extend([
        ("points", lc.neighbours.into()),
        ("eigen_fraction", lc.fraction.into()),
        ("tangent_fraction", te.fraction.into()),
        ("mean_to_q", te.mean_to_q.into()),
        ("max_point_to_q", te.max_point_to_q.into()),
        ("eigen_pass", lc.pass.into()),
        ("tangent_pass", tangent_pass.into()),
        ("mean_pass", mean_pass.into()),
        ("spread_pass", spread_pass.into()),
        ("pass", (lc.pass && tangent_pass && mean_pass && spread_pass).into()),
    ]);
    Ok(vec![(values, false)])
}

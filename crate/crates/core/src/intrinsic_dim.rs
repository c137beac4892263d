//! Intrinsic-dimension estimators: greedy covers for the doubling dimension and
//! neighbourhood covariance spectra for the local covariance dimension.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::manifolds::{closest_point, tangent_basis, ManifoldSpec};
use crate::math::{covariance_and_mean, diameter, dist, dist_sq, projection_energy, top_eigenvalues};

/// Greedy cover of `points` by balls of `radius` centred at data points.
///
/// Each step picks the uncovered point whose ball covers the most uncovered
/// points (lowest index on ties). Returns indices into `points`.
pub fn greedy_cover(points: &[&[f64]], radius: f64) -> Result<Vec<usize>> {
    if !(radius > 0.0) {
        return invalid(format!("cover radius must be positive, got {radius}"));
    }
    let n = points.len();
    let r2 = radius * radius;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist_sq(points[i], points[j]) <= r2).collect())
        .collect();
    let mut covered = vec![false; n];
    let mut gain: Vec<usize> = neighbours.iter().map(Vec::len).collect();
    let mut remaining = n;
    let mut centers = Vec::new();
    while remaining > 0 {
        let best = (0..n)
            .filter(|&i| !covered[i])
            .max_by(|&a, &b| gain[a].cmp(&gain[b]).then(b.cmp(&a)))
            .expect("an uncovered point exists");
        centers.push(best);
        for &j in &neighbours[best] {
            if !covered[j] {
                covered[j] = true;
                remaining -= 1;
                // Points near j lose j from their gain (neighbourhoods are symmetric).
                for &k in &neighbours[j] {
                    gain[k] -= 1;
                }
            }
        }
    }
    Ok(centers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingProbe {
    pub center_index: usize,
    pub radius: f64,
    /// Points of the dataset inside B(center, radius).
    pub ball_size: usize,
    /// Greedy cover size of those points at radius/2.
    pub cover_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub d_hat: f64,
    pub probes: Vec<DoublingProbe>,
}

/// Estimates the doubling dimension as the max over random probes of
/// log₂(cover count), each probe covering B(x, r) ∩ S at r/2 with x a random
/// data point and r log-uniform in [diam/20, diam].
pub fn estimate_doubling_dimension<R: Rng + ?Sized>(
    points: &[&[f64]],
    num_probes: usize,
    rng: &mut R,
) -> Result<DoublingEstimate> {
    if points.len() < 2 {
        return Err(Error::InsufficientSample { needed: 2, got: points.len() });
    }
    if num_probes == 0 {
        return invalid("need at least one probe");
    }
    let diam = diameter(points)?;
    if diam == 0.0 {
        return Ok(DoublingEstimate { d_hat: 0.0, probes: Vec::new() });
    }
    let (lo, hi) = ((diam / 20.0).ln(), diam.ln());
    let mut probes = Vec::with_capacity(num_probes);
    for _ in 0..num_probes {
        let center_index = rng.random_range(0..points.len());
        let radius = rng.random_range(lo..=hi).exp();
        let c = points[center_index];
        let ball: Vec<&[f64]> = points.iter().copied().filter(|p| dist(p, c) <= radius).collect();
        let cover_count = greedy_cover(&ball, radius / 2.0)?.len();
        probes.push(DoublingProbe { center_index, radius, ball_size: ball.len(), cover_count });
    }
    let d_hat = probes.iter().map(|p| (p.cover_count as f64).log2()).fold(0.0, f64::max);
    Ok(DoublingEstimate { d_hat, probes })
}

/// Share of the covariance trace carried by the top `d` eigenvalues. A zero
/// covariance counts as fully captured.
pub fn top_energy_fraction(points: &[&[f64]], d: usize) -> Result<f64> {
    let (_, cov) = covariance_and_mean(points)?;
    let trace = cov.trace();
    if trace <= 0.0 {
        return Ok(1.0);
    }
    let k = d.min(cov.dim());
    let top: f64 = top_eigenvalues(&cov, k)?.iter().sum();
    Ok((top / trace).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCovariance {
    pub neighbours: usize,
    pub fraction: f64,
    pub pass: bool,
}

/// Checks whether the points of `points` inside B(center, r) have `d`
/// directions holding at least a (1 − ε) share of their covariance trace.
pub fn local_covariance_check(
    points: &[&[f64]],
    center: &[f64],
    r: f64,
    d: usize,
    eps_target: f64,
) -> Result<LocalCovariance> {
    if !(r > 0.0) {
        return invalid("neighbourhood radius must be positive");
    }
    if d == 0 {
        return invalid("target dimension must be at least 1");
    }
    if !(0.0..1.0).contains(&eps_target) {
        return invalid(format!("ε must lie in [0, 1), got {eps_target}"));
    }
    let near: Vec<&[f64]> = points.iter().copied().filter(|p| dist(p, center) <= r).collect();
    if near.len() < d + 2 {
        return Err(Error::InsufficientSample { needed: d + 2, got: near.len() });
    }
    let fraction = top_energy_fraction(&near, d)?;
    Ok(LocalCovariance { neighbours: near.len(), fraction, pass: fraction >= 1.0 - eps_target })
}

/// Aggregate over several neighbourhoods of the same radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocCovResult {
    pub d: usize,
    pub eps_target: f64,
    pub r: f64,
    pub fractions: Vec<f64>,
    pub pass: bool,
}

pub fn local_covariance_dimension(
    points: &[&[f64]],
    centers: &[&[f64]],
    r: f64,
    d: usize,
    eps_target: f64,
) -> Result<LocCovResult> {
    let mut fractions = Vec::with_capacity(centers.len());
    for c in centers {
        fractions.push(local_covariance_check(points, c, r, d, eps_target)?.fraction);
    }
    let pass = fractions.iter().all(|&f| f >= 1.0 - eps_target);
    Ok(LocCovResult { d, eps_target, r, fractions, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentEnergy {
    /// Σ‖proj_T(x − μ)‖² / Σ‖x − μ‖², T the tangent space at q.
    pub fraction: f64,
    pub mean: Vec<f64>,
    /// Closest manifold point to the mean.
    pub q: Vec<f64>,
    pub mean_to_q: f64,
    pub max_point_to_q: f64,
}

/// Energy of a manifold patch captured by the tangent space at the manifold
/// point closest to its mean.
pub fn tangent_energy_check(points: &[&[f64]], spec: &ManifoldSpec) -> Result<TangentEnergy> {
    if points.is_empty() {
        return Err(Error::InsufficientSample { needed: 1, got: 0 });
    }
    let (mean, cov) = covariance_and_mean(points)?;
    let q = closest_point(spec, &mean)?;
    let basis = tangent_basis(spec, &q)?;
    let total = cov.trace() * points.len() as f64;
    let fraction = if total > 0.0 {
        (projection_energy(points, &basis, &mean)? / total).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let mean_to_q = dist(&mean, &q);
    let max_point_to_q = points.iter().map(|x| dist(x, &q)).fold(0.0, f64::max);
    Ok(TangentEnergy { fraction, mean, q, mean_to_q, max_point_to_q })
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BuildParams, SplitRule};
use crate::error::{invalid, Error, Result};
use crate::math::{dist, dist_sq, dot, lower_median, mean, sample_direction, Dataset, Direction};

/// Which RPTree-Mean sub-rule produced a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanBranch {
    Projection,
    Distance,
}

/// The scalar a split thresholds on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cut {
    /// x ↦ v·x
    Hyperplane(Direction),
    /// x ↦ ‖x − center‖
    Sphere { center: Vec<f64> },
}

impl Cut {
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Cut::Hyperplane(v) => dot(&v.0, x),
            Cut::Sphere { center } => dist(center, x),
        }
    }

    /// Range of the cut value over the ball B(c, r), as (lo, hi).
    pub fn ball_range(&self, c: &[f64], r: f64) -> (f64, f64) {
        match self {
            Cut::Hyperplane(v) => {
                let mid = dot(&v.0, c);
                let half = r * v.norm();
                (mid - half, mid + half)
            }
            Cut::Sphere { center } => {
                let d = dist(center, c);
                ((d - r).max(0.0), d + r)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub cut: Cut,
    pub median: f64,
    pub jitter: f64,
    /// `median + jitter`; points with cut value strictly below go left.
    pub threshold: f64,
    /// Δ̃: max distance from the pivot to the cell's points.
    pub radius_estimate: f64,
    /// Dataset index of the pivot used for Δ̃.
    pub pivot_index: usize,
    pub branch: Option<MeanBranch>,
}

impl SplitRecord {
    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        self.cut.value(x) < self.threshold
    }
}

#[derive(Debug, Clone)]
pub struct CellSplit {
    pub record: SplitRecord,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Δ̃ = max ‖pivot − y‖ over the cell.
pub fn estimate_cell_radius(points: &[&[f64]], pivot: usize) -> Result<f64> {
    let p = match points.get(pivot) {
        Some(p) => *p,
        None if points.is_empty() => return invalid("radius estimate of an empty cell"),
        None => return invalid(format!("pivot {pivot} out of range for {} points", points.len())),
    };
    Ok(points.iter().map(|y| dist_sq(p, y)).fold(0.0, f64::max).sqrt())
}

/// Half-width of the jitter interval, 6Δ̃/√D.
#[inline]
pub fn jitter_half_width(radius_estimate: f64, dim: usize) -> f64 {
    6.0 * radius_estimate / (dim as f64).sqrt()
}

/// Thresholds `values` at `lower_median + jitter`. Returns the median, the
/// threshold, and the positions sent left (strictly below) and right.
pub fn threshold_split(values: &[f64], jitter: f64) -> (f64, f64, Vec<usize>, Vec<usize>) {
    let mut scratch = values.to_vec();
    let median = lower_median(&mut scratch).expect("non-empty cell");
    let threshold = median + jitter;
    let (left, right): (Vec<usize>, Vec<usize>) = (0..values.len()).partition(|&i| values[i] < threshold);
    (median, threshold, left, right)
}

/// Splits the cell holding `indices` according to `params.rule`.
///
/// Fails with [`Error::InvalidArgument`] for cells with fewer than two points
/// or zero radius estimate, and with [`Error::DegenerateSplit`] when every
/// attempt leaves a child empty.
pub fn split_cell<R: Rng + ?Sized>(
    dataset: &Dataset,
    indices: &[usize],
    params: &BuildParams,
    rng: &mut R,
) -> Result<CellSplit> {
    if indices.len() < 2 {
        return invalid("a cell needs at least two points to split");
    }
    let points = dataset.select(indices);
    let pivot_pos = rng.random_range(0..points.len());
    let radius_estimate = estimate_cell_radius(&points, pivot_pos)?;
    if radius_estimate == 0.0 {
        return invalid("cell has zero radius estimate");
    }
    let pivot_index = indices[pivot_pos];

    match params.rule {
        SplitRule::Max => {
            let half = jitter_half_width(radius_estimate, dataset.dim());
            for _ in 0..=params.degenerate_retries {
                let v = sample_direction(dataset.dim(), rng)?;
                let jitter = rng.random_range(-half..=half);
                let proj: Vec<f64> = points.iter().map(|p| dot(p, &v.0)).collect();
                let (median, threshold, l, r) = threshold_split(&proj, jitter);
                if !l.is_empty() && !r.is_empty() {
                    let record = SplitRecord {
                        cut: Cut::Hyperplane(v),
                        median,
                        jitter,
                        threshold,
                        radius_estimate,
                        pivot_index,
                        branch: None,
                    };
                    return Ok(finish(record, indices, l, r));
                }
            }
            Err(Error::DegenerateSplit)
        }
        SplitRule::Mean => {
            let diam_sq = crate::math::diameter(&points)?.powi(2);
            let mu = mean(&points)?;
            // Average squared interpoint distance = 2 · mean squared deviation.
            let avg_sq = 2.0 * points.iter().map(|p| dist_sq(p, &mu)).sum::<f64>() / points.len() as f64;
            if diam_sq <= params.mean_rule_constant * avg_sq {
                for _ in 0..=params.degenerate_retries {
                    let v = sample_direction(dataset.dim(), rng)?;
                    let proj: Vec<f64> = points.iter().map(|p| dot(p, &v.0)).collect();
                    let (median, threshold, l, r) = threshold_split(&proj, 0.0);
                    if !l.is_empty() && !r.is_empty() {
                        let record = SplitRecord {
                            cut: Cut::Hyperplane(v),
                            median,
                            jitter: 0.0,
                            threshold,
                            radius_estimate,
                            pivot_index,
                            branch: Some(MeanBranch::Projection),
                        };
                        return Ok(finish(record, indices, l, r));
                    }
                }
                Err(Error::DegenerateSplit)
            } else {
                let dists: Vec<f64> = points.iter().map(|p| dist(p, &mu)).collect();
                let (median, threshold, l, r) = threshold_split(&dists, 0.0);
                if l.is_empty() || r.is_empty() {
                    // Deterministic given the cell, so retrying cannot help.
                    return Err(Error::DegenerateSplit);
                }
                let record = SplitRecord {
                    cut: Cut::Sphere { center: mu },
                    median,
                    jitter: 0.0,
                    threshold,
                    radius_estimate,
                    pivot_index,
                    branch: Some(MeanBranch::Distance),
                };
                Ok(finish(record, indices, l, r))
            }
        }
    }
}

fn finish(record: SplitRecord, indices: &[usize], l: Vec<usize>, r: Vec<usize>) -> CellSplit {
    CellSplit {
        record,
        left: l.into_iter().map(|i| indices[i]).collect(),
        right: r.into_iter().map(|i| indices[i]).collect(),
    }
}

//! Shared numerical primitives.

mod eigen;
mod meb;

pub use eigen::{jacobi_eigen, top_eigenvalues, SymmetricEigen, SymmetricMatrix};
pub use meb::{meb_radius, DEFAULT_MEB_TOLERANCE};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// An ordered set of points in ℝ^D, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("ambient dimension must be positive");
        }
        Ok(Dataset { dim, data: Vec::new() })
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Result<Self> {
        let mut ds = Self::new(dim)?;
        ds.data.reserve(rows * dim);
        Ok(ds)
    }

    /// Builds a dataset from a flat row-major buffer.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("ambient dimension must be positive");
        }
        if !data.len().is_multiple_of(dim) {
            return invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            ));
        }
        if let Some(bad) = data.iter().position(|x| !x.is_finite()) {
            return invalid(format!("non-finite coordinate at row {}", bad / dim));
        }
        Ok(Dataset { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = match rows.first() {
            Some(r) => r.as_ref().len(),
            None => return invalid("cannot infer dimension from zero rows"),
        };
        let mut ds = Self::with_capacity(dim, rows.len())?;
        for r in rows {
            ds.push(r.as_ref())?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        if point.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite coordinate");
        }
        self.data.extend_from_slice(point);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Borrowed views of every row.
    pub fn refs(&self) -> Vec<&[f64]> {
        self.rows().collect()
    }

    /// Borrowed views of the selected rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Vec<&[f64]> {
        indices.iter().map(|&i| self.row(i)).collect()
    }
}

/// A direction in ℝ^D. Random directions have i.i.d. N(0, 1/D) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction(pub Vec<f64>);

impl Direction {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Closed ball B(center, radius).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return invalid(format!("ball radius must be finite and non-negative, got {radius}"));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        dist_sq(&self.center, point) <= self.radius * self.radius
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Draws a direction with i.i.d. N(0, 1/D) coordinates, so E‖v‖² = 1.
pub fn sample_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Direction> {
    if dim == 0 {
        return invalid("direction dimension must be positive");
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let coords = (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect();
    Ok(Direction(coords))
}

/// Projects each point onto `v`, preserving order.
pub fn project(points: &[&[f64]], v: &Direction) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            if p.len() != v.dim() {
                Err(Error::DimensionMismatch { expected: v.dim(), got: p.len() })
            } else {
                Ok(dot(p, &v.0))
            }
        })
        .collect()
}

/// Largest pairwise distance; exhaustive O(n²).
pub fn diameter(points: &[&[f64]]) -> Result<f64> {
    if points.is_empty() {
        return invalid("diameter of an empty set");
    }
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(dist_sq(a, b));
        }
    }
    Ok(best.sqrt())
}

pub fn mean(points: &[&[f64]]) -> Result<Vec<f64>> {
    let first = match points.first() {
        Some(p) => p,
        None => return invalid("mean of an empty set"),
    };
    let mut mu = vec![0.0; first.len()];
    for p in points {
        for (m, x) in mu.iter_mut().zip(p.iter()) {
            *m += x;
        }
    }
    let n = points.len() as f64;
    mu.iter_mut().for_each(|m| *m /= n);
    Ok(mu)
}

/// Population mean and covariance, cov = (1/n) Σ (x − μ)(x − μ)ᵀ.
pub fn covariance_and_mean(points: &[&[f64]]) -> Result<(Vec<f64>, SymmetricMatrix)> {
    if points.len() < 2 {
        return invalid(format!("covariance needs at least 2 points, got {}", points.len()));
    }
    let mu = mean(points)?;
    let dim = mu.len();
    let mut acc = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for p in points {
        for (c, (x, m)) in centered.iter_mut().zip(p.iter().zip(&mu)) {
            *c = x - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            for j in i..dim {
                acc[i * dim + j] += ci * centered[j];
            }
        }
    }
    let n = points.len() as f64;
    let mut cov = SymmetricMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            cov.set(i, j, acc[i * dim + j] / n);
        }
    }
    Ok((mu, cov))
}

/// Σᵢ Σ_b ⟨xᵢ − origin, b⟩² for an orthonormal `basis`.
pub fn projection_energy(points: &[&[f64]], basis: &[Direction], origin: &[f64]) -> Result<f64> {
    check_orthonormal(basis, 1e-8)?;
    for b in basis {
        if b.dim() != origin.len() {
            return Err(Error::DimensionMismatch { expected: origin.len(), got: b.dim() });
        }
    }
    let mut centered = vec![0.0; origin.len()];
    let mut total = 0.0;
    for p in points {
        if p.len() != origin.len() {
            return Err(Error::DimensionMismatch { expected: origin.len(), got: p.len() });
        }
        for (c, (x, o)) in centered.iter_mut().zip(p.iter().zip(origin)) {
            *c = x - o;
        }
        total += basis.iter().map(|b| dot(&centered, &b.0).powi(2)).sum::<f64>();
    }
    Ok(total)
}

pub(crate) fn check_orthonormal(basis: &[Direction], tol: f64) -> Result<()> {
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            if a.dim() != b.dim() {
                return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
            }
            let want = if i == j { 1.0 } else { 0.0 };
            let got = dot(&a.0, &b.0);
            if (got - want).abs() > tol {
                return invalid(format!(
                    "basis is not orthonormal: <b{i}, b{j}> = {got:.3e}"
                ));
            }
        }
    }
    Ok(())
}

/// Lower median: the ⌈n/2⌉-th smallest value. Reorders `values`.
pub fn lower_median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let k = values.len().div_ceil(2) - 1;
    let (_, m, _) = values.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    Some(*m)
}

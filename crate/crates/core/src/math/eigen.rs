use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Dense symmetric matrix. Both triangles are stored and kept mirrored by
/// every mutator, so symmetry is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Accepts a square row-major matrix; rejects it unless exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return invalid("matrix is not square");
            }
            for (j, &x) in row.iter().enumerate() {
                if x != rows[j][i] {
                    return invalid(format!("matrix is not symmetric at ({i}, {j})"));
                }
                m.data[i * dim + j] = x;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes entry (i, j) and its mirror (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }
}

/// Eigen-decomposition with eigenvalues in descending order; `vectors[k]` is
/// the unit eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass falls below
/// 1e-12 times the matrix scale (|trace|, or the Frobenius norm when the trace
/// cancels).
pub fn jacobi_eigen(matrix: &SymmetricMatrix) -> SymmetricEigen {
    let n = matrix.dim();
    let mut a = matrix.clone();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = matrix.trace().abs().max(matrix.frobenius_norm());
    let tol = 1e-12 * scale;

    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_norm() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;

                a.set(p, p, a.get(p, p) - t * apq);
                a.set(q, q, a.get(q, q) + t * apq);
                a.set(p, q, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, c * arp - s * arq);
                    a.set(r, q, s * arp + c * arq);
                }
                // Columns of v accumulate the rotations.
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
    SymmetricEigen {
        values: order.iter().map(|&i| a.get(i, i)).collect(),
        vectors: order.iter().map(|&k| v.iter().map(|row| row[k]).collect()).collect(),
    }
}

/// The `k` largest eigenvalues, descending.
pub fn top_eigenvalues(cov: &SymmetricMatrix, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > cov.dim() {
        return invalid(format!("k = {k} outside 1..={}", cov.dim()));
    }
    let mut values = jacobi_eigen(cov).values;
    values.truncate(k);
    Ok(values)
}

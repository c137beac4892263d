//! Approximate minimum enclosing ball.
//!
//! Core-set refinement: solve the ball of a small working set, scan the full
//! set for the farthest point, add it, repeat. The working-set problem is the
//! simplex-constrained dual
//!
//! ```text
//! maximize  Φ(u) = Σ uᵢ‖pᵢ‖² − ‖Σ uᵢ pᵢ‖²,   u ≥ 0, Σ uᵢ = 1
//! ```
//!
//! solved by Frank-Wolfe with away steps on the working-set Gram matrix, so one
//! inner iteration costs O(|W|) regardless of the ambient dimension. √Φ is a
//! lower bound on the optimal radius, which gives the stopping certificate.

use super::dist_sq;
use crate::error::{invalid, Result};

pub const DEFAULT_MEB_TOLERANCE: f64 = 1e-6;

const MAX_INNER_ITERS: usize = 2_000_000;
const REFRESH_EVERY: usize = 512;

/// Returns `(center, radius)` with every point within `radius` of `center` and
/// `radius ≤ (1 + tolerance) · r_opt`.
pub fn meb_radius(points: &[&[f64]], tolerance: f64) -> Result<(Vec<f64>, f64)> {
    let origin = match points.first() {
        Some(p) => *p,
        None => return invalid("enclosing ball of an empty set"),
    };
    if !(tolerance > 0.0) {
        return invalid(format!("tolerance must be positive, got {tolerance}"));
    }
    let a = farthest(points, origin).0;
    let b = farthest(points, points[a]).0;
    if dist_sq(points[a], points[b]) == 0.0 {
        return Ok((origin.to_vec(), 0.0));
    }

    let mut solver = WorkingSet::new(origin);
    solver.push(points[a]);
    solver.push(points[b]);
    let mut members = vec![a, b];
    let accept = (1.0 + tolerance) * (1.0 + tolerance);

    loop {
        solver.solve(tolerance);
        let center = solver.center();
        let phi = solver.phi();
        let (far, far_d2) = farthest(points, &center);
        if far_d2 <= accept * phi || members.contains(&far) {
            // A member coming back as the farthest point means the inner
            // solve hit floating-point resolution; the ball is still valid.
            return Ok((center, far_d2.sqrt()));
        }
        solver.push(points[far]);
        members.push(far);
    }
}

fn farthest(points: &[&[f64]], from: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = dist_sq(p, from);
        if d > best.1 {
            best = (i, d);
        }
    }
    best
}

struct WorkingSet<'a> {
    origin: &'a [f64],
    /// Points shifted by `origin`.
    shifted: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl<'a> WorkingSet<'a> {
    fn new(origin: &'a [f64]) -> Self {
        WorkingSet { origin, shifted: Vec::new(), gram: Vec::new(), weights: Vec::new() }
    }

    fn push(&mut self, p: &[f64]) {
        let s: Vec<f64> = p.iter().zip(self.origin).map(|(x, o)| x - o).collect();
        let row: Vec<f64> = self.shifted.iter().map(|q| super::dot(q, &s)).collect();
        for (g, &x) in self.gram.iter_mut().zip(&row) {
            g.push(x);
        }
        let mut row = row;
        row.push(super::dot(&s, &s));
        self.gram.push(row);
        self.shifted.push(s);
        if self.weights.is_empty() {
            self.weights.push(1.0);
        } else {
            self.weights.push(0.0);
        }
    }

    fn gram_times_weights(&self) -> (Vec<f64>, f64) {
        let gu: Vec<f64> = self.gram.iter().map(|row| super::dot(row, &self.weights)).collect();
        let cc = super::dot(&gu, &self.weights);
        (gu, cc)
    }

    fn phi(&self) -> f64 {
        let (_, cc) = self.gram_times_weights();
        let diag: f64 = self.weights.iter().enumerate().map(|(i, u)| u * self.gram[i][i]).sum();
        diag - cc
    }

    fn center(&self) -> Vec<f64> {
        let mut c = self.origin.to_vec();
        for (u, s) in self.weights.iter().zip(&self.shifted) {
            if *u != 0.0 {
                for (ci, si) in c.iter_mut().zip(s) {
                    *ci += u * si;
                }
            }
        }
        c
    }

    /// Frank-Wolfe with away steps until max ‖pᵢ − c‖² ≤ (1 + tol) Φ.
    fn solve(&mut self, tol: f64) {
        let m = self.weights.len();
        let (mut gu, mut cc) = self.gram_times_weights();
        let mut d2 = vec![0.0; m];
        for iter in 0..MAX_INNER_ITERS {
            if iter % REFRESH_EVERY == REFRESH_EVERY - 1 {
                (gu, cc) = self.gram_times_weights();
            }
            for i in 0..m {
                d2[i] = (self.gram[i][i] - 2.0 * gu[i] + cc).max(0.0);
            }
            let phi: f64 = self.weights.iter().zip(&d2).map(|(u, d)| u * d).sum();
            if phi <= 0.0 {
                // All weight on a single point; move toward the farthest one.
                let j = argmax(&d2);
                if d2[j] == 0.0 {
                    return;
                }
                self.step_toward(j, 0.5, &mut gu, &mut cc);
                continue;
            }
            let j = argmax(&d2);
            let k = (0..m)
                .filter(|&i| self.weights[i] > 0.0)
                .min_by(|&a, &b| d2[a].total_cmp(&d2[b]))
                .expect("weights sum to one");
            let eps_plus = d2[j] / phi - 1.0;
            let eps_minus = 1.0 - d2[k] / phi;
            if eps_plus <= tol {
                return;
            }
            if eps_plus >= eps_minus {
                let lambda = eps_plus / (2.0 * (1.0 + eps_plus));
                self.step_toward(j, lambda, &mut gu, &mut cc);
            } else {
                let uk = self.weights[k];
                let cap = if uk < 1.0 { uk / (1.0 - uk) } else { f64::INFINITY };
                let lambda = (eps_minus / (2.0 * (1.0 - eps_minus))).min(cap);
                self.step_away(k, lambda, lambda == cap, &mut gu, &mut cc);
            }
        }
    }

    fn step_toward(&mut self, j: usize, lambda: f64, gu: &mut [f64], cc: &mut f64) {
        let keep = 1.0 - lambda;
        *cc = keep * keep * *cc + 2.0 * lambda * keep * gu[j] + lambda * lambda * self.gram[j][j];
        for (i, g) in gu.iter_mut().enumerate() {
            *g = keep * *g + lambda * self.gram[i][j];
        }
        self.weights.iter_mut().for_each(|u| *u *= keep);
        self.weights[j] += lambda;
    }

    fn step_away(&mut self, k: usize, lambda: f64, drop: bool, gu: &mut [f64], cc: &mut f64) {
        let grow = 1.0 + lambda;
        *cc = grow * grow * *cc - 2.0 * lambda * grow * gu[k] + lambda * lambda * self.gram[k][k];
        for (i, g) in gu.iter_mut().enumerate() {
            *g = grow * *g - lambda * self.gram[i][k];
        }
        self.weights.iter_mut().for_each(|u| *u *= grow);
        self.weights[k] -= lambda;
        if drop || self.weights[k] < 0.0 {
            self.weights[k] = 0.0;
        }
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{diameter, dist, mean, Dataset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points() {
        let pts: Vec<&[f64]> = vec![&[0.0, 0.0], &[2.0, 0.0]];
        let (c, r) = meb_radius(&pts, 1e-9).unwrap();
        assert!((r - 1.0).abs() < 1e-8);
        assert!((c[0] - 1.0).abs() < 1e-8 && c[1].abs() < 1e-8);
    }

    #[test]
    fn right_triangle_uses_hypotenuse_midpoint() {
        let pts: Vec<&[f64]> = vec![&[0.0, 0.0], &[3.0, 0.0], &[0.0, 4.0]];
        let (c, r) = meb_radius(&pts, 1e-9).unwrap();
        assert!((r - 2.5).abs() < 2.5e-8, "{r}");
        assert!(dist(&c, &[1.5, 2.0]) < 1e-3);
    }

    #[test]
    fn errors_and_trivial_cases() {
        assert!(meb_radius(&[], 1e-6).is_err());
        assert!(meb_radius(&[&[1.0]], 0.0).is_err());
        let (c, r) = meb_radius(&[&[1.0, 2.0]], 1e-6).unwrap();
        assert_eq!((c, r), (vec![1.0, 2.0], 0.0));
        let same: Vec<&[f64]> = vec![&[1.0, 1.0]; 5];
        assert_eq!(meb_radius(&same, 1e-6).unwrap().1, 0.0);
    }

    #[test]
    fn regular_simplex_radius() {
        // Standard basis of R^6: circumradius sqrt(1 − 1/6).
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let (_, r) = meb_radius(&refs, 1e-10).unwrap();
        let want = (1.0f64 - 1.0 / 6.0).sqrt();
        assert!(r >= want - 1e-12 && r <= want * (1.0 + 1e-10));
    }

    #[test]
    fn random_sets_satisfy_inequalities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let flat: Vec<f64> = (0..150).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ds = Dataset::from_flat(3, flat).unwrap();
            let pts = ds.refs();
            let tol = 1e-6;
            let (c, r) = meb_radius(&pts, tol).unwrap();
            let diam = diameter(&pts).unwrap();
            assert!(r >= diam / 2.0 && r <= diam);
            assert!(pts.iter().all(|p| dist(p, &c) <= r * (1.0 + tol)));
            // The centroid's farthest distance bounds the optimum from above,
            // so a (1+tol) ball cannot exceed it by more than that factor.
            let mu = mean(&pts).unwrap();
            let from_mean = pts.iter().map(|p| dist(p, &mu)).fold(0.0, f64::max);
            assert!(r <= from_mean * (1.0 + tol));
        }
    }

    #[test]
    fn high_dimensional_tight_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let flat: Vec<f64> = (0..2000 * 50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ds = Dataset::from_flat(50, flat).unwrap();
        let pts = ds.refs();
        let (_, loose) = meb_radius(&pts, 1e-4).unwrap();
        let (c, tight) = meb_radius(&pts, 1e-10).unwrap();
        assert!(tight <= loose * (1.0 + 1e-10));
        assert!(loose <= tight * (1.0 + 1e-4));
        assert!(pts.iter().all(|p| dist(p, &c) <= tight));
    }
}

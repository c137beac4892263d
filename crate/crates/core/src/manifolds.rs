//! Synthetic manifolds with known intrinsic dimension and condition number.
//!
//! Each manifold is defined in a low-dimensional model space ℝ^k (k = d + 1
//! for a d-sphere, d for a flat, 3 for a torus) and embedded isometrically
//! into ℝ^D through a seeded random orthonormal frame plus an offset.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{dist, dot, norm, Dataset, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ManifoldKind {
    /// d-sphere of radius `tau`; its condition number is `tau`.
    Sphere { d: usize, tau: f64 },
    /// Axis-aligned d-cube of side `extent` centred at the origin (globally);
    /// closest-point and tangent queries treat it as the full affine d-plane.
    Flat { d: usize, extent: f64 },
    /// Ring torus with tube radius `minor` and ring radius `major ≥ 2·minor`;
    /// its condition number is `minor`.
    Torus { minor: f64, major: f64 },
}

impl ManifoldKind {
    fn model_dim(&self) -> usize {
        match *self {
            ManifoldKind::Sphere { d, .. } => d + 1,
            ManifoldKind::Flat { d, .. } => d,
            ManifoldKind::Torus { .. } => 3,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ManifoldKind::Sphere { d, tau } => {
                if d == 0 || !(tau > 0.0) {
                    return invalid("sphere needs d ≥ 1 and τ > 0");
                }
            }
            ManifoldKind::Flat { d, extent } => {
                if d == 0 || !(extent > 0.0) {
                    return invalid("flat needs d ≥ 1 and extent > 0");
                }
            }
            ManifoldKind::Torus { minor, major } => {
                if !(minor > 0.0) || !(major >= 2.0 * minor) {
                    return invalid("torus needs minor > 0 and major ≥ 2·minor");
                }
            }
        }
        Ok(())
    }
}

/// Serialized form of a [`ManifoldSpec`]; the frame is rebuilt from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDesc {
    #[serde(flatten)]
    pub kind: ManifoldKind,
    pub ambient_dim: usize,
    #[serde(default)]
    pub embedding_seed: u64,
    #[serde(default)]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldDesc", into = "ManifoldDesc")]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    ambient_dim: usize,
    embedding_seed: u64,
    noise_sigma: f64,
    /// Orthonormal columns, each of length D.
    frame: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl TryFrom<ManifoldDesc> for ManifoldSpec {
    type Error = Error;

    fn try_from(d: ManifoldDesc) -> Result<Self> {
        ManifoldSpec::new(d.kind, d.ambient_dim, d.embedding_seed)?.with_noise(d.noise_sigma)
    }
}

impl From<ManifoldSpec> for ManifoldDesc {
    fn from(s: ManifoldSpec) -> Self {
        ManifoldDesc {
            kind: s.kind,
            ambient_dim: s.ambient_dim,
            embedding_seed: s.embedding_seed,
            noise_sigma: s.noise_sigma,
        }
    }
}

impl ManifoldSpec {
    pub fn new(kind: ManifoldKind, ambient_dim: usize, embedding_seed: u64) -> Result<Self> {
        kind.validate()?;
        let k = kind.model_dim();
        if ambient_dim < k {
            return invalid(format!("ambient dimension {ambient_dim} is below model dimension {k}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(embedding_seed);
        let frame = random_frame(ambient_dim, k, &mut rng);
        let offset = (0..ambient_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(ManifoldSpec { kind, ambient_dim, embedding_seed, noise_sigma: 0.0, frame, offset })
    }

    pub fn with_noise(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return invalid("noise sigma must be non-negative");
        }
        self.noise_sigma = sigma;
        Ok(self)
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere { d, .. } | ManifoldKind::Flat { d, .. } => d,
            ManifoldKind::Torus { .. } => 2,
        }
    }

    pub fn condition_number(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { tau, .. } => tau,
            ManifoldKind::Flat { .. } => f64::INFINITY,
            ManifoldKind::Torus { minor, .. } => minor,
        }
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    /// Embedded image of the model-space origin (the sphere's centre).
    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn embed(&self, local: &[f64]) -> Vec<f64> {
        let mut x = self.offset.clone();
        for (col, &y) in self.frame.iter().zip(local) {
            for (xi, ci) in x.iter_mut().zip(col) {
                *xi += y * ci;
            }
        }
        x
    }

    pub fn embed_direction(&self, local: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient_dim];
        for (col, &y) in self.frame.iter().zip(local) {
            for (xi, ci) in x.iter_mut().zip(col) {
                *xi += y * ci;
            }
        }
        x
    }

    /// Model-space coordinates of the orthogonal projection of `x` onto the
    /// embedded k-subspace.
    pub fn local(&self, x: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = x.iter().zip(&self.offset).map(|(a, o)| a - o).collect();
        self.frame.iter().map(|col| dot(col, &shifted)).collect()
    }

    fn scale(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { tau, .. } => tau,
            ManifoldKind::Flat { extent, .. } => extent,
            ManifoldKind::Torus { major, .. } => major,
        }
    }

    fn sample_local<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Sphere { d, tau } => {
                let g: Vec<f64> = (0..=d).map(|_| StandardNormal.sample(rng)).collect();
                let n = norm(&g);
                g.iter().map(|x| tau * x / n).collect()
            }
            ManifoldKind::Flat { d, extent } => {
                (0..d).map(|_| rng.random_range(-0.5 * extent..0.5 * extent)).collect()
            }
            ManifoldKind::Torus { minor, major } => loop {
                let theta = rng.random_range(0.0..2.0 * PI);
                let phi = rng.random_range(0.0..2.0 * PI);
                let u: f64 = rng.random();
                // Area element is proportional to (major + minor·cos θ).
                if u * (major + minor) <= major + minor * theta.cos() {
                    break torus_point(minor, major, theta, phi);
                }
            },
        }
    }
}

fn torus_point(minor: f64, major: f64, theta: f64, phi: f64) -> Vec<f64> {
    let rho = major + minor * theta.cos();
    vec![rho * phi.cos(), rho * phi.sin(), minor * theta.sin()]
}

/// `k` orthonormal vectors in ℝ^D from Gaussian draws, with two passes of
/// modified Gram-Schmidt.
pub fn random_frame<R: Rng + ?Sized>(dim: usize, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    while frame.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for q in &frame {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            v.iter_mut().for_each(|a| *a /= n);
            frame.push(v);
        }
    }
    frame
}

/// `n` points uniform on the manifold, plus optional isotropic ambient noise.
/// The model-space draws do not depend on D, so the same seed gives the same
/// intrinsic sample under every embedding.
pub fn sample_global<R: Rng + ?Sized>(spec: &ManifoldSpec, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let locals: Vec<Vec<f64>> = (0..n).map(|_| spec.sample_local(rng)).collect();
    let mut ds = Dataset::with_capacity(spec.ambient_dim, n)?;
    for y in &locals {
        let mut x = spec.embed(y);
        if spec.noise_sigma > 0.0 {
            for xi in x.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *xi += spec.noise_sigma * z;
            }
        }
        ds.push(&x)?;
    }
    Ok(ds)
}

const MIN_ACCEPTANCE: f64 = 1e-4;
const MIN_ATTEMPTS_BEFORE_GIVING_UP: usize = 10_000;

/// `n` manifold points within ambient distance `r` of `base` (noise-free).
///
/// Sphere patches with r < τ sample a tangent disk and retract radially;
/// torus patches sample an angular box known to contain the patch; flats
/// sample the d-ball directly. All candidates are then filtered by
/// ‖x − base‖ ≤ r.
pub fn sample_patch<R: Rng + ?Sized>(
    spec: &ManifoldSpec,
    base: &[f64],
    r: f64,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if !(r > 0.0) {
        return invalid("patch radius must be positive");
    }
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    check_on_manifold(spec, base)?;
    let base_local = spec.local(base);

    let mut proposal: Box<dyn FnMut(&mut R) -> Vec<f64>> = match spec.kind {
        ManifoldKind::Sphere { d, tau } if r < tau => {
            let theta_max = 2.0 * (r / (2.0 * tau)).asin();
            let rho = tau * theta_max.tan();
            let tangent = sphere_tangent_local(&base_local, d);
            let base_local = base_local.clone();
            Box::new(move |rng: &mut R| {
                let t = uniform_in_ball(d, rho, rng);
                let mut y = base_local.clone();
                for (b, &c) in tangent.iter().zip(&t) {
                    y.iter_mut().zip(b).for_each(|(yi, bi)| *yi += c * bi);
                }
                let n = norm(&y);
                y.iter().map(|v| tau * v / n).collect()
            })
        }
        ManifoldKind::Sphere { .. } => Box::new(|rng: &mut R| spec.sample_local(rng)),
        ManifoldKind::Flat { d, .. } => {
            let base_local = base_local.clone();
            Box::new(move |rng: &mut R| {
                let t = uniform_in_ball(d, r, rng);
                base_local.iter().zip(&t).map(|(a, b)| a + b).collect()
            })
        }
        ManifoldKind::Torus { minor, major } => {
            let (theta0, phi0) = torus_angles(major, &base_local);
            // |Δθ| and |Δφ| are bounded by chords of the tube circle and of the
            // inner equator respectively.
            let half_theta = 2.0 * (r / (2.0 * minor)).min(1.0).asin();
            let half_phi = 2.0 * (r / (2.0 * (major - minor))).min(1.0).asin();
            Box::new(move |rng: &mut R| loop {
                let theta = theta0 + rng.random_range(-half_theta..=half_theta);
                let phi = phi0 + rng.random_range(-half_phi..=half_phi);
                let u: f64 = rng.random();
                if u * (major + minor) <= major + minor * theta.cos() {
                    break torus_point(minor, major, theta, phi);
                }
            })
        }
    };

    let mut ds = Dataset::with_capacity(spec.ambient_dim, n)?;
    let mut attempts = 0usize;
    while ds.len() < n {
        attempts += 1;
        let x = spec.embed(&proposal(rng));
        if dist(&x, base) <= r {
            ds.push(&x)?;
        }
        if attempts >= MIN_ATTEMPTS_BEFORE_GIVING_UP {
            let rate = ds.len() as f64 / attempts as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::GaveUp { attempts, accepted: ds.len(), rate });
            }
        }
    }
    Ok(ds)
}

pub(crate) fn uniform_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm(&g);
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / d as f64) / n;
    g.iter().map(|x| x * scale).collect()
}

fn torus_angles(major: f64, p: &[f64]) -> (f64, f64) {
    let phi = p[1].atan2(p[0]);
    let rho = p[0].hypot(p[1]);
    (p[2].atan2(rho - major), phi)
}

/// Orthonormal basis (in model space ℝ^{d+1}) of the sphere's tangent space at
/// `p`: the standard basis projected off the radial direction, keeping the d
/// largest residuals.
fn sphere_tangent_local(p: &[f64], d: usize) -> Vec<Vec<f64>> {
    let u: Vec<f64> = {
        let n = norm(p);
        p.iter().map(|x| x / n).collect()
    };
    let mut order: Vec<usize> = (0..=d).collect();
    // The axis most aligned with u has the smallest residual; drop it.
    order.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    for &axis in order.iter().take(d) {
        let mut v = vec![0.0; d + 1];
        v[axis] = 1.0;
        for _ in 0..2 {
            for q in std::iter::once(&u).chain(basis.iter()) {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm(&v);
        v.iter_mut().for_each(|a| *a /= n);
        basis.push(v);
    }
    basis
}

fn check_on_manifold(spec: &ManifoldSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.ambient_dim {
        return Err(Error::DimensionMismatch { expected: spec.ambient_dim, got: x.len() });
    }
    let q = closest_point(spec, x).map_err(|_| Error::InvalidArgument("point is off the manifold".into()))?;
    let tol = 1e-8 * spec.scale().max(1.0);
    let gap = dist(&q, x);
    if gap > tol {
        return invalid(format!("point is {gap:.3e} away from the manifold"));
    }
    Ok(())
}

/// Nearest point of the manifold to `y`.
pub fn closest_point(spec: &ManifoldSpec, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != spec.ambient_dim {
        return Err(Error::DimensionMismatch { expected: spec.ambient_dim, got: y.len() });
    }
    let p = spec.local(y);
    let q = match spec.kind {
        ManifoldKind::Sphere { tau, .. } => {
            let n = norm(&p);
            if n <= 1e-12 * tau {
                return Err(Error::Singular("sphere centre".into()));
            }
            p.iter().map(|x| tau * x / n).collect()
        }
        ManifoldKind::Flat { .. } => p,
        ManifoldKind::Torus { minor, major } => {
            let rho = p[0].hypot(p[1]);
            if rho <= 1e-12 * major {
                return Err(Error::Singular("torus axis".into()));
            }
            let ring = [major * p[0] / rho, major * p[1] / rho, 0.0];
            let w: Vec<f64> = p.iter().zip(&ring).map(|(a, b)| a - b).collect();
            let wn = norm(&w);
            if wn <= 1e-12 * minor {
                return Err(Error::Singular("torus core circle".into()));
            }
            ring.iter().zip(&w).map(|(c, wi)| c + minor * wi / wn).collect()
        }
    };
    Ok(spec.embed(&q))
}

/// Orthonormal basis of the tangent space at a manifold point `q`.
pub fn tangent_basis(spec: &ManifoldSpec, q: &[f64]) -> Result<Vec<Direction>> {
    check_on_manifold(spec, q)?;
    let p = spec.local(q);
    let local: Vec<Vec<f64>> = match spec.kind {
        ManifoldKind::Sphere { d, .. } => sphere_tangent_local(&p, d),
        ManifoldKind::Flat { d, .. } => (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect(),
        ManifoldKind::Torus { major, .. } => {
            let (theta, phi) = torus_angles(major, &p);
            vec![
                vec![-phi.sin(), phi.cos(), 0.0],
                vec![-theta.sin() * phi.cos(), -theta.sin() * phi.sin(), theta.cos()],
            ]
        }
    };
    Ok(local.iter().map(|v| Direction(spec.embed_direction(v))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{covariance_and_mean, dist_sq, top_eigenvalues};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sphere(d: usize, tau: f64, dim: usize) -> ManifoldSpec {
        ManifoldSpec::new(ManifoldKind::Sphere { d, tau }, dim, 3).unwrap()
    }

    fn torus(dim: usize) -> ManifoldSpec {
        ManifoldSpec::new(ManifoldKind::Torus { minor: 1.0, major: 3.0 }, dim, 4).unwrap()
    }

    #[test]
    fn frame_is_orthonormal() {
        let s = sphere(3, 1.0, 20);
        for (i, a) in s.frame().iter().enumerate() {
            for (j, b) in s.frame().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn embedding_preserves_model_distances() {
        let s = torus(12);
        let mut r = rng(1);
        for _ in 0..100 {
            let a = s.sample_local(&mut r);
            let b = s.sample_local(&mut r);
            let model = dist(&a, &b);
            assert!((dist(&s.embed(&a), &s.embed(&b)) - model).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ManifoldSpec::new(ManifoldKind::Sphere { d: 2, tau: 1.0 }, 2, 0).is_err());
        assert!(ManifoldSpec::new(ManifoldKind::Torus { minor: 1.0, major: 1.5 }, 5, 0).is_err());
        assert!(ManifoldSpec::new(ManifoldKind::Flat { d: 0, extent: 1.0 }, 5, 0).is_err());
    }

    #[test]
    fn serde_round_trip_rebuilds_frame() {
        let s = sphere(2, 1.5, 10).with_noise(0.01).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"sphere\""));
        let back: ManifoldSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn sphere_samples_lie_on_sphere() {
        let s = sphere(2, 1.0, 10);
        let ds = sample_global(&s, 500, &mut rng(2)).unwrap();
        for x in ds.rows() {
            assert!((dist(x, s.offset()) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_covariance_has_rank_d() {
        let s = ManifoldSpec::new(ManifoldKind::Flat { d: 2, extent: 1.0 }, 10, 5).unwrap();
        let ds = sample_global(&s, 1000, &mut rng(3)).unwrap();
        let (_, cov) = covariance_and_mean(&ds.refs()).unwrap();
        let ev = top_eigenvalues(&cov, 10).unwrap();
        let tr = cov.trace();
        assert!(ev[1] > 0.01 * tr);
        assert!(ev[2..].iter().all(|e| e.abs() <= 1e-10 * tr));
    }

    /// Distance from x to the ring circle, by dense search over the ring angle.
    fn ring_distance(s: &ManifoldSpec, x: &[f64]) -> f64 {
        let (a, b) = (&s.frame()[0], &s.frame()[1]);
        let at = |phi: f64| -> f64 {
            let c: Vec<f64> = (0..x.len())
                .map(|i| s.offset()[i] + 3.0 * (phi.cos() * a[i] + phi.sin() * b[i]))
                .collect();
            dist(&c, x)
        };
        let steps = 4096;
        let mut best = (0.0, f64::INFINITY);
        for k in 0..steps {
            let phi = 2.0 * PI * k as f64 / steps as f64;
            let d = at(phi);
            if d < best.1 {
                best = (phi, d);
            }
        }
        // Golden-section refinement around the best grid angle.
        let (mut lo, mut hi) = (best.0 - 2.0 * PI / steps as f64, best.0 + 2.0 * PI / steps as f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if at(m1) < at(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        at(0.5 * (lo + hi))
    }

    #[test]
    fn torus_samples_are_one_tube_radius_from_core() {
        let s = torus(8);
        let ds = sample_global(&s, 200, &mut rng(4)).unwrap();
        for x in ds.rows() {
            assert!((ring_distance(&s, x) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn same_seed_same_intrinsic_sample_across_embeddings() {
        let a = ManifoldSpec::new(ManifoldKind::Flat { d: 2, extent: 1.0 }, 20, 1).unwrap();
        let b = ManifoldSpec::new(ManifoldKind::Flat { d: 2, extent: 1.0 }, 100, 2).unwrap();
        let da = sample_global(&a, 50, &mut rng(9)).unwrap();
        let db = sample_global(&b, 50, &mut rng(9)).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                let (x, y) = (dist(da.row(i), da.row(j)), dist(db.row(i), db.row(j)));
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn closest_point_examples() {
        let s = sphere(2, 1.0, 6);
        let e1 = &s.frame()[0];
        let y: Vec<f64> = s.offset().iter().zip(e1).map(|(o, e)| o + 3.0 * e).collect();
        let q = closest_point(&s, &y).unwrap();
        let want: Vec<f64> = s.offset().iter().zip(e1).map(|(o, e)| o + e).collect();
        assert!(dist(&q, &want) < 1e-12);
        assert!(matches!(closest_point(&s, s.offset()), Err(Error::Singular(_))));

        let on = sample_global(&s, 1, &mut rng(1)).unwrap();
        let q = closest_point(&s, on.row(0)).unwrap();
        assert!(dist(&q, on.row(0)) < 1e-12);

        let t = torus(5);
        assert!(matches!(closest_point(&t, t.offset()), Err(Error::Singular(_))));
    }

    #[test]
    fn closest_point_beats_sampled_points() {
        let mut r = rng(6);
        for spec in [sphere(2, 1.0, 7), torus(7)] {
            let cloud = sample_global(&spec, 10_000, &mut r).unwrap();
            for _ in 0..5 {
                let y: Vec<f64> = spec.offset().iter().map(|o| o + r.random_range(-3.0..3.0)).collect();
                let q = closest_point(&spec, &y).unwrap();
                let dq = dist_sq(&y, &q);
                assert!(cloud.rows().all(|m| dq <= dist_sq(&y, m) + 1e-12));
            }
        }
    }

    #[test]
    fn tangent_bases() {
        let flat = ManifoldSpec::new(ManifoldKind::Flat { d: 3, extent: 2.0 }, 9, 2).unwrap();
        let p = sample_global(&flat, 1, &mut rng(0)).unwrap();
        let t = tangent_basis(&flat, p.row(0)).unwrap();
        for (b, col) in t.iter().zip(flat.frame()) {
            assert!(dist(&b.0, col) < 1e-15);
        }

        let s = sphere(3, 2.0, 9);
        let pts = sample_global(&s, 20, &mut rng(1)).unwrap();
        for q in pts.rows() {
            let basis = tangent_basis(&s, q).unwrap();
            assert_eq!(basis.len(), 3);
            let radial: Vec<f64> = q.iter().zip(s.offset()).map(|(a, b)| a - b).collect();
            for b in &basis {
                assert!(dot(&b.0, &radial).abs() < 1e-10);
            }
            crate::math::check_orthonormal(&basis, 1e-10).unwrap();
        }

        let off: Vec<f64> = pts.row(0).iter().map(|x| x + 0.1).collect();
        assert!(tangent_basis(&s, &off).is_err());
    }

    #[test]
    fn mean_minus_closest_point_is_normal() {
        let mut r = rng(7);
        for spec in [sphere(2, 1.0, 10), torus(10)] {
            for _ in 0..10 {
                let base = sample_global(&spec, 1, &mut r).unwrap();
                let patch = sample_patch(&spec, base.row(0), 0.3, 100, &mut r).unwrap();
                let mu = crate::math::mean(&patch.refs()).unwrap();
                let q = closest_point(&spec, &mu).unwrap();
                let normal: Vec<f64> = mu.iter().zip(&q).map(|(a, b)| a - b).collect();
                for b in tangent_basis(&spec, &q).unwrap() {
                    assert!(dot(&normal, &b.0).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn patches_stay_within_radius() {
        let mut r = rng(8);
        let flat = ManifoldSpec::new(ManifoldKind::Flat { d: 2, extent: 1.0 }, 6, 2).unwrap();
        for spec in [sphere(2, 1.0, 10), torus(10), flat] {
            for &rad in &[0.05, 0.3, 2.5] {
                let base = sample_global(&spec, 1, &mut r).unwrap();
                let patch = sample_patch(&spec, base.row(0), rad, 200, &mut r).unwrap();
                assert_eq!(patch.len(), 200);
                assert!(patch.rows().all(|x| dist(x, base.row(0)) <= rad));
                let mu = crate::math::mean(&patch.refs()).unwrap();
                assert!(dist(&mu, base.row(0)) <= rad);
                for v in [base.row(0).to_vec(), closest_point(&spec, &mu).unwrap()] {
                    let about_v: f64 = patch.rows().map(|x| dist_sq(x, &v)).sum();
                    let about_mu: f64 = patch.rows().map(|x| dist_sq(x, &mu)).sum();
                    assert!(about_v >= about_mu);
                }
            }
        }
    }

    #[test]
    fn whole_sphere_patch_stays_on_sphere() {
        let s = sphere(2, 1.0, 5);
        let base = sample_global(&s, 1, &mut rng(2)).unwrap();
        let patch = sample_patch(&s, base.row(0), 2.5, 100, &mut rng(3)).unwrap();
        assert!(patch.rows().all(|x| (dist(x, s.offset()) - 1.0).abs() < 1e-10));
    }

    #[test]
    fn patch_gives_up_on_tiny_acceptance() {
        // r = τ falls back to global rejection; a 60° cap on a 100-sphere
        // covers well under 1e-4 of it.
        let s = sphere(100, 1.0, 101);
        let base = sample_global(&s, 1, &mut rng(2)).unwrap();
        match sample_patch(&s, base.row(0), 1.0, 10, &mut rng(3)) {
            Err(Error::GaveUp { attempts, rate, .. }) => assert!(attempts >= 10_000 && rate < 1e-4),
            other => panic!("expected give-up, got {other:?}"),
        }
        let off = vec![0.0; 101];
        assert!(sample_patch(&s, &off, 0.1, 10, &mut rng(3)).is_err());
    }

    #[test]
    fn tangent_projection_nearly_preserves_patch_distances() {
        // Pairwise distances in a √ε·τ patch keep a (1 − ε) share in the
        // tangent space at the patch base.
        let mut r = rng(10);
        let s = sphere(2, 1.0, 10);
        for eps in [0.05f64, 0.1, 0.25] {
            let rad = eps.sqrt();
            let base = sample_global(&s, 1, &mut r).unwrap();
            let patch = sample_patch(&s, base.row(0), rad, 100, &mut r).unwrap();
            let basis = tangent_basis(&s, base.row(0)).unwrap();
            for i in 0..patch.len() {
                for j in i + 1..patch.len() {
                    let diff: Vec<f64> = patch.row(i).iter().zip(patch.row(j)).map(|(a, b)| a - b).collect();
                    let proj: f64 = basis.iter().map(|b| dot(&diff, &b.0).powi(2)).sum();
                    assert!(proj >= (1.0 - eps) * dot(&diff, &diff));
                }
            }
        }
    }
}

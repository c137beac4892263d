//! Monte Carlo estimates of how a single random split treats small balls
//! inside a cell, and of the projection tail probabilities behind them.
//!
//! Splits here are drawn from the raw RPTree-Max distribution: a fresh
//! direction, the lower median of the projected cell data, and a jitter of
//! ±6Δ̃/√D with Δ̃ from a random pivot. Degenerate splits are not resampled.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::manifolds::{random_frame, uniform_in_ball};
use crate::math::{dist, dot, lower_median, sample_direction, Dataset};
use crate::rptree::jitter_half_width;

pub const DEFAULT_CELL_POINTS: usize = 512;
pub const DEFAULT_SAMPLES_PER_BALL: usize = 256;
/// Fewest trials accepted by [`estimate_pair_split_probs`].
pub const MIN_PAIR_TRIALS: usize = 10_000;

/// Point estimate of a probability with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub p_hat: f64,
    pub trials: usize,
    pub half_width: f64,
}

impl EstimateWithCI {
    pub fn from_counts(hits: usize, trials: usize) -> Result<Self> {
        if trials == 0 {
            return invalid("an estimate needs at least one trial");
        }
        if hits > trials {
            return invalid(format!("{hits} hits out of {trials} trials"));
        }
        let p_hat = hits as f64 / trials as f64;
        let half_width = 1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
        Ok(EstimateWithCI { p_hat, trials, half_width })
    }

    pub fn lower(&self) -> f64 {
        self.p_hat - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.p_hat + self.half_width
    }
}

/// The ambient cell: `cell_points` uniform on a d-disk of radius Δ in ℝ^D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub cell_radius: f64,
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    #[serde(default = "default_cell_points")]
    pub cell_points: usize,
    #[serde(default = "default_samples_per_ball")]
    pub samples_per_ball: usize,
}

fn default_cell_points() -> usize {
    DEFAULT_CELL_POINTS
}

fn default_samples_per_ball() -> usize {
    DEFAULT_SAMPLES_PER_BALL
}

impl CellConfig {
    pub fn new(cell_radius: f64, intrinsic_dim: usize, ambient_dim: usize) -> Self {
        CellConfig {
            cell_radius,
            intrinsic_dim,
            ambient_dim,
            cell_points: DEFAULT_CELL_POINTS,
            samples_per_ball: DEFAULT_SAMPLES_PER_BALL,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cell_radius > 0.0) {
            return invalid("cell radius must be positive");
        }
        if self.intrinsic_dim == 0 || self.intrinsic_dim > self.ambient_dim {
            return invalid(format!(
                "need 1 ≤ d ≤ D, got d = {}, D = {}",
                self.intrinsic_dim, self.ambient_dim
            ));
        }
        if self.cell_points < 2 || self.samples_per_ball == 0 {
            return invalid("need at least 2 cell points and 1 sample per ball");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Two balls of radius Δ/(960·s·√d) with centres Δ/s − Δ/(960·s·√d) apart.
    GoodBad,
    /// A ball B of radius R and a satellite of radius Δ/(512√d) at distance Δ/2.
    UsefulUseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub cell: CellConfig,
    pub s: f64,
    pub mode: PairMode,
    /// Radius R of B in [`PairMode::UsefulUseless`]; defaults to the
    /// satellite radius.
    #[serde(default)]
    pub b_radius: Option<f64>,
}

impl PairConfig {
    pub fn good_bad(cell: CellConfig, s: f64) -> Self {
        PairConfig { cell, s, mode: PairMode::GoodBad, b_radius: None }
    }

    pub fn useful_useless(cell: CellConfig, b_radius: Option<f64>) -> Self {
        PairConfig { cell, s: 2.0, mode: PairMode::UsefulUseless, b_radius }
    }

    /// Radii of the first and second ball.
    pub fn ball_radii(&self) -> (f64, f64) {
        let (delta, sd) = (self.cell.cell_radius, (self.cell.intrinsic_dim as f64).sqrt());
        match self.mode {
            PairMode::GoodBad => {
                let r = delta / (960.0 * self.s * sd);
                (r, r)
            }
            PairMode::UsefulUseless => {
                let sat = delta / (512.0 * sd);
                (self.b_radius.unwrap_or(sat), sat)
            }
        }
    }

    pub fn center_separation(&self) -> f64 {
        let delta = self.cell.cell_radius;
        match self.mode {
            PairMode::GoodBad => delta / self.s - self.ball_radii().0,
            PairMode::UsefulUseless => delta / 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if !(self.s >= 2.0) {
            return invalid(format!("s must be at least 2, got {}", self.s));
        }
        let (r1, r2) = self.ball_radii();
        if !(r1 >= 0.0) || !(r2 >= 0.0) {
            return invalid("ball radii must be non-negative");
        }
        let sep = self.center_separation();
        if !(sep > 0.0) {
            return invalid("ball centres must be separated");
        }
        // Centres sit at ±sep/2 around the disk centre.
        if sep / 2.0 + r1.max(r2) > self.cell.cell_radius {
            return invalid("balls must lie inside the cell");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitClass {
    Good,
    Bad,
    Useful,
    Useless,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
    Both,
}

fn side_of(proj: impl Iterator<Item = f64>, threshold: f64) -> Side {
    let (mut left, mut right) = (false, false);
    for p in proj {
        if p < threshold {
            left = true;
        } else {
            right = true;
        }
        if left && right {
            return Side::Both;
        }
    }
    if left {
        Side::Left
    } else {
        Side::Right
    }
}

/// Classifies a split from where it sends the two balls' sample points.
pub fn classify(mode: PairMode, first: &[f64], second: &[f64], threshold: f64) -> SplitClass {
    let a = side_of(first.iter().copied(), threshold);
    let b = side_of(second.iter().copied(), threshold);
    let separated = matches!((a, b), (Side::Left, Side::Right) | (Side::Right, Side::Left));
    match mode {
        PairMode::GoodBad if separated => SplitClass::Good,
        PairMode::GoodBad if a == Side::Both && b == Side::Both => SplitClass::Bad,
        PairMode::UsefulUseless if separated => SplitClass::Useful,
        PairMode::UsefulUseless if a == Side::Both => SplitClass::Useless,
        _ => SplitClass::Neutral,
    }
}

/// Cell data plus the per-pivot radius estimates, reused across trials.
#[derive(Debug, Clone)]
pub struct SplitSampler {
    cell: Dataset,
    pivot_radii: Vec<f64>,
    frame: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

/// One raw split: direction and threshold.
#[derive(Debug, Clone)]
pub struct RawSplit {
    pub direction: Vec<f64>,
    pub median: f64,
    pub threshold: f64,
}

impl SplitSampler {
    pub fn new<R: Rng + ?Sized>(cell: &CellConfig, rng: &mut R) -> Result<Self> {
        cell.validate()?;
        let frame = random_frame(cell.ambient_dim, cell.intrinsic_dim, rng);
        let mut data = Dataset::with_capacity(cell.ambient_dim, cell.cell_points)?;
        for _ in 0..cell.cell_points {
            let local = uniform_in_ball(cell.intrinsic_dim, cell.cell_radius, rng);
            data.push(&embed(&frame, &local, cell.ambient_dim))?;
        }
        let pivot_radii = data
            .rows()
            .map(|p| data.rows().map(|y| dist(p, y)).fold(0.0, f64::max))
            .collect();
        Ok(SplitSampler { cell: data, pivot_radii, frame, scratch: Vec::new() })
    }

    pub fn cell(&self) -> &Dataset {
        &self.cell
    }

    /// `n` points uniform on the d-disk of `radius` around the in-flat point
    /// `local_center`, embedded like the cell.
    pub fn ball_samples<R: Rng + ?Sized>(
        &self,
        local_center: &[f64],
        radius: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<Dataset> {
        let (d, dim) = (self.frame.len(), self.cell.dim());
        let mut ds = Dataset::with_capacity(dim, n)?;
        for _ in 0..n {
            let mut local = uniform_in_ball(d, radius, rng);
            local.iter_mut().zip(local_center).for_each(|(a, c)| *a += c);
            ds.push(&embed(&self.frame, &local, dim))?;
        }
        Ok(ds)
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> RawSplit {
        let dim = self.cell.dim();
        let v = sample_direction(dim, rng).expect("dimension is positive").0;
        self.scratch.clear();
        self.scratch.extend(self.cell.rows().map(|p| dot(p, &v)));
        let median = lower_median(&mut self.scratch).expect("cell is non-empty");
        let pivot = rng.random_range(0..self.pivot_radii.len());
        let half = jitter_half_width(self.pivot_radii[pivot], dim);
        let threshold = median + rng.random_range(-half..=half);
        RawSplit { direction: v, median, threshold }
    }
}

fn embed(frame: &[Vec<f64>], local: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (col, &y) in frame.iter().zip(local) {
        x.iter_mut().zip(col).for_each(|(xi, ci)| *xi += y * ci);
    }
    x
}

/// A pair configuration with its cell and ball samples drawn.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub config: PairConfig,
    sampler: SplitSampler,
    first: Dataset,
    second: Dataset,
    proj: (Vec<f64>, Vec<f64>),
}

impl PreparedPair {
    pub fn new<R: Rng + ?Sized>(config: &PairConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let sampler = SplitSampler::new(&config.cell, rng)?;
        let d = config.cell.intrinsic_dim;
        let half = config.center_separation() / 2.0;
        let mut c1 = vec![0.0; d];
        let mut c2 = vec![0.0; d];
        c1[0] = -half;
        c2[0] = half;
        let (r1, r2) = config.ball_radii();
        let n = config.cell.samples_per_ball;
        let first = sampler.ball_samples(&c1, r1, n, rng)?;
        let second = sampler.ball_samples(&c2, r2, n, rng)?;
        Ok(PreparedPair { config: *config, sampler, first, second, proj: (Vec::new(), Vec::new()) })
    }

    pub fn balls(&self) -> (&Dataset, &Dataset) {
        (&self.first, &self.second)
    }

    pub fn trial<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SplitClass {
        let split = self.sampler.draw(rng);
        let v = &split.direction;
        self.proj.0.clear();
        self.proj.0.extend(self.first.rows().map(|p| dot(p, v)));
        self.proj.1.clear();
        self.proj.1.extend(self.second.rows().map(|p| dot(p, v)));
        classify(self.config.mode, &self.proj.0, &self.proj.1, split.threshold)
    }
}

/// Draws one random split of the configured cell and classifies it.
pub fn simulate_split_trial<R: Rng + ?Sized>(config: &PairConfig, rng: &mut R) -> Result<SplitClass> {
    Ok(PreparedPair::new(config, rng)?.trial(rng))
}

/// Class tallies; merging is associative so trial batches can run apart.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub counts: BTreeMap<SplitClass, usize>,
    pub trials: usize,
}

impl ClassCounts {
    pub fn for_mode(mode: PairMode) -> Self {
        let keys: &[SplitClass] = match mode {
            PairMode::GoodBad => &[SplitClass::Good, SplitClass::Bad, SplitClass::Neutral],
            PairMode::UsefulUseless => &[SplitClass::Useful, SplitClass::Useless, SplitClass::Neutral],
        };
        ClassCounts { counts: keys.iter().map(|&k| (k, 0)).collect(), trials: 0 }
    }

    pub fn record(&mut self, class: SplitClass) {
        *self.counts.entry(class).or_insert(0) += 1;
        self.trials += 1;
    }

    pub fn merge(&mut self, other: &ClassCounts) {
        for (&k, &c) in &other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.trials += other.trials;
    }

    pub fn estimates(&self) -> Result<BTreeMap<SplitClass, EstimateWithCI>> {
        self.counts.iter().map(|(&k, &c)| Ok((k, EstimateWithCI::from_counts(c, self.trials)?))).collect()
    }
}

pub fn count_pair_classes<R: Rng + ?Sized>(pair: &mut PreparedPair, trials: usize, rng: &mut R) -> ClassCounts {
    let mut counts = ClassCounts::for_mode(pair.config.mode);
    for _ in 0..trials {
        counts.record(pair.trial(rng));
    }
    counts
}

/// Class frequencies over `trials` independent splits of one sampled cell.
pub fn estimate_pair_split_probs<R: Rng + ?Sized>(
    config: &PairConfig,
    trials: usize,
    rng: &mut R,
) -> Result<BTreeMap<SplitClass, EstimateWithCI>> {
    if trials < MIN_PAIR_TRIALS {
        return invalid(format!("need at least {MIN_PAIR_TRIALS} trials, got {trials}"));
    }
    let mut pair = PreparedPair::new(config, rng)?;
    count_pair_classes(&mut pair, trials, rng).estimates()
}

/// Number of splits (out of `trials`) whose threshold falls strictly inside
/// the projected sample of a ball of `radius` at the cell centre.
pub fn count_ball_splits<R: Rng + ?Sized>(
    cell: &CellConfig,
    ball_radius: f64,
    trials: usize,
    rng: &mut R,
) -> Result<usize> {
    if !(ball_radius >= 0.0) || ball_radius > cell.cell_radius {
        return invalid(format!("ball radius must lie in [0, Δ], got {ball_radius}"));
    }
    let mut sampler = SplitSampler::new(cell, rng)?;
    let origin = vec![0.0; cell.intrinsic_dim];
    let n = if ball_radius == 0.0 { 1 } else { cell.samples_per_ball };
    let ball = sampler.ball_samples(&origin, ball_radius, n, rng)?;
    let mut hits = 0;
    for _ in 0..trials {
        let split = sampler.draw(rng);
        let v = &split.direction;
        if side_of(ball.rows().map(|p| dot(p, v)), split.threshold) == Side::Both {
            hits += 1;
        }
    }
    Ok(hits)
}

pub fn estimate_ball_split_prob<R: Rng + ?Sized>(
    cell: &CellConfig,
    ball_radius: f64,
    trials: usize,
    rng: &mut R,
) -> Result<EstimateWithCI> {
    let hits = count_ball_splits(cell, ball_radius, trials, rng)?;
    EstimateWithCI::from_counts(hits, trials)
}

/// Split-probability ceiling for a ball of radius δ in a cell of radius Δ.
pub fn ball_split_bound(ball_radius: f64, cell_radius: f64, d: usize) -> f64 {
    3.0 * ball_radius * (d as f64).sqrt() / cell_radius
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFrequency {
    pub threshold: f64,
    pub estimate: EstimateWithCI,
}

/// t(η) = (4δ/√D)·√(2(d + ln(2/η))).
pub fn projected_radius_threshold(ball_radius: f64, d: usize, dim: usize, eta: f64) -> f64 {
    4.0 * ball_radius / (dim as f64).sqrt() * (2.0 * (d as f64 + (2.0 / eta).ln())).sqrt()
}

/// Frequency over fresh Gaussian directions that half the projected extent
/// of a d-disk sample of radius δ exceeds t(η).
pub fn projected_radius_tail<R: Rng + ?Sized>(
    ball_radius: f64,
    d: usize,
    dim: usize,
    eta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<TailFrequency> {
    if !(eta > 0.0 && eta <= 1.0) {
        return invalid(format!("η must lie in (0, 1], got {eta}"));
    }
    if !(ball_radius >= 0.0) {
        return invalid("ball radius must be non-negative");
    }
    if d == 0 || d > dim {
        return invalid(format!("need 1 ≤ d ≤ D, got d = {d}, D = {dim}"));
    }
    let frame = random_frame(dim, d, rng);
    let mut ball = Dataset::with_capacity(dim, DEFAULT_SAMPLES_PER_BALL)?;
    for _ in 0..DEFAULT_SAMPLES_PER_BALL {
        ball.push(&embed(&frame, &uniform_in_ball(d, ball_radius, rng), dim))?;
    }
    let threshold = projected_radius_threshold(ball_radius, d, dim, eta);
    let mut hits = 0;
    for _ in 0..trials {
        let v = sample_direction(dim, rng)?.0;
        let (lo, hi) = ball
            .rows()
            .map(|p| dot(p, &v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if (hi - lo) / 2.0 > threshold {
            hits += 1;
        }
    }
    Ok(TailFrequency { threshold, estimate: EstimateWithCI::from_counts(hits, trials)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTail {
    /// Pr{|U·x| ≤ α‖x‖/√D}
    pub small: EstimateWithCI,
    pub small_bound: f64,
    /// Pr{|U·x| ≥ β‖x‖/√D}
    pub large: EstimateWithCI,
    pub large_bound: f64,
}

/// √(2/π)·α
pub fn small_projection_bound(alpha: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * alpha
}

/// (2/β)·e^{−β²/2}
pub fn large_projection_bound(beta: f64) -> f64 {
    2.0 / beta * (-beta * beta / 2.0).exp()
}

pub fn gaussian_projection_tail<R: Rng + ?Sized>(
    alpha: f64,
    beta: f64,
    norm_x: f64,
    dim: usize,
    trials: usize,
    rng: &mut R,
) -> Result<GaussianTail> {
    if !(alpha > 0.0 && beta > 0.0) {
        return invalid("α and β must be positive");
    }
    if !(norm_x > 0.0) {
        return invalid("‖x‖ must be positive");
    }
    let mut x = sample_direction(dim, rng)?.0;
    let n = crate::math::norm(&x);
    x.iter_mut().for_each(|a| *a *= norm_x / n);
    let unit = norm_x / (dim as f64).sqrt();
    let (mut small, mut large) = (0, 0);
    for _ in 0..trials {
        let u: Vec<f64> = (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z / (dim as f64).sqrt()
            })
            .collect();
        let p = dot(&u, &x).abs();
        if p <= alpha * unit {
            small += 1;
        }
        if p >= beta * unit {
            large += 1;
        }
    }
    Ok(GaussianTail {
        small: EstimateWithCI::from_counts(small, trials)?,
        small_bound: small_projection_bound(alpha),
        large: EstimateWithCI::from_counts(large, trials)?,
        large_bound: large_projection_bound(beta),
    })
}

/// (Δ/√D)·√(2 ln(2/δ))
pub fn median_deviation_bound(cell_radius: f64, dim: usize, delta_conf: f64) -> f64 {
    cell_radius / (dim as f64).sqrt() * (2.0 * (2.0 / delta_conf).ln()).sqrt()
}

/// Frequency over random directions that the projected median of `points`
/// lands farther than the deviation bound from the projection of `center`.
pub fn median_concentration<R: Rng + ?Sized>(
    points: &Dataset,
    center: &[f64],
    cell_radius: f64,
    delta_conf: f64,
    trials: usize,
    rng: &mut R,
) -> Result<TailFrequency> {
    let ceiling = 2.0 / std::f64::consts::E.powi(2);
    if !(delta_conf > 0.0 && delta_conf < ceiling) {
        return invalid(format!("confidence must lie in (0, 2/e²), got {delta_conf}"));
    }
    if points.is_empty() {
        return invalid("median of an empty set");
    }
    if center.len() != points.dim() {
        return Err(crate::Error::DimensionMismatch { expected: points.dim(), got: center.len() });
    }
    if points.rows().any(|p| dist(p, center) > cell_radius * (1.0 + 1e-12)) {
        return invalid("every point must lie within the cell radius of the centre");
    }
    let threshold = median_deviation_bound(cell_radius, points.dim(), delta_conf);
    let mut scratch = Vec::with_capacity(points.len());
    let mut hits = 0;
    for _ in 0..trials {
        let v = sample_direction(points.dim(), rng)?.0;
        scratch.clear();
        scratch.extend(points.rows().map(|p| dot(p, &v)));
        let median = lower_median(&mut scratch).expect("non-empty");
        if (median - dot(center, &v)).abs() > threshold {
            hits += 1;
        }
    }
    Ok(TailFrequency { threshold, estimate: EstimateWithCI::from_counts(hits, trials)? })
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rptlab_core::split_stats::{
    ball_split_bound, estimate_ball_split_prob, estimate_pair_split_probs, gaussian_projection_tail,
    median_concentration, projected_radius_tail, CellConfig, EstimateWithCI, PairConfig, SplitClass, SplitSampler,
};

use super::{Context, Job, Row};
use crate::config::Grid;
use crate::record::Value;

pub const COLUMNS: &[&str] = &[
    "d",
    "D",
    "estimator",
    "parameter",
    "value",
    "statistic",
    "trials",
    "p_hat",
    "half_width",
    "bound",
    "bound_kind",
    "pass",
];

/// One estimator at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    GoodBad { s: f64 },
    UsefulUseless,
    BallSplit { ratio: f64 },
    RadiusTail { eta: f64 },
    GaussianTail { alpha: f64, beta: f64 },
    Median { confidence: f64 },
}

impl Probe {
    pub fn key(&self) -> String {
        match self {
            Probe::GoodBad { s } => format!("pair/s={s}"),
            Probe::UsefulUseless => "useful".to_string(),
            Probe::BallSplit { ratio } => format!("ball-split/ratio={ratio}"),
            Probe::RadiusTail { eta } => format!("radius-tail/eta={eta}"),
            Probe::GaussianTail { alpha, beta } => format!("gaussian-tail/alpha={alpha}/beta={beta}"),
            Probe::Median { confidence } => format!("median/conf={confidence}"),
        }
    }
}

pub fn probes(g: &Grid) -> Vec<Probe> {
    let mut out: Vec<Probe> = g.s.iter().map(|&s| Probe::GoodBad { s }).collect();
    out.push(Probe::UsefulUseless);
    out.extend(g.ball_ratios.iter().map(|&ratio| Probe::BallSplit { ratio }));
    out.extend(g.etas.iter().map(|&eta| Probe::RadiusTail { eta }));
    out.push(Probe::GaussianTail { alpha: g.alpha, beta: g.beta });
    out.extend(g.confidences.iter().map(|&confidence| Probe::Median { confidence }));
    out
}

#[derive(Clone, Copy)]
enum Bound {
    /// The estimate's lower CI end must reach the bound.
    AtLeast(f64),
    /// The estimate's upper CI end must stay under the bound.
    AtMost(f64),
    None,
}

struct Line<'a> {
    estimator: &'a str,
    parameter: &'a str,
    value: f64,
    statistic: &'a str,
    est: EstimateWithCI,
    bound: Bound,
}

fn row(d: usize, dim: usize, l: Line) -> Row {
    let (bound, kind, pass) = match l.bound {
        Bound::AtLeast(b) => (Some(b), Some("lower"), Some(l.est.lower() >= b)),
        Bound::AtMost(b) => (Some(b), Some("upper"), Some(l.est.upper() <= b)),
        Bound::None => (None, None, None),
    };
    let values = vec![
        ("d", d.into()),
        ("D", dim.into()),
        ("estimator", l.estimator.into()),
        ("parameter", l.parameter.into()),
        ("value", l.value.into()),
        ("statistic", l.statistic.into()),
        ("trials", l.est.trials.into()),
        ("p_hat", l.est.p_hat.into()),
        ("half_width", l.est.half_width.into()),
        ("bound", Value::from(bound)),
        ("bound_kind", Value::from(kind)),
        ("pass", Value::from(pass)),
    ];
    (values, false)
}

fn class_name(c: SplitClass) -> &'static str {
    match c {
        SplitClass::Good => "good",
        SplitClass::Bad => "bad",
        SplitClass::Useful => "useful",
        SplitClass::Useless => "useless",
        SplitClass::Neutral => "neutral",
    }
}

pub fn run(ctx: &Context, job: &Job, d: usize, dim: usize, probe: &Probe) -> anyhow::Result<Vec<Row>> {
    let g = &ctx.cfg.grid;
    let cell = CellConfig {
        cell_radius: 1.0,
        intrinsic_dim: d,
        ambient_dim: dim,
        cell_points: g.cell_points,
        samples_per_ball: g.samples_per_ball,
    };
    let n = g.trials;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let rows = match *probe {
        Probe::GoodBad { s } => {
            let est = estimate_pair_split_probs(&PairConfig::good_bad(cell, s), n, &mut rng)?;
            est.into_iter()
                .map(|(class, e)| {
                    let bound = match class {
                        SplitClass::Good => Bound::AtLeast(1.0 / (56.0 * s)),
                        SplitClass::Bad => Bound::AtMost(1.0 / (320.0 * s)),
                        _ => Bound::None,
                    };
                    let l = Line { estimator: "pair", parameter: "s", value: s, statistic: class_name(class), est: e, bound };
                    row(d, dim, l)
                })
                .collect()
        }
        Probe::UsefulUseless => {
            let cfg = PairConfig::useful_useless(cell, None);
            let b_radius = cfg.ball_radii().0;
            let est = estimate_pair_split_probs(&cfg, n, &mut rng)?;
            est.into_iter()
                .map(|(class, e)| {
                    let bound = match class {
                        SplitClass::Useful => Bound::AtLeast(1.0 / 192.0),
                        SplitClass::Useless => Bound::AtMost(ball_split_bound(b_radius, 1.0, d)),
                        _ => Bound::None,
                    };
                    let l = Line {
                        estimator: "useful",
                        parameter: "R",
                        value: b_radius,
                        statistic: class_name(class),
                        est: e,
                        bound,
                    };
                    row(d, dim, l)
                })
                .collect()
        }
        Probe::BallSplit { ratio } => {
            let e = estimate_ball_split_prob(&cell, ratio, n, &mut rng)?;
            let bound = Bound::AtMost(ball_split_bound(ratio, 1.0, d));
            vec![row(d, dim, Line { estimator: "ball-split", parameter: "delta_over_Delta", value: ratio, statistic: "split", est: e, bound })]
        }
        Probe::RadiusTail { eta } => {
            let t = projected_radius_tail(1.0, d, dim, eta, n, &mut rng)?;
            let l = Line { estimator: "radius-tail", parameter: "eta", value: eta, statistic: "exceed", est: t.estimate, bound: Bound::AtMost(eta) };
            vec![row(d, dim, l)]
        }
        Probe::GaussianTail { alpha, beta } => {
            let t = gaussian_projection_tail(alpha, beta, 1.0, dim, n, &mut rng)?;
            vec![
                row(d, dim, Line { estimator: "gaussian-tail", parameter: "alpha", value: alpha, statistic: "small", est: t.small, bound: Bound::AtMost(t.small_bound) }),
                row(d, dim, Line { estimator: "gaussian-tail", parameter: "beta", value: beta, statistic: "large", est: t.large, bound: Bound::AtMost(t.large_bound) }),
            ]
        }
        Probe::Median { confidence } => {
            let sampler = SplitSampler::new(&cell, &mut rng)?;
            let origin = vec![0.0; dim];
            let t = median_concentration(sampler.cell(), &origin, 1.0, confidence, n, &mut rng)?;
            let l = Line { estimator: "median", parameter: "delta", value: confidence, statistic: "exceed", est: t.estimate, bound: Bound::AtMost(confidence) };
            vec![row(d, dim, l)]
        }
    };
    Ok(rows)
}

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rptlab_core::manifolds::ManifoldKind;
use rptlab_core::split_stats::{DEFAULT_CELL_POINTS, DEFAULT_SAMPLES_PER_BALL};
use rptlab_core::SplitRule;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SizeReduction,
    Packing,
    AspectRatio,
    Loccov,
    SplitStats,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SizeReduction => "size-reduction",
            ExperimentKind::Packing => "packing",
            ExperimentKind::AspectRatio => "aspect-ratio",
            ExperimentKind::Loccov => "loccov",
            ExperimentKind::SplitStats => "split-stats",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Manifold family for generated data; d and D come from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Flat {
        #[serde(default = "one")]
        extent: f64,
    },
    Sphere {
        #[serde(default = "one")]
        tau: f64,
    },
    Torus {
        #[serde(default = "one")]
        minor: f64,
        #[serde(default = "three")]
        major: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Flat { .. } => "flat",
            Shape::Sphere { .. } => "sphere",
            Shape::Torus { .. } => "torus",
        }
    }

    pub fn manifold(&self, d: usize) -> anyhow::Result<ManifoldKind> {
        Ok(match *self {
            Shape::Flat { extent } => ManifoldKind::Flat { d, extent },
            Shape::Sphere { tau } => ManifoldKind::Sphere { d, tau },
            Shape::Torus { minor, major } => {
                if d != 2 {
                    bail!("a torus has intrinsic dimension 2, grid asks for {d}");
                }
                ManifoldKind::Torus { minor, major }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    Generated {
        #[serde(flatten)]
        shape: Shape,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default)]
        noise_sigma: f64,
    },
    /// A dataset file; its intrinsic dimension is only a label.
    File {
        path: PathBuf,
        #[serde(default)]
        intrinsic_dim: Option<usize>,
    },
}

fn default_n() -> usize {
    20_000
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Generated { shape: Shape::Flat { extent: 1.0 }, n: default_n(), noise_sigma: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub intrinsic_dims: Vec<usize>,
    pub ambient_dims: Vec<usize>,
    /// Size-reduction factors; also the s of the good/bad pair estimates.
    pub s: Vec<f64>,
    /// R/r for packing counts.
    pub radius_ratios: Vec<f64>,
    /// Packing ball radius R as a fraction of the root data radius.
    pub packing_ball_fraction: f64,
    /// Aspect-ratio probe radius R as a fraction of the root data radius.
    pub aspect_ball_fraction: f64,
    pub eps: Vec<f64>,
    pub patches: usize,
    pub patch_points: usize,
    /// Monte Carlo trials per split-stats estimate.
    pub trials: usize,
    /// Independent repeats of each split-stats estimate.
    pub repeats: usize,
    /// δ/Δ for ball-split estimates.
    pub ball_ratios: Vec<f64>,
    pub etas: Vec<f64>,
    pub confidences: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub cell_points: usize,
    pub samples_per_ball: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            intrinsic_dims: vec![2],
            ambient_dims: vec![50],
            s: vec![2.0, 4.0, 8.0, 16.0],
            radius_ratios: vec![2.0, 4.0, 8.0],
            packing_ball_fraction: 0.25,
            aspect_ball_fraction: 1.0 / 200.0,
            eps: vec![0.05, 0.1, 0.25],
            patches: 50,
            patch_points: 200,
            trials: 100_000,
            repeats: 1,
            ball_ratios: vec![0.001, 0.01],
            etas: vec![0.05, 0.1, 0.5],
            confidences: vec![0.05, 0.1],
            alpha: 1.0,
            beta: 2.0,
            cell_points: DEFAULT_CELL_POINTS,
            samples_per_ball: DEFAULT_SAMPLES_PER_BALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_trees")]
    pub trees_per_condition: usize,
    #[serde(default)]
    pub data: DataSource,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub rule: SplitRule,
    #[serde(default)]
    pub max_leaf_size: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_trees() -> usize {
    20
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            base_seed: 0,
            trees_per_condition: default_trees(),
            data: DataSource::default(),
            grid: Grid::default(),
            rule: SplitRule::Max,
            max_leaf_size: None,
            output: None,
        }
    }

    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let g = &self.grid;
        if self.trees_per_condition == 0 {
            bail!("trees_per_condition must be at least 1");
        }
        let needs_dims = !matches!(self.data, DataSource::File { .. }) || self.experiment == ExperimentKind::SplitStats;
        if needs_dims && (g.intrinsic_dims.is_empty() || g.ambient_dims.is_empty()) {
            bail!("intrinsic_dims and ambient_dims must be non-empty");
        }
        if let Some(&d) = g.intrinsic_dims.iter().find(|&&d| d == 0) {
            bail!("intrinsic dimension {d} is not positive");
        }
        match self.experiment {
            ExperimentKind::SizeReduction => {
                non_empty("s", &g.s)?;
                if g.s.iter().any(|&s| !(s >= 1.0)) {
                    bail!("reduction factors must be at least 1");
                }
            }
            ExperimentKind::Packing => {
                non_empty("radius_ratios", &g.radius_ratios)?;
                if g.radius_ratios.iter().any(|&q| !(q > 0.0)) || !(g.packing_ball_fraction > 0.0) {
                    bail!("packing radii must be positive");
                }
            }
            ExperimentKind::AspectRatio => {
                if !(g.aspect_ball_fraction > 0.0) {
                    bail!("aspect_ball_fraction must be positive");
                }
            }
            ExperimentKind::Loccov => {
                non_empty("eps", &g.eps)?;
                if g.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                    bail!("ε values must lie in (0, 1)");
                }
                if g.patches == 0 || g.patch_points == 0 {
                    bail!("patches and patch_points must be positive");
                }
                if matches!(self.data, DataSource::File { .. }) {
                    bail!("loccov needs a generated manifold");
                }
            }
            ExperimentKind::SplitStats => {
                non_empty("s", &g.s)?;
                if g.trials == 0 || g.repeats == 0 {
                    bail!("trials and repeats must be positive");
                }
            }
        }
        if let DataSource::Generated { n, .. } = self.data {
            if n == 0 {
                bail!("generated datasets need n ≥ 1");
            }
        }
        Ok(())
    }

    /// Build parameters for the experiment's trees.
    pub fn build_params(&self) -> rptlab_core::BuildParams {
        let mut p = rptlab_core::BuildParams::with_rule(self.rule);
        if let Some(leaf) = self.max_leaf_size {
            p.max_leaf_size = leaf;
        }
        p
    }
}

fn non_empty<T>(name: &str, v: &[T]) -> anyhow::Result<()> {
    if v.is_empty() {
        bail!("grid `{name}` must be non-empty");
    }
    Ok(())
}

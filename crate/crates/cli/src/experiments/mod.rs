//! The five experiments. Each expands a config into independent jobs, one per
//! (condition, trial); a job yields one or more rows and is replayable on its
//! own from the config, its condition key and its trial index.

mod aspect;
mod loccov;
mod packing;
mod size_reduction;
mod split;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use anyhow::{anyhow, Context as _};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rptlab_core::manifolds::{sample_global, ManifoldSpec};
use rptlab_core::Dataset;

use crate::config::{DataSource, ExperimentConfig, ExperimentKind, Shape};
use crate::record::{derive_seed, ResultRecord, Value};

pub use split::Probe;

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// A tree over the dataset embedded with these dimensions.
    Data { d: usize, dim: usize },
    Patch { d: usize, dim: usize, eps: f64 },
    Split { d: usize, dim: usize, probe: Probe },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub condition: Condition,
    pub key: String,
    pub trial: usize,
    pub seed: u64,
}

/// Value columns of each experiment's CSV, in order.
pub fn columns(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::SizeReduction => size_reduction::COLUMNS,
        ExperimentKind::Packing => packing::COLUMNS,
        ExperimentKind::AspectRatio => aspect::COLUMNS,
        ExperimentKind::Loccov => loccov::COLUMNS,
        ExperimentKind::SplitStats => split::COLUMNS,
    }
}

/// Shared state for one run: the config and lazily built datasets.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    cache: Mutex<HashMap<(usize, usize), Arc<Dataset>>>,
    file: Option<(usize, Arc<Dataset>)>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> anyhow::Result<Self> {
        cfg.validate()?;
        let file = match &cfg.data {
            DataSource::File { path, intrinsic_dim } if cfg.experiment != ExperimentKind::SplitStats => {
                let ds = crate::data::load(path).with_context(|| format!("loading {}", path.display()))?;
                Some((intrinsic_dim.unwrap_or(0), Arc::new(ds)))
            }
            _ => None,
        };
        Ok(Context { cfg, cache: Mutex::new(HashMap::new()), file })
    }

    /// (d, D) pairs the tree experiments run over.
    fn data_dims(&self) -> Vec<(usize, usize)> {
        match &self.file {
            Some((d, ds)) => vec![(*d, ds.dim())],
            None => {
                let g = &self.cfg.grid;
                g.intrinsic_dims.iter().flat_map(|&d| g.ambient_dims.iter().map(move |&dim| (d, dim))).collect()
            }
        }
    }

    pub fn shape(&self) -> anyhow::Result<(Shape, usize, f64)> {
        match self.cfg.data {
            DataSource::Generated { shape, n, noise_sigma } => Ok((shape, n, noise_sigma)),
            DataSource::File { .. } => Err(anyhow!("experiment needs a generated manifold")),
        }
    }

    /// The manifold for (d, D). Its frame depends on D; its seed does not
    /// enter the intrinsic sample, so every D sees the same intrinsic data.
    pub fn manifold(&self, d: usize, dim: usize) -> anyhow::Result<ManifoldSpec> {
        let (shape, _, noise) = self.shape()?;
        let key = format!("embed/{}/d={d}/D={dim}", shape.name());
        let spec = ManifoldSpec::new(shape.manifold(d)?, dim, derive_seed(self.cfg.base_seed, &key, 0))?;
        Ok(spec.with_noise(noise)?)
    }

    pub fn dataset(&self, d: usize, dim: usize) -> anyhow::Result<Arc<Dataset>> {
        if let Some((_, ds)) = &self.file {
            return Ok(ds.clone());
        }
        let mut cache = self.cache.lock().expect("dataset cache poisoned");
        if let Some(ds) = cache.get(&(d, dim)) {
            return Ok(ds.clone());
        }
        let (shape, n, _) = self.shape()?;
        let spec = self.manifold(d, dim)?;
        let key = format!("data/{}/d={d}", shape.name());
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.base_seed, &key, 0));
        let ds = Arc::new(sample_global(&spec, n, &mut rng)?);
        cache.insert((d, dim), ds.clone());
        Ok(ds)
    }

    pub fn plan(&self) -> anyhow::Result<Vec<Job>> {
        let cfg = self.cfg;
        let exp = cfg.experiment.name();
        let mut conditions: Vec<(Condition, String, usize)> = Vec::new();
        match cfg.experiment {
            ExperimentKind::SizeReduction | ExperimentKind::Packing | ExperimentKind::AspectRatio => {
                for (d, dim) in self.data_dims() {
                    conditions.push((Condition::Data { d, dim }, format!("{exp}/d={d}/D={dim}"), cfg.trees_per_condition));
                }
            }
            ExperimentKind::Loccov => {
                for &d in &cfg.grid.intrinsic_dims {
                    for &dim in &cfg.grid.ambient_dims {
                        for &eps in &cfg.grid.eps {
                            conditions.push((
                                Condition::Patch { d, dim, eps },
                                format!("{exp}/d={d}/D={dim}/eps={eps}"),
                                cfg.grid.patches,
                            ));
                        }
                    }
                }
            }
            ExperimentKind::SplitStats => {
                for &d in &cfg.grid.intrinsic_dims {
                    for &dim in &cfg.grid.ambient_dims {
                        for probe in split::probes(&cfg.grid) {
                            let key = format!("{exp}/d={d}/D={dim}/{}", probe.key());
                            conditions.push((Condition::Split { d, dim, probe }, key, cfg.grid.repeats));
                        }
                    }
                }
            }
        }
        let mut jobs = Vec::new();
        for (condition, key, trials) in conditions {
            for trial in 0..trials {
                let seed = derive_seed(cfg.base_seed, &key, trial as u64);
                jobs.push(Job { condition: condition.clone(), key: key.clone(), trial, seed });
            }
        }
        Ok(jobs)
    }

    pub fn run_job(&self, job: &Job) -> anyhow::Result<Vec<ResultRecord>> {
        let start = Instant::now();
        let rows = match (self.cfg.experiment, &job.condition) {
            (ExperimentKind::SizeReduction, Condition::Data { d, dim }) => size_reduction::run(self, job, *d, *dim)?,
            (ExperimentKind::Packing, Condition::Data { d, dim }) => packing::run(self, job, *d, *dim)?,
            (ExperimentKind::AspectRatio, Condition::Data { d, dim }) => aspect::run(self, job, *d, *dim)?,
            (ExperimentKind::Loccov, Condition::Patch { d, dim, eps }) => loccov::run(self, job, *d, *dim, *eps)?,
            (ExperimentKind::SplitStats, Condition::Split { d, dim, probe }) => split::run(self, job, *d, *dim, probe)?,
            (kind, c) => return Err(anyhow!("condition {c:?} does not belong to {kind}")),
        };
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(rows
            .into_iter()
            .map(|(values, censored)| ResultRecord {
                experiment: self.cfg.experiment,
                condition: job.key.clone(),
                trial: job.trial,
                seed: job.seed,
                values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                censored,
                wall_ms,
            })
            .collect())
    }
}

/// Value fields of one row plus its censored flag.
pub(crate) type Row = (Vec<(&'static str, Value)>, bool);

/// Runs every job, in parallel when a pool is active, and returns the rows
/// in (condition, trial) order.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ResultRecord>> {
    let ctx = Context::new(cfg)?;
    let jobs = ctx.plan()?;
    let per_job: Vec<Vec<ResultRecord>> = jobs
        .par_iter()
        .map(|job| ctx.run_job(job).with_context(|| format!("{} trial {}", job.key, job.trial)))
        .collect::<anyhow::Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Reruns the single job identified by `condition` and `trial`.
pub fn replay_job(cfg: &ExperimentConfig, condition: &str, trial: usize) -> anyhow::Result<Vec<ResultRecord>> {
    let ctx = Context::new(cfg)?;
    let job = ctx
        .plan()?
        .into_iter()
        .find(|j| j.key == condition && j.trial == trial)
        .ok_or_else(|| anyhow!("no job {condition:?} trial {trial} in this config"))?;
    ctx.run_job(&job)
}

pub(crate) fn tree_rng(seed: u64) -> ChaCha8Rng {
    // Stream 1 keeps query draws apart from the build, which uses stream 0.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

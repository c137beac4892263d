//! Experiment harness for `rptlab-core`: seeded jobs, CSV results, a
//! `summary.json` per run, and single-row replay.

pub mod config;
pub mod data;
pub mod experiments;
pub mod record;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use serde::{Deserialize, Serialize};

pub use config::{DataSource, ExperimentConfig, ExperimentKind, Grid, Shape};
pub use experiments::{columns, replay_job, run_experiment};
pub use record::{derive_seed, write_records, ResultRecord, Value};

pub const VERSION: &str = env!("RPTLAB_VERSION");
pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub version: String,
    pub base_seed: u64,
    pub config: ExperimentConfig,
    pub results: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub censored_rows: usize,
    pub threads: usize,
    pub wall_seconds: f64,
}

impl Summary {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Runs `cfg` on a pool of `threads` workers (0: rayon's default) and writes
/// `results.csv` and `summary.json` into `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path, threads: usize) -> anyhow::Result<Summary> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let start = Instant::now();
    let records = pool.install(|| run_experiment(cfg))?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let cols = columns(cfg.experiment);
    let results = out.join(RESULTS_FILE);
    write_records(cols, &records, BufWriter::new(File::create(&results)?))?;
    let summary = Summary {
        experiment: cfg.experiment,
        version: VERSION.to_string(),
        base_seed: cfg.base_seed,
        config: cfg.clone(),
        results: RESULTS_FILE.to_string(),
        columns: cols.iter().map(|c| c.to_string()).collect(),
        rows: records.len(),
        censored_rows: records.iter().filter(|r| r.censored).count(),
        threads: pool.current_num_threads(),
        wall_seconds,
    };
    let f = BufWriter::new(File::create(out.join(SUMMARY_FILE))?);
    serde_json::to_writer_pretty(f, &summary)?;
    Ok(summary)
}

/// Reruns one (condition, trial) job from a run's summary.
pub fn replay(summary: &Summary, condition: &str, trial: usize) -> anyhow::Result<Vec<ResultRecord>> {
    replay_job(&summary.config, condition, trial)
}

/// Output directory: the CLI flag wins over the config's `output`.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    flag.or_else(|| cfg.output.clone()).ok_or_else(|| anyhow::anyhow!("no output directory (--out)"))
}

use std::io::stdout;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rptlab::config::{ExperimentConfig, ExperimentKind};
use rptlab::{columns, output_dir, replay, run_to_dir, write_records, Summary};
use rptlab_core::manifolds::{sample_global, ManifoldKind, ManifoldSpec};

#[derive(Parser)]
#[command(name = "rptlab", version = rptlab::VERSION, about = "Random projection tree experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one experiment from a JSON config.
    #[command(name = "run", alias = "experiment")]
    Run(RunArgs),
    SizeReduction(RunArgs),
    Packing(RunArgs),
    AspectRatio(RunArgs),
    Loccov(RunArgs),
    SplitStats(RunArgs),
    /// Samples a synthetic manifold and writes it as a dataset file.
    GenData(GenArgs),
    /// Reruns a single (condition, trial) job of a finished run.
    Replay {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        condition: String,
        #[arg(long)]
        trial: usize,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Kind {
    Sphere,
    Flat,
    Torus,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    #[arg(long, default_value_t = 1.0)]
    minor: f64,
    #[arg(long, default_value_t = 3.0)]
    major: f64,
    #[arg(long = "D")]
    ambient: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `.csv` writes text, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs, kind: Option<ExperimentKind>) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(k) = kind {
        anyhow::ensure!(cfg.experiment == k, "config is for {}, not {k}", cfg.experiment);
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    let out = output_dir(&cfg, args.out)?;
    let summary = run_to_dir(&cfg, &out, args.threads)?;
    eprintln!(
        "{}: {} rows ({} censored) in {:.1}s -> {}",
        summary.experiment,
        summary.rows,
        summary.censored_rows,
        summary.wall_seconds,
        out.display()
    );
    Ok(())
}

fn gen_data(a: GenArgs) -> anyhow::Result<()> {
    let kind = match a.kind {
        Kind::Sphere => ManifoldKind::Sphere { d: a.d, tau: a.tau },
        Kind::Flat => ManifoldKind::Flat { d: a.d, extent: a.extent },
        Kind::Torus => ManifoldKind::Torus { minor: a.minor, major: a.major },
    };
    let spec = ManifoldSpec::new(kind, a.ambient, a.seed)?.with_noise(a.noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    rng.set_stream(1);
    let ds = sample_global(&spec, a.n, &mut rng)?;
    rptlab::data::save(&ds, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a, None),
        Command::SizeReduction(a) => run(a, Some(ExperimentKind::SizeReduction)),
        Command::Packing(a) => run(a, Some(ExperimentKind::Packing)),
        Command::AspectRatio(a) => run(a, Some(ExperimentKind::AspectRatio)),
        Command::Loccov(a) => run(a, Some(ExperimentKind::Loccov)),
        Command::SplitStats(a) => run(a, Some(ExperimentKind::SplitStats)),
        Command::GenData(a) => gen_data(a),
        Command::Replay { summary, condition, trial } => Summary::load(&summary).and_then(|s| {
            let rows = replay(&s, &condition, trial)?;
            write_records(columns(s.experiment), &rows, stdout())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

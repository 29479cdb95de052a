use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vmqp::commands::{cmd_diagnose, cmd_eval, cmd_fit, cmd_sample, cmd_split};
use vmqp::config::RunConfig;
use vmqp::dataset::{ingest, Schema};
use vmqp::Error;

#[derive(Parser)]
#[command(name = "vmqp", version, about = "Circular regression with von Mises quasi-processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Input CSV.
    #[arg(long)]
    data: PathBuf,
    /// Column layout of the input CSV: wind, gait or generic.
    #[arg(long, default_value = "generic")]
    schema: Schema,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior samples of the test angles at fixed parameters.
    Sample(Common),
    /// Joint sampling of parameters and test angles.
    Fit(Common),
    /// CRPS of predictive samples against held-out angles.
    Eval {
        /// Predictive sample tables, one per split.
        #[arg(long, required = true, num_args = 1..)]
        predictions: Vec<PathBuf>,
        /// Datasets with true test angles: one per split, or one for all.
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = "generic")]
        schema: Schema,
        #[arg(long)]
        out: PathBuf,
    },
    /// λ sweep and repeated gradient estimates.
    Diagnose(Common),
    /// Seeded train/test splits.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "generic")]
        schema: Schema,
        #[arg(long)]
        out: PathBuf,
        /// Takes test_fraction and splits from this file when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        fraction: f64,
        #[arg(long, default_value_t = 1)]
        splits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    let load = |c: &Common| -> Result<_, Error> {
        let cfg = RunConfig::load(&c.config)?.with_seed(c.seed);
        let ds = ingest(&c.data, c.schema)?;
        Ok((cfg, ds))
    };
    match cli.command {
        Command::Sample(c) => load(&c).and_then(|(cfg, ds)| cmd_sample(&cfg, &ds, &c.out)),
        Command::Fit(c) => load(&c).and_then(|(cfg, ds)| cmd_fit(&cfg, &ds, &c.out)),
        Command::Diagnose(c) => load(&c).and_then(|(cfg, ds)| cmd_diagnose(&cfg, &ds, &c.out)),
        Command::Eval { predictions, data, schema, out } => {
            let truths = data.iter().map(|p| ingest(p, schema)).collect::<Result<Vec<_>, _>>()?;
            cmd_eval(&predictions, &truths, &out)
        }
        Command::Split { data, schema, out, config, fraction, splits, seed } => {
            let (fraction, splits) = match config {
                Some(path) => {
                    let cfg = RunConfig::load(&path)?;
                    (cfg.split.test_fraction, cfg.split.splits)
                }
                None => (fraction, splits),
            };
            cmd_split(&data, schema, fraction, splits, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let cat = e.category();
            eprintln!("error [{}]: {e}", cat.label());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wgad::experiment::{self, Precision, RunOptions};

#[derive(Parser)]
#[command(
    name = "wgad",
    version,
    about = "Wasserstein GAN anomaly detection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a generator and critic.
    Train(Common),
    /// Train an encoder against a frozen generator.
    TrainEncoder {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        generator: Option<PathBuf>,
    },
    /// Score the test split with the configured scorer.
    Score {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        models: Models,
    },
    /// Precision-recall analysis of a score report.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Score CSV; defaults to `<out>/scores.csv`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a labelled toy mixture dataset.
    GenToy(Common),
    /// Recover latent codes by gradient descent.
    Invert {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        generator: Option<PathBuf>,
        /// CSV of query rows; defaults to the configured test split.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
}

#[derive(Args)]
struct Models {
    #[arg(long)]
    generator: Option<PathBuf>,
    #[arg(long)]
    critic: Option<PathBuf>,
    #[arg(long)]
    encoder: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

impl Common {
    fn options(self) -> RunOptions {
        RunOptions {
            config: self.config,
            out: self.out,
            seed: self.seed,
            precision: self.precision.map(|p| match p {
                PrecisionArg::F32 => Precision::F32,
                PrecisionArg::F64 => Precision::F64,
            }),
            ..Default::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = experiment::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(experiment::exit_code(&e) as u8);
    }
    let result = match cli.command {
        Command::Train(c) => experiment::cmd_train(&c.options()),
        Command::TrainEncoder { common, generator } => experiment::cmd_train_encoder(&RunOptions {
            generator,
            ..common.options()
        }),
        Command::Score { common, models } => experiment::cmd_score(&RunOptions {
            generator: models.generator,
            critic: models.critic,
            encoder: models.encoder,
            ..common.options()
        }),
        Command::Eval { common, report } => experiment::cmd_eval(&RunOptions {
            report,
            ..common.options()
        }),
        Command::GenToy(c) => experiment::cmd_gen_toy(&c.options()),
        Command::Invert {
            common,
            generator,
            input,
        } => experiment::cmd_invert(&RunOptions {
            generator,
            input,
            ..common.options()
        }),
    };
    match result {
        Ok(m) => {
            let metrics = serde_json::to_string(&m.metrics).unwrap_or_default();
            println!("{}: {metrics}", m.command);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiment::exit_code(&e) as u8)
        }
    }
}

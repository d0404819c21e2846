//! `qmt`: mutation-testing campaigns for quantum neural networks.
//!
//! Each pipeline stage is its own subcommand so a campaign can be driven
//! end to end (`run`) or stepped through for debugging (`train`, `mutate`,
//! `evaluate`, `report`, `export-qasm`). All subcommands take the same
//! config file; `--out`, `--shots` and `--seed` override config fields.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::{self, ExitCode};

use clap::{Args, Parser, Subcommand};
use qmt::campaign::{self, CampaignConfig};

/// Print to stdout. A closed pipe downstream (`qmt run ... | head`) ends
/// the process quietly instead of panicking mid-report.
fn emit(text: &str) {
    let mut stdout = io::stdout().lock();
    let result = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush());
    if let Err(e) = result {
        if e.kind() == io::ErrorKind::BrokenPipe {
            process::exit(0);
        }
        eprintln!("error: stdout: {e}");
        process::exit(1);
    }
}

#[derive(Parser)]
#[command(name = "qmt", version, about = "Mutation testing for quantum neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Campaign configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shots per prediction (overrides the config's `shots`)
    #[arg(long)]
    shots: Option<u64>,
    /// Campaign seed (overrides the config's `seed`)
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<CampaignConfig, campaign::CampaignError> {
        let mut config = CampaignConfig::from_path(&self.config)?;
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        if let Some(shots) = self.shots {
            config.shots = shots;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole campaign: train, mutate, evaluate, report
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Parallel evaluation workers (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Train the model and save weights.json
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate mutants, dedup, write the manifest and QASM tree
    Mutate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate mutants against the test suite using saved weights
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Parallel evaluation workers (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render the report from a finished campaign directory
    Report {
        /// Campaign output directory containing report.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bound QASM tree for all kept mutants
    ExportQasm {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<(), campaign::CampaignError> {
    match cli.command {
        Command::Run { config, workers } => {
            let config = config.load()?;
            let (report, timings) = campaign::run_campaign(&config, workers)?;
            emit(&campaign::render_report(&report, Some(&timings)));
            emit(&format!("artifacts written to {}\n", config.out.display()));
        }
        Command::Train { config } => {
            let config = config.load()?;
            let summary = campaign::stage_train(&config)?;
            emit(&format!(
                "trained: accuracy {:.2}% train / {:.2}% test, weights at {}\n",
                summary.train_accuracy,
                summary.test_accuracy,
                summary.weights_path.display()
            ));
        }
        Command::Mutate { config } => {
            let config = config.load()?;
            let summary = campaign::stage_mutate(&config)?;
            emit(&format!(
                "mutants: {} generated, {} kept, {} redundant\n",
                summary.generated, summary.kept, summary.discarded
            ));
            for note in &summary.notes {
                emit(&format!("note: {note}\n"));
            }
        }
        Command::Evaluate { config, workers } => {
            let config = config.load()?;
            let (report, timings) = campaign::stage_evaluate(&config, workers)?;
            emit(&campaign::render_report(&report, Some(&timings)));
        }
        Command::Report { out } => {
            let text = campaign::stage_report(&out)?;
            emit(&text);
        }
        Command::ExportQasm { config } => {
            let config = config.load()?;
            let summary = campaign::stage_mutate(&config)?;
            emit(&format!(
                "exported {} mutant(s) under {}\n",
                summary.kept,
                config.out.join("qasm").display()
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

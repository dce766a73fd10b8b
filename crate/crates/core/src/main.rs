use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybrid_decode::harness::{self, ExperimentConfig};
use hybrid_decode::HarnessError;

#[derive(Parser)]
#[command(name = "hybrid-decode", version, about = "Draft-and-verify hybrid decoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (JSONL).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a corpus with greedy, draft and hybrid decoding.
    Run {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build summary tables and histograms from a results directory.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let entries = harness::generate_corpus(&config, &out)?;
            eprintln!("wrote {} utterances to {}", entries.len(), out.display());
        }
        Command::Run { corpus, config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let summary = harness::run_experiment(&corpus, &config, &out)?;
            for s in &summary {
                eprintln!(
                    "K={}: hybrid WER {:.4}, mean ratio {:.4}, median ratio {:.4}",
                    s.k, s.mean_hybrid_wer, s.mean_ratio, s.median_ratio
                );
            }
            eprintln!("results in {}", out.display());
        }
        Command::Report { results, out } => {
            let report = harness::report(&results, &out)?;
            print!("{}", report.markdown);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}

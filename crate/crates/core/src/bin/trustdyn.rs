use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trustdyn::analysis::{histogram_distance, OpinionHistogram};
use trustdyn::error::{Error, Result};
use trustdyn::experiment::{run_experiment, summary, ExperimentConfig, RunOptions};
use trustdyn::sentiment::{self, ParseOptions};

#[derive(Parser)]
#[command(name = "trustdyn", version, about = "Opinion dynamics with trust and distrust")]
struct Cli {
    /// Override the global seed of the experiment config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads for per-agent updates (overrides run.threads).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Quantize a sentiment CSV into a grid histogram.
    Ingest {
        /// CSV with header comment_id,neg,neu,pos.
        comments: PathBuf,
        /// Where to write the 9-point grid histogram.
        #[arg(long)]
        out: PathBuf,
        /// Rescale triplets that do not sum to 1 instead of rejecting them.
        #[arg(long)]
        renormalize: bool,
    },
    /// L1 and earth mover's distance between two histogram CSVs.
    Compare { a: PathBuf, b: PathBuf },
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

/// Accepts both the grid layout (`grid_score,...`) and the generic
/// `bin_lo,bin_hi,count` layout.
fn read_histogram(path: &Path) -> Result<OpinionHistogram> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let first = text.lines().next().unwrap_or("").trim_end_matches('\r');
    if first == sentiment::GRID_CSV_HEADER.join(",") {
        sentiment::read_grid_csv(text.as_bytes())
    } else {
        OpinionHistogram::read_csv(text.as_bytes())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, threads } => {
            let opts = RunOptions {
                seed: cli.seed,
                threads,
            };
            let outcome = run_experiment(&config, &opts)?;
            if !cli.quiet {
                let cfg = ExperimentConfig::load(&config)?;
                print!("{}", summary(&cfg, &outcome));
            }
        }
        Command::Ingest {
            comments,
            out,
            renormalize,
        } => {
            let parsed = sentiment::parse_records(open(&comments)?, ParseOptions { renormalize })?;
            for d in &parsed.diagnostics {
                eprintln!("{}:{}: rejected: {}", comments.display(), d.line, d.reason);
            }
            let hist = sentiment::empirical_distribution(&parsed.records)?;
            let file = File::create(&out).map_err(|e| io_err(&out, e))?;
            let mut w = BufWriter::new(file);
            sentiment::write_grid_csv(&hist, &mut w)?;
            w.flush().map_err(|e| io_err(&out, e))?;
            if !cli.quiet {
                let bias = sentiment::coarse_bias(&hist)?;
                println!(
                    "records     {} accepted, {} rejected",
                    parsed.records.len(),
                    parsed.diagnostics.len()
                );
                println!(
                    "bias        negative={} neutral={} positive={}",
                    bias.negative, bias.neutral, bias.positive
                );
                println!("histogram   {}", out.display());
            }
        }
        Command::Compare { a, b } => {
            let d = histogram_distance(&read_histogram(&a)?, &read_histogram(&b)?)?;
            println!("l1={} emd={}", d.l1, d.emd);
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
            if let Error::Divergence { last_state, .. } = &e {
                eprintln!("last finite state at step {}: {:?}", last_state.step_index, last_state.opinions);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

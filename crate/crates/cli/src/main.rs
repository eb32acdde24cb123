use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mobsim::pipeline::{self, PipelineConfig};
use mobsim::Error;

/// Behavioral similarity analysis of mobility traces.
#[derive(Parser)]
#[command(name = "mobsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline and write a report bundle.
    Analyze {
        config: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Comma-separated graph thresholds, replacing the config list.
        #[arg(long, value_delimiter = ',')]
        threshold: Option<Vec<f64>>,
        /// Comma-separated window lengths in days.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<i64>>,
    },
    /// Write a synthetic session trace from the config's generator.
    Generate {
        config: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Side-by-side histogram and CDF tables of two report bundles.
    Compare {
        bundle_a: PathBuf,
        bundle_b: PathBuf,
        /// Write compare_histogram.csv and compare_cdf.csv here instead of
        /// printing them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    /// Parent directory for the timestamped run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path, flags: &RunFlags) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig::from_file(path)?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &flags.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze {
            config,
            run,
            threshold,
            windows,
        } => {
            let mut cfg = load(&config, &run)?;
            if let Some(t) = threshold {
                cfg.analysis.graph_thresholds = t;
            }
            if let Some(w) = windows {
                cfg.analysis.windows_days = w;
            }
            let bundle = pipeline::run_pipeline(&cfg)?;
            for w in &bundle.windows {
                let s = &w.summary;
                eprintln!(
                    "{}: {} users ({} excluded), {} pairs, mean score {:.3}",
                    s.label, s.users, s.excluded_users, s.pairs, s.mean_score
                );
            }
            let dir =
                pipeline::write_reports(&bundle, &cfg.output.dir).map_err(Error::at("report"))?;
            println!("{}", dir.display());
        }
        Command::Generate { config, run } => {
            let cfg = load(&config, &run)?;
            let (trace, meta) = pipeline::generate(&cfg)?;
            let dir = pipeline::write_generated(&trace, &meta, &cfg.output.dir)?;
            eprintln!("{} sessions from {} nodes", meta.sessions, meta.node_count);
            println!("{}", dir.display());
        }
        Command::Compare {
            bundle_a,
            bundle_b,
            out,
        } => {
            let cmp = pipeline::compare(&bundle_a, &bundle_b)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("compare_histogram.csv"), &cmp.histogram_csv)?;
                    std::fs::write(dir.join("compare_cdf.csv"), &cmp.cdf_csv)?;
                    println!("{}", dir.display());
                }
                None => print!("{}\n{}", cmp.histogram_csv, cmp.cdf_csv),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

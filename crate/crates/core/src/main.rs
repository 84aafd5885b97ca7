use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rationfl::config::{ExperimentConfig, PresetName};
use rationfl::experiment::{build_arms, run_experiment, summarize_dir, ArmSummary};

#[derive(Parser)]
#[command(
    name = "rationfl",
    version,
    about = "Wireless federated learning with per-round resource schedules"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every arm and seed of a preset and write traces and summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the preset named in the config file.
        #[arg(long, value_parser = parse_preset)]
        preset: Option<PresetName>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a config file and print the resolved values.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute `summary.csv` from the traces in an output directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        last: usize,
    },
}

fn parse_preset(s: &str) -> Result<PresetName, String> {
    PresetName::parse(s).ok_or_else(|| format!("unknown preset `{s}`"))
}

fn print_table(rows: &[ArmSummary]) {
    println!(
        "{:<12} {:>6} {:>7} {:>10} {:>10}",
        "arm", "seeds", "window", "final_acc", "std"
    );
    for r in rows {
        println!(
            "{:<12} {:>6} {:>7} {:>10.4} {:>10.4}",
            r.name,
            r.finals.len(),
            r.window,
            r.final_mean,
            r.final_std
        );
    }
}

fn load(config: &PathBuf, preset: Option<PresetName>) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(config).map_err(|e| format!("{}: {e}", config.display()))?;
    ExperimentConfig::parse_with_preset(&text, preset)
        .map_err(|e| format!("{}: {e}", config.display()))
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Run {
            config,
            preset,
            seeds,
            out,
        } => load(&config, preset).and_then(|mut cfg| {
            if let Some(n) = seeds {
                if n == 0 {
                    return Err("--seeds must be at least 1".into());
                }
                cfg.seeds = n;
            }
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let seed_override = cfg.apply_env_seed().map_err(|e| e.to_string())?;
            let output = run_experiment(&cfg, seed_override).map_err(|e| e.to_string())?;
            print_table(&output.summaries);
            println!("wrote {}", cfg.out_dir.display());
            Ok(())
        }),
        Cmd::Validate { config } => load(&config, None).and_then(|cfg| {
            let arms = build_arms(&cfg).map_err(|e| e.to_string())?;
            print!("{}", cfg.to_text());
            println!(
                "# arms: {}",
                arms.iter()
                    .map(|a| a.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(())
        }),
        Cmd::Summarize { input, last } => {
            if last == 0 {
                Err("--last must be at least 1".into())
            } else {
                summarize_dir(&input, last)
                    .map(|s| print_table(&s))
                    .map_err(|e| e.to_string())
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

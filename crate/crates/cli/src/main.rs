use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use perfcurate_cli::commands::{self, SynthOptions};
use perfcurate_cli::{Context, Outcome, Settings};

/// Clean, match, refine, deduplicate and label a corpus of score and
/// performance MIDI files.
#[derive(Parser)]
#[command(name = "perfcurate", version)]
struct Cli {
    /// Corpus root.
    #[arg(long, global = true, default_value = ".")]
    root: PathBuf,
    /// key=value config file (default: <root>/perfcurate.conf if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set hole_window=15.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Compute and report without writing any file.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sort, deduplicate, truncate overlaps, drop short notes, repair runaways.
    Clean,
    /// Match performances to scores and write alignments.
    Match,
    /// Refine alignments and performances.
    Refine {
        /// Start from the matched alignment instead of an earlier refinement.
        #[arg(long)]
        restart: bool,
    },
    /// Mark near-duplicate performances.
    Dedup {
        /// Move non-lead duplicates into a quarantine/ subdirectory.
        #[arg(long)]
        quarantine: bool,
    },
    /// Assign quality labels.
    Label,
    /// Corpus statistics.
    Stats,
    /// Print the effective configuration.
    Config,
    /// Write a synthetic corpus under the root.
    Synth {
        #[arg(long, default_value_t = 4)]
        pieces: usize,
        #[arg(long, default_value_t = 5)]
        performances: usize,
        #[arg(long, default_value_t = 300)]
        notes: usize,
    },
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = Settings::default();
    let default_conf = cli.root.join("perfcurate.conf");
    match &cli.config {
        Some(p) => s.apply_file(p)?,
        None if default_conf.exists() => s.apply_file(&default_conf)?,
        None => {}
    }
    s.apply_overrides(&cli.overrides)?;
    if let Some(w) = cli.workers {
        s.workers = w;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Command::Dedup { quarantine: true } = cli.command {
        s.quarantine = true;
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let ctx = Context::new(&cli.root, settings(cli)?, cli.dry_run)?;
    let outcome = match &cli.command {
        Command::Clean => commands::cmd_clean(&ctx)?.0,
        Command::Match => commands::cmd_match(&ctx)?.0,
        Command::Refine { restart } => commands::cmd_refine(&ctx, *restart)?.0,
        Command::Dedup { .. } => commands::cmd_dedup(&ctx)?.0,
        Command::Label => commands::cmd_label(&ctx)?.0,
        Command::Stats => commands::cmd_stats(&ctx)?.0,
        Command::Config => {
            print!("{}", ctx.settings.to_text());
            return Ok(Outcome { command: "config", ..Outcome::default() });
        }
        Command::Synth { pieces, performances, notes } => {
            commands::cmd_synth(&ctx, SynthOptions { pieces: *pieces, performances: *performances, notes: *notes })?
        }
    };
    println!("{}: {} processed, {} failed", outcome.command, outcome.processed, outcome.failures);
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => ExitCode::from(o.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

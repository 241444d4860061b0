use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use edufuse::error::Result;
use edufuse::evaluation::CellId;
use edufuse::harness::{
    cell_rules, env_seed, generate_synthetic, load_cohort, render_tables, run_on, selection_only, selection_table,
    summary_table, write_cohort, write_cohort_csv, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "fuse", version, about = "Multi-source student performance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment grid and write every report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic cohort (logs, emotion, gaze, scores CSVs).
    Gen {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the attribute selections for a cohort.
    Select {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the rules of one cell's model trained on the whole cohort.
    Rules {
        /// MODE:REPRESENTATION:ALGORITHM, e.g. merge_all:numerical:c45_tree
        #[arg(long)]
        cell: String,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_path(p),
        None => {
            let mut c = ExperimentConfig::default();
            c.apply_env_seed(env_seed()?);
            Ok(c)
        }
    }
}

fn with_input(mut config: ExperimentConfig, input: Option<PathBuf>) -> ExperimentConfig {
    if input.is_some() {
        config.input_dir = input;
    }
    config
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let mut config = ExperimentConfig::from_path(&config)?;
            if let Some(out) = out {
                config.output_dir = out;
            }
            let cohort = load_cohort(&config)?;
            let bundle = run_on(&config, &cohort)?;
            let mut written = render_tables(&bundle, &config.formats, &config.output_dir)?;
            written.push(write_cohort_csv(&bundle, &cohort, &config.output_dir)?);
            print!("{}", summary_table(&bundle).to_text());
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Gen { seed, out, config } => {
            let config = load_config(config.as_ref())?;
            let seed = seed.unwrap_or(config.generator_seed());
            let cohort = generate_synthetic(&config.generator, seed)?;
            write_cohort(&cohort, &out)?;
            println!("wrote {} students to {}", cohort.len(), out.display());
        }
        Command::Select { input, config } => {
            let config = with_input(load_config(config.as_ref())?, input);
            let cohort = load_cohort(&config)?;
            print!("{}", selection_table(&selection_only(&config, &cohort)?).to_text());
        }
        Command::Rules { cell, input, config } => {
            let config = with_input(load_config(config.as_ref())?, input);
            let cell: CellId = cell.parse()?;
            let cohort = load_cohort(&config)?;
            print!("{}", cell_rules(&config, &cohort, cell)?);
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
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

//! The full three-experiment grid on a synthetic cohort, written to a directory.
//!
//! `cargo run --example pipeline -- [output_dir]`

use std::path::PathBuf;

use edufuse::harness::{load_cohort, render_tables, run_on, summary_table, write_cohort_csv, ExperimentConfig};

fn main() -> edufuse::error::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("fuse-out"), PathBuf::from);
    let config = ExperimentConfig {
        output_dir: out,
        ..ExperimentConfig::default()
    };
    let cohort = load_cohort(&config)?;
    let bundle = run_on(&config, &cohort)?;
    print!("{}", summary_table(&bundle).to_text());
    for best in &bundle.best {
        println!("best {}: {:.2}% AUC {:.3}", best.cell, best.accuracy_pct, best.auc);
    }
    let mut files = render_tables(&bundle, &config.formats, &config.output_dir)?;
    files.push(write_cohort_csv(&bundle, &cohort, &config.output_dir)?);
    println!("{} files in {}", files.len(), config.output_dir.display());
    Ok(())
}

//! Write the four input CSVs for a seeded synthetic cohort.

use std::path::PathBuf;

use edufuse::harness::{generate_synthetic, write_cohort, GenParams};

fn main() -> edufuse::error::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("cohort"), PathBuf::from);
    let params = GenParams {
        noise: 0.05,
        ..GenParams::default()
    };
    let cohort = generate_synthetic(&params, 42)?;
    write_cohort(&cohort, &dir)?;
    let pass = cohort.scores().unwrap().iter().filter(|&&m| m >= 5.0).count();
    println!("{} students ({pass} PASS) written to {}", cohort.len(), dir.display());
    Ok(())
}

//! Experiment configuration, synthetic cohorts and the end-to-end pipeline.

mod config;
mod pipeline;
mod render;
mod synth;

pub use config::{env_seed, ExperimentConfig, OutputFormat, SEED_ENV};
pub use synth::{generate_synthetic, write_cohort, GenParams, PlantedSignal};
pub use pipeline::{
    best_cells, cell_rules, grid, load_cohort, run_on, run_pipeline, selection_only, BestModel,
    HeterogeneousReport, Provenance, ReportBundle, SelectionReport,
};
pub use render::{
    read_bundle, render_tables, results_tables, rules_text, selection_table, summary_table, write_cohort_csv, Table,
};

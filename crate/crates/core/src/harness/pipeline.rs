//! The three fusion experiments over a shared fold assignment.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::synth::generate_synthetic;
use crate::dataset::{
    anonymize, join_sources, load_scores_csv, load_source_csv, CsvOptions, Dataset, Source,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    cross_validate_with, stratified_folds, summarize, CellId, EvalReport, FoldAssignment, Mode, Prediction,
    Representation, SummaryTable,
};
use crate::learners::{
    train, Algorithm, ClassDistribution, Classifier, LearnerSpec, VoteMember, VoteModel,
};
use crate::preprocess::{equal_width_discretize, label_from_scores, min_max_normalize, project};
use crate::selection::{select_best_first, select_per_source, FeatureSubset};

/// Seeds and settings that determine every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub input: String,
    pub cv_seed: u64,
    pub generator_seed: u64,
    pub learner_seed: u64,
    pub anonymize_seed: u64,
    pub k: usize,
    pub n_bins: usize,
    pub cutoffs: Vec<f64>,
    pub cutoff_labels: Vec<String>,
    pub fit_in_fold: bool,
    pub n_instances: usize,
    pub class_labels: Vec<String>,
    pub class_counts: Vec<usize>,
}

impl Provenance {
    /// One-line form used as the header of every output file.
    pub fn header(&self) -> String {
        let cuts: Vec<String> = self.cutoffs.iter().map(|c| c.to_string()).collect();
        format!(
            "fuse {} config={} input={} cv_seed={} generator_seed={} learner_seed={} anonymize_seed={} k={} n_bins={} cutoffs={} labels={} fit_in_fold={}",
            self.tool_version,
            self.config_hash,
            self.input,
            self.cv_seed,
            self.generator_seed,
            self.learner_seed,
            self.anonymize_seed,
            self.k,
            self.n_bins,
            cuts.join(","),
            self.cutoff_labels.join(","),
            self.fit_in_fold
        )
    }
}

/// Attributes chosen by CFS on the full (preprocessed) data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub mode: Mode,
    pub representation: Representation,
    /// `merged` or a source name.
    pub dataset: String,
    pub n_candidates: usize,
    pub selected: Vec<String>,
    pub merit: f64,
}

/// Highest-scoring cell of a mode, retrained on all data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestModel {
    pub cell: CellId,
    pub accuracy_pct: f64,
    pub auc: f64,
    pub rules: String,
}

/// One Vote over every requested algorithm and every source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneousReport {
    pub representation: Representation,
    pub algorithms: Vec<Algorithm>,
    pub predictions: Vec<Prediction>,
    pub accuracy_pct: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    /// One report per cell, in grid order (mode, representation, algorithm).
    pub reports: Vec<EvalReport>,
    pub selections: Vec<SelectionReport>,
    pub summary: SummaryTable,
    pub best: Vec<BestModel>,
    pub heterogeneous: Vec<HeterogeneousReport>,
}

impl ReportBundle {
    pub fn report(&self, cell: CellId) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.cell == cell)
    }
}

/// Loads or generates the cohort, attaches class labels and anonymizes ids.
pub fn load_cohort(config: &ExperimentConfig) -> Result<Dataset> {
    let schema = config.schema()?;
    let raw = match &config.input_dir {
        Some(dir) => load_dir(config, dir)?,
        None => {
            let generated = generate_synthetic(&config.generator, config.generator_seed())?;
            generated.with_rows(schema.clone(), generated.rows().to_vec())?
        }
    };
    let labeled = label_from_scores(&raw, &config.class_cutoffs()?)?;
    Ok(anonymize(&labeled, config.anonymize_seed()).0)
}

fn load_dir(config: &ExperimentConfig, dir: &Path) -> Result<Dataset> {
    let schema = config.schema()?;
    let options = CsvOptions {
        allow_missing: config.allow_missing,
    };
    let mut parts = Vec::new();
    for source in schema.sources() {
        let part = load_source_csv(dir.join(source.file_name()), source, &schema.fragment(source), options)?;
        parts.push(part.with_rows(part.schema().with_class_labels(schema.class_labels())?, part.rows().to_vec())?);
    }
    let scores = load_scores_csv(dir.join("scores.csv"))?;
    join_sources(&parts, &scores)
}

/// Fitted preprocessing for one representation.
enum Prep {
    Numerical(crate::preprocess::NormalizationParams),
    Discretized(crate::preprocess::NormalizationParams, crate::preprocess::BinningParams),
}

impl Prep {
    fn fit(data: &Dataset, representation: Representation, n_bins: usize) -> Result<(Prep, Dataset)> {
        let (norm, params) = min_max_normalize(data)?;
        match representation {
            Representation::Numerical => Ok((Prep::Numerical(params), norm)),
            Representation::Discretized => {
                let (disc, bins) = equal_width_discretize(&norm, n_bins)?;
                Ok((Prep::Discretized(params, bins), disc))
            }
        }
    }

    fn apply(&self, data: &Dataset) -> Result<Dataset> {
        match self {
            Prep::Numerical(p) => p.apply(data),
            Prep::Discretized(p, b) => b.apply(&p.apply(data)?),
        }
    }
}

/// Attribute subsets a mode trains on.
#[derive(Debug, Clone)]
enum Selection {
    All,
    Merged(FeatureSubset),
    PerSource(Vec<(Source, FeatureSubset)>),
}

impl Selection {
    fn fit(mode: Mode, data: &Dataset) -> Result<Selection> {
        Ok(match mode {
            Mode::MergeAll => Selection::All,
            Mode::SelectMerged => Selection::Merged(select_best_first(data)?),
            Mode::EnsemblePerSource => Selection::PerSource(select_per_source(data)?),
        })
    }
}

/// A trained cell model: a single learner or a per-source Vote.
enum CellModel {
    Single(crate::learners::Model, Option<Vec<usize>>),
    Vote(VoteModel),
}

impl CellModel {
    fn fit(algorithms: &[Algorithm], seed: u64, selection: &Selection, train_set: &Dataset) -> Result<CellModel> {
        match selection {
            Selection::All => Ok(CellModel::Single(train(&LearnerSpec::new(algorithms[0], seed), train_set)?, None)),
            Selection::Merged(fs) => {
                let model = train(&LearnerSpec::new(algorithms[0], seed), &project(train_set, &fs.indices)?)?;
                Ok(CellModel::Single(model, Some(fs.indices.clone())))
            }
            Selection::PerSource(parts) => {
                let mut members = Vec::new();
                for (source, fs) in parts {
                    let part = project(train_set, &fs.indices)?;
                    for &alg in algorithms {
                        let name = if algorithms.len() == 1 {
                            source.as_str().to_string()
                        } else {
                            format!("{} {}", alg.display_name(), source.as_str())
                        };
                        members.push(VoteMember {
                            name,
                            columns: fs.indices.clone(),
                            model: train(&LearnerSpec::new(alg, seed), &part)?,
                        });
                    }
                }
                Ok(CellModel::Vote(VoteModel::new(train_set.schema().clone(), members)?))
            }
        }
    }

    fn predict(&self, data: &Dataset) -> Result<Vec<ClassDistribution>> {
        match self {
            CellModel::Single(m, None) => data.rows().iter().map(|x| m.predict_distribution(x)).collect(),
            CellModel::Single(m, Some(cols)) => project(data, cols)?
                .rows()
                .iter()
                .map(|x| m.predict_distribution(x))
                .collect(),
            CellModel::Vote(v) => data.rows().iter().map(|x| v.predict_distribution(x)).collect(),
        }
    }

    fn rules(&self) -> String {
        match self {
            CellModel::Single(m, _) => m.export_rules().0,
            CellModel::Vote(v) => v.export_rules().0,
        }
    }
}

/// Preprocessed full data and full-data selections for one representation.
struct Prepared {
    data: Dataset,
    selections: Vec<(Mode, Selection)>,
}

impl Prepared {
    fn selection(&self, mode: Mode) -> &Selection {
        &self.selections.iter().find(|(m, _)| *m == mode).expect("prepared").1
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    cohort: &'a Dataset,
    folds: FoldAssignment,
    prepared: Vec<(Representation, Prepared)>,
}

impl Context<'_> {
    fn prepared(&self, rep: Representation) -> &Prepared {
        &self.prepared.iter().find(|(r, _)| *r == rep).expect("prepared").1
    }

    /// Cross-validates `algorithms` (one, or several for a heterogeneous
    /// vote) under a mode and representation.
    fn evaluate(&self, cell: CellId, algorithms: &[Algorithm]) -> Result<EvalReport> {
        let seed = self.config.learner_seed();
        let n_bins = self.config.n_bins;
        let prepared = self.prepared(cell.representation);
        if self.config.fit_in_fold {
            cross_validate_with(self.cohort, &self.folds, cell, |train_raw, test_raw| {
                let (prep, train_set) = Prep::fit(train_raw, cell.representation, n_bins)?;
                let test = prep.apply(test_raw)?;
                let selection = Selection::fit(cell.mode, &train_set)?;
                CellModel::fit(algorithms, seed, &selection, &train_set)?.predict(&test)
            })
        } else {
            let selection = prepared.selection(cell.mode);
            cross_validate_with(&prepared.data, &self.folds, cell, |train_set, test| {
                CellModel::fit(algorithms, seed, selection, train_set)?.predict(test)
            })
        }
    }

    fn full_model(&self, cell: CellId) -> Result<CellModel> {
        let prepared = self.prepared(cell.representation);
        CellModel::fit(
            &[cell.algorithm],
            self.config.learner_seed(),
            prepared.selection(cell.mode),
            &prepared.data,
        )
    }
}

fn in_cell(cell: &str, e: Error) -> Error {
    Error::InCell {
        cell: cell.to_string(),
        source: Box::new(e),
    }
}

/// Every requested cell, in grid order.
pub fn grid(config: &ExperimentConfig) -> Vec<CellId> {
    let mut modes = config.modes.clone();
    let mut reps = config.representations.clone();
    let mut algs = config.algorithms.clone();
    modes.sort();
    reps.sort();
    algs.sort();
    let mut cells = Vec::new();
    for &mode in &modes {
        for &representation in &reps {
            for &algorithm in &algs {
                cells.push(CellId {
                    mode,
                    representation,
                    algorithm,
                });
            }
        }
    }
    cells
}

fn provenance(config: &ExperimentConfig, cohort: &Dataset) -> Provenance {
    let labels = cohort.labels().unwrap_or_default();
    let class_counts = (0..cohort.schema().n_classes())
        .map(|c| labels.iter().filter(|&&l| l == c).count())
        .collect();
    Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        input: config
            .input_dir
            .as_ref()
            .map_or_else(|| "synthetic".to_string(), |p| p.display().to_string()),
        cv_seed: config.cv_seed(),
        generator_seed: config.generator_seed(),
        learner_seed: config.learner_seed(),
        anonymize_seed: config.anonymize_seed(),
        k: config.k,
        n_bins: config.n_bins,
        cutoffs: config.cutoffs.clone(),
        cutoff_labels: config.cutoff_labels.clone(),
        fit_in_fold: config.fit_in_fold,
        n_instances: cohort.len(),
        class_labels: cohort.schema().class_labels().to_vec(),
        class_counts,
    }
}

fn prepare(config: &ExperimentConfig, cohort: &Dataset, modes: &[Mode]) -> Result<Vec<(Representation, Prepared)>> {
    let mut reps = config.representations.clone();
    reps.sort();
    reps.into_iter()
        .map(|rep| {
            let (_, data) = Prep::fit(cohort, rep, config.n_bins)?;
            let selections = modes
                .iter()
                .map(|&m| Ok((m, Selection::fit(m, &data)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((rep, Prepared { data, selections }))
        })
        .collect()
}

fn selection_reports(prepared: &[(Representation, Prepared)]) -> Vec<SelectionReport> {
    let mut out = Vec::new();
    for &mode in &Mode::ALL {
        for (rep, p) in prepared {
            let schema = p.data.schema();
            match p.selections.iter().find(|(m, _)| *m == mode).map(|(_, s)| s) {
                Some(Selection::Merged(fs)) => out.push(SelectionReport {
                    mode,
                    representation: *rep,
                    dataset: "merged".into(),
                    n_candidates: schema.len(),
                    selected: fs.names(schema),
                    merit: fs.merit,
                }),
                Some(Selection::PerSource(parts)) => {
                    for (source, fs) in parts {
                        out.push(SelectionReport {
                            mode,
                            representation: *rep,
                            dataset: source.as_str().into(),
                            n_candidates: schema.source_indices(*source).len(),
                            selected: fs.names(schema),
                            merit: fs.merit,
                        });
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Picks the best cell of each mode: accuracy, then AUC, then algorithm
/// order, then representation order.
pub fn best_cells(reports: &[EvalReport]) -> Vec<CellId> {
    let mut modes: Vec<Mode> = reports.iter().map(|r| r.cell.mode).collect();
    modes.sort();
    modes.dedup();
    modes
        .into_iter()
        .filter_map(|mode| {
            reports
                .iter()
                .filter(|r| r.cell.mode == mode)
                .min_by(|a, b| {
                    b.accuracy_pct
                        .total_cmp(&a.accuracy_pct)
                        .then(b.auc.total_cmp(&a.auc))
                        .then(a.cell.algorithm.cmp(&b.cell.algorithm))
                        .then(a.cell.representation.cmp(&b.cell.representation))
                })
                .map(|r| r.cell)
        })
        .collect()
}

/// Runs every requested cell on an already labeled cohort.
pub fn run_on(config: &ExperimentConfig, cohort: &Dataset) -> Result<ReportBundle> {
    config.validate()?;
    let labels = cohort.require_labels()?;
    let folds = stratified_folds(labels, config.k, config.cv_seed())?;
    let mut modes = config.modes.clone();
    if config.vote_across_algorithms {
        modes.push(Mode::EnsemblePerSource);
    }
    let prepared = prepare(config, cohort, &modes)?;
    let ctx = Context {
        config,
        cohort,
        folds,
        prepared,
    };

    let cells = grid(config);
    let reports = cells
        .par_iter()
        .map(|&cell| ctx.evaluate(cell, &[cell.algorithm]).map_err(|e| in_cell(&cell.to_string(), e)))
        .collect::<Result<Vec<_>>>()?;

    let mut best = Vec::new();
    for cell in best_cells(&reports) {
        let report = reports.iter().find(|r| r.cell == cell).expect("cell in grid");
        let model = ctx.full_model(cell).map_err(|e| in_cell(&cell.to_string(), e))?;
        best.push(BestModel {
            cell,
            accuracy_pct: report.accuracy_pct,
            auc: report.auc,
            rules: model.rules(),
        });
    }

    let mut heterogeneous = Vec::new();
    if config.vote_across_algorithms {
        let mut algorithms = config.algorithms.clone();
        algorithms.sort();
        for (rep, _) in &ctx.prepared {
            let cell = CellId {
                mode: Mode::EnsemblePerSource,
                representation: *rep,
                algorithm: algorithms[0],
            };
            let report = ctx
                .evaluate(cell, &algorithms)
                .map_err(|e| in_cell(&format!("{}:{}:vote", cell.mode, rep), e))?;
            heterogeneous.push(HeterogeneousReport {
                representation: *rep,
                algorithms: algorithms.clone(),
                predictions: report.predictions,
                accuracy_pct: report.accuracy_pct,
                auc: report.auc,
            });
        }
    }

    Ok(ReportBundle {
        provenance: provenance(config, cohort),
        summary: summarize(&reports),
        selections: selection_reports(&ctx.prepared)
            .into_iter()
            .filter(|s| config.modes.contains(&s.mode))
            .collect(),
        reports,
        best,
        heterogeneous,
    })
}

/// Loads the cohort and runs the full grid.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<ReportBundle> {
    let cohort = load_cohort(config)?;
    run_on(config, &cohort)
}

/// Full-data selections only, for every representation.
pub fn selection_only(config: &ExperimentConfig, cohort: &Dataset) -> Result<Vec<SelectionReport>> {
    let prepared = prepare(config, cohort, &[Mode::SelectMerged, Mode::EnsemblePerSource])?;
    Ok(selection_reports(&prepared))
}

/// Rules of one cell's model trained on the full cohort.
pub fn cell_rules(config: &ExperimentConfig, cohort: &Dataset, cell: CellId) -> Result<String> {
    let mut reps = vec![cell.representation];
    reps.sort();
    let one = ExperimentConfig {
        representations: reps,
        ..config.clone()
    };
    let ctx = Context {
        config: &one,
        cohort,
        folds: stratified_folds(cohort.require_labels()?, config.k, config.cv_seed())?,
        prepared: prepare(&one, cohort, &[cell.mode])?,
    };
    ctx.full_model(cell)
        .map(|m| m.rules())
        .map_err(|e| in_cell(&cell.to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(modes: &str, algorithms: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!("modes = {modes}\nalgorithms = {algorithms}")).unwrap()
    }

    #[test]
    fn grid_is_complete() {
        let c = ExperimentConfig::default();
        assert_eq!(grid(&c).len(), 36);
        let b = run_pipeline(&small("merge_all", "j48, rep_tree")).unwrap();
        assert_eq!(b.reports.len(), 4);
        assert_eq!(b.summary.rows.len(), 2);
        assert_eq!(b.best.len(), 1);
        assert!(b.selections.is_empty());
    }

    #[test]
    fn accuracies_are_multiples_of_two_and_a_half() {
        let b = run_pipeline(&small("merge_all, select_merged, ensemble_per_source", "rep_tree")).unwrap();
        for r in &b.reports {
            let q = r.accuracy_pct / 2.5;
            assert!((q - q.round()).abs() < 1e-9, "{}: {}", r.cell, r.accuracy_pct);
        }
        assert_eq!(b.selections.iter().filter(|s| s.mode == Mode::EnsemblePerSource).count(), 6);
    }

    #[test]
    fn noiseless_stump_on_summall_is_perfect() {
        let mut c = ExperimentConfig::parse("modes = merge_all\nrepresentations = numerical\nnoise = 0").unwrap();
        c.algorithms = vec![Algorithm::C45Tree];
        let cohort = load_cohort(&c).unwrap();
        let summ = cohort.schema().index_of("SummAll").unwrap();
        let only = project(&cohort, &[summ]).unwrap();
        let b = run_on(&c, &only).unwrap();
        assert_eq!(b.reports[0].accuracy_pct, 100.0);
    }

    #[test]
    fn fit_in_fold_runs_every_mode() {
        let c = ExperimentConfig::parse("algorithms = rep_tree\nfit_in_fold = true\nk = 5").unwrap();
        let b = run_pipeline(&c).unwrap();
        assert_eq!(b.reports.len(), 6);
    }

    #[test]
    fn heterogeneous_vote_is_reported_separately() {
        let c = ExperimentConfig::parse(
            "modes = merge_all\nrepresentations = numerical\nalgorithms = j48, nnge\nvote_across_algorithms = true",
        )
        .unwrap();
        let b = run_pipeline(&c).unwrap();
        assert_eq!(b.reports.len(), 2);
        assert_eq!(b.heterogeneous.len(), 1);
        assert_eq!(b.heterogeneous[0].predictions.len(), 40);
    }

    #[test]
    fn cell_errors_carry_the_cell() {
        let c = small("merge_all", "j48");
        let cohort = load_cohort(&c).unwrap();
        let one_class = cohort.with_labels(vec![0; cohort.len()]).unwrap();
        let e = run_on(&c, &one_class).unwrap_err();
        assert!(!e.is_config_error());
    }
}

//! Stratified 10-fold CV of every algorithm, with a majority baseline.

use edufuse::evaluation::{cross_validate, cross_validate_with, stratified_folds, CellId, Mode, Representation};
use edufuse::harness::{generate_synthetic, GenParams};
use edufuse::learners::{Algorithm, ClassDistribution, LearnerSpec};
use edufuse::preprocess::{label_from_scores, min_max_normalize, ClassCutoffs};

fn main() -> edufuse::error::Result<()> {
    let raw = generate_synthetic(&GenParams::default(), 3)?;
    let (data, _) = min_max_normalize(&label_from_scores(&raw, &ClassCutoffs::default())?)?;

    let folds = stratified_folds(data.require_labels()?, 10, 1)?;
    println!("fold sizes {:?}", folds.fold_sizes());

    for algorithm in Algorithm::ALL {
        let cell = CellId {
            mode: Mode::MergeAll,
            representation: Representation::Numerical,
            algorithm,
        };
        let r = cross_validate(&LearnerSpec::new(algorithm, 1), &data, 10, 1, cell)?;
        println!("{:<12} accuracy {:6.2}%  AUC {:.3}", algorithm.display_name(), r.accuracy_pct, r.auc);
    }

    let cell = "merge_all:numerical:c45_tree".parse()?;
    let majority = cross_validate_with(&data, &folds, cell, |train, test| {
        Ok(vec![ClassDistribution::from_counts(&train.class_counts()); test.len()])
    })?;
    println!("{:<12} accuracy {:6.2}%", "majority", majority.accuracy_pct);
    Ok(())
}

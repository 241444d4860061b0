use edufuse::evaluation::{mean, Mode, Representation};
use edufuse::harness::{run_pipeline, ExperimentConfig};
use edufuse::learners::Algorithm;
use proptest::prelude::*;
use proptest::sample::subsequence;

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        subsequence(Mode::ALL.to_vec(), 1..=3),
        subsequence(Representation::ALL.to_vec(), 1..=2),
        subsequence(Algorithm::ALL.to_vec(), 1..=3),
        1u64..1000,
        any::<bool>(),
    )
        .prop_map(|(modes, representations, algorithms, seed, fit_in_fold)| ExperimentConfig {
            modes,
            representations,
            algorithms,
            cv_seed: Some(seed),
            generator_seed: Some(seed),
            learner_seed: Some(seed),
            anonymize_seed: Some(seed),
            fit_in_fold,
            ..ExperimentConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn grid_is_complete_and_reproducible(c in config()) {
        let a = run_pipeline(&c).unwrap();
        prop_assert_eq!(a.reports.len(), c.modes.len() * c.representations.len() * c.algorithms.len());
        prop_assert_eq!(a.best.len(), c.modes.len());
        prop_assert_eq!(&run_pipeline(&c).unwrap(), &a);
        for r in &a.reports {
            prop_assert_eq!(r.predictions.len(), 40);
            prop_assert!((0.0..=1.0).contains(&r.auc));
        }
    }

    #[test]
    fn summary_rows_are_column_means(c in config()) {
        let b = run_pipeline(&c).unwrap();
        for row in &b.summary.rows {
            let cells: Vec<_> = b.reports.iter()
                .filter(|r| r.cell.mode == row.mode && r.cell.representation == row.representation)
                .collect();
            prop_assert_eq!(row.n_algorithms, cells.len());
            prop_assert_eq!(Some(row.mean_accuracy), mean(cells.iter().map(|r| r.accuracy_pct)));
        }
    }
}

//! Stratified k-fold cross-validation, accuracy, AUC and averaged summaries.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{train, Algorithm, ClassDistribution, Classifier, LearnerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// All attributes of all sources in one table.
    MergeAll,
    /// CFS-selected attributes of the merged table.
    SelectMerged,
    /// One model per source on its CFS-selected attributes, combined by Vote.
    EnsemblePerSource,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::MergeAll, Mode::SelectMerged, Mode::EnsemblePerSource];

    pub fn id(self) -> &'static str {
        match self {
            Mode::MergeAll => "merge_all",
            Mode::SelectMerged => "select_merged",
            Mode::EnsemblePerSource => "ensemble_per_source",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.id() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Representation {
    /// Min-max normalized values.
    Numerical,
    /// Equal-width bins.
    Discretized,
}

impl Representation {
    pub const ALL: [Representation; 2] = [Representation::Numerical, Representation::Discretized];

    pub fn id(self) -> &'static str {
        match self {
            Representation::Numerical => "numerical",
            Representation::Discretized => "discretized",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "numerical" | "numeric" => Ok(Representation::Numerical),
            "discretized" | "discrete" => Ok(Representation::Discretized),
            _ => Err(Error::Config(format!("unknown representation `{s}`"))),
        }
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub mode: Mode,
    pub representation: Representation,
    pub algorithm: Algorithm,
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.mode, self.representation, self.algorithm)
    }
}

impl FromStr for CellId {
    type Err = Error;

    /// Parses `MODE:REP:ALGO`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [m, r, a] = parts.as_slice() else {
            return Err(Error::Config(format!("cell `{s}` is not MODE:REP:ALGO")));
        };
        Ok(CellId {
            mode: m.parse()?,
            representation: r.parse()?,
            algorithm: a.parse()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    /// Fold index per instance.
    pub folds: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles each class (in class order) with one seeded generator, then
/// deals all instances round-robin to the folds.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { k, n });
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; n];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { folds, k, seed })
}

/// Percentage of matching labels.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch(predicted.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * correct as f64 / truth.len() as f64)
}

/// Mann–Whitney AUC of `scores` for the `positive` class, midranks for ties.
pub fn auc(scores: &[f64], labels: &[usize], positive: usize) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; a tied run i..=j shares their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mid;
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|&&l| l == positive).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::SingleClass);
    }
    let rank_sum: f64 = (0..labels.len())
        .filter(|&i| labels[i] == positive)
        .map(|i| ranks[i])
        .sum();
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub truth: usize,
    pub predicted: usize,
    /// Probability of the first class label (PASS by default).
    pub pass_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cell: CellId,
    /// Out-of-fold predictions in dataset order.
    pub predictions: Vec<Prediction>,
    pub accuracy_pct: f64,
    pub auc: f64,
}

/// Cross-validates with a caller-supplied fold function that trains on
/// the first dataset and returns distributions for the rows of the second.
pub fn cross_validate_with<F>(dataset: &Dataset, folds: &FoldAssignment, cell: CellId, fit_predict: F) -> Result<EvalReport>
where
    F: Fn(&Dataset, &Dataset) -> Result<Vec<ClassDistribution>>,
{
    let labels = dataset.require_labels()?;
    if folds.folds.len() != dataset.len() {
        return Err(Error::LengthMismatch(folds.folds.len(), dataset.len()));
    }
    let mut slots: Vec<Option<ClassDistribution>> = vec![None; dataset.len()];
    for f in 0..folds.k {
        let test_idx = folds.test_indices(f);
        if test_idx.is_empty() {
            continue;
        }
        let train = dataset.subset(&folds.train_indices(f));
        let test = dataset.subset(&test_idx);
        let dists = fit_predict(&train, &test)?;
        if dists.len() != test_idx.len() {
            return Err(Error::LengthMismatch(dists.len(), test_idx.len()));
        }
        for (i, d) in test_idx.into_iter().zip(dists) {
            slots[i] = Some(d);
        }
    }
    let predictions: Vec<Prediction> = slots
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let d = d.expect("every instance is in one fold");
            Prediction {
                id: dataset.ids()[i].clone(),
                truth: labels[i],
                predicted: d.argmax(),
                pass_probability: d.probability(0),
            }
        })
        .collect();
    let predicted: Vec<usize> = predictions.iter().map(|p| p.predicted).collect();
    let scores: Vec<f64> = predictions.iter().map(|p| p.pass_probability).collect();
    Ok(EvalReport {
        cell,
        accuracy_pct: accuracy(&predicted, labels)?,
        auc: auc(&scores, labels, 0)?,
        predictions,
    })
}

/// Cross-validates a single learner with fresh stratified folds.
pub fn cross_validate(spec: &LearnerSpec, dataset: &Dataset, k: usize, seed: u64, cell: CellId) -> Result<EvalReport> {
    let folds = stratified_folds(dataset.require_labels()?, k, seed)?;
    cross_validate_with(dataset, &folds, cell, |train_set, test| {
        let model = train(spec, train_set)?;
        test.rows().iter().map(|x| model.predict_distribution(x)).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mode: Mode,
    pub representation: Representation,
    pub mean_accuracy: f64,
    pub mean_auc: f64,
    pub n_algorithms: usize,
}

/// Unweighted means per (mode, representation), in grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn get(&self, mode: Mode, representation: Representation) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.mode == mode && r.representation == representation)
    }

    /// Mean accuracy of a mode over its representations.
    pub fn mode_accuracy(&self, mode: Mode) -> Option<f64> {
        mean(self.rows.iter().filter(|r| r.mode == mode).map(|r| r.mean_accuracy))
    }

    /// Mean accuracy of a representation over the modes.
    pub fn representation_accuracy(&self, representation: Representation) -> Option<f64> {
        mean(
            self.rows
                .iter()
                .filter(|r| r.representation == representation)
                .map(|r| r.mean_accuracy),
        )
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(reports: &[EvalReport]) -> SummaryTable {
    let mut keys: Vec<(Mode, Representation)> = reports
        .iter()
        .map(|r| (r.cell.mode, r.cell.representation))
        .collect();
    keys.sort();
    keys.dedup();
    let rows = keys
        .into_iter()
        .map(|(mode, representation)| {
            let mut cells: Vec<&EvalReport> = reports
                .iter()
                .filter(|r| r.cell.mode == mode && r.cell.representation == representation)
                .collect();
            cells.sort_by_key(|r| r.cell.algorithm);
            SummaryRow {
                mode,
                representation,
                mean_accuracy: mean(cells.iter().map(|r| r.accuracy_pct)).unwrap_or(0.0),
                mean_auc: mean(cells.iter().map(|r| r.auc)).unwrap_or(0.0),
                n_algorithms: cells.len(),
            }
        })
        .collect();
    SummaryTable { rows }
}

/// Difference between a printed average and the mean of its column, when
/// it exceeds print rounding (0.005).
pub fn average_discrepancy(values: &[f64], printed: f64) -> Option<f64> {
    let m = mean(values.iter().copied())?;
    let diff = printed - m;
    (diff.abs() > 0.005).then_some(diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn pair_count_auc(scores: &[f64], labels: &[usize]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 0 && labels[j] == 1 {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    fn cohort_labels() -> Vec<usize> {
        let mut l = vec![0; 21];
        l.extend(vec![1; 19]);
        l
    }

    #[test]
    fn folds_for_the_paper_cohort() {
        let labels = cohort_labels();
        let f = stratified_folds(&labels, 10, 1).unwrap();
        assert_eq!(f.fold_sizes(), vec![4; 10]);
        let mut mix: Vec<(usize, usize)> = (0..10)
            .map(|k| {
                let t = f.test_indices(k);
                let p = t.iter().filter(|&&i| labels[i] == 0).count();
                (p, t.len() - p)
            })
            .collect();
        mix.sort();
        // 21 = 2*10 + 1 and 19 = 2*10 - 1: one fold trades a FAIL for a PASS
        let mut expected = vec![(2, 2); 9];
        expected.push((3, 1));
        assert_eq!(mix, expected);
        assert_eq!(stratified_folds(&labels, 10, 1).unwrap(), f);
        assert_ne!(stratified_folds(&labels, 10, 2).unwrap().folds, f.folds);
    }

    #[test]
    fn leave_one_out_and_invalid_k() {
        let labels = vec![0, 1, 0, 1, 1];
        let f = stratified_folds(&labels, 5, 0).unwrap();
        assert_eq!(f.fold_sizes(), vec![1; 5]);
        assert!(matches!(stratified_folds(&labels, 6, 0), Err(Error::InvalidFolds { k: 6, n: 5 })));
        assert!(stratified_folds(&labels, 1, 0).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let truth = vec![0; 40];
        let mut pred = vec![0; 32];
        pred.extend(vec![1; 8]);
        assert_eq!(accuracy(&pred, &truth).unwrap(), 80.0);
        assert_eq!(accuracy(&truth, &truth).unwrap(), 100.0);
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.6, 0.4, 0.2], &[0, 0, 1, 1], 0).unwrap(), 1.0);
        assert_eq!(auc(&[0.9, 0.8, 0.6, 0.2], &[0, 1, 0, 1], 0).unwrap(), 0.75);
        assert_eq!(auc(&[0.5; 6], &[0, 1, 0, 1, 1, 0], 0).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[0, 0], 0), Err(Error::SingleClass)));
    }

    #[test]
    fn table_one_average() {
        let col = [72.5, 62.5, 80.0, 80.0, 72.5, 70.0];
        let m = mean(col.iter().copied()).unwrap();
        assert!((m - 72.916_666_666_666_67).abs() < 1e-9);
        let diff = average_discrepancy(&col, 73.33).unwrap();
        assert!((diff - 0.413_333).abs() < 1e-5);
        assert_eq!(average_discrepancy(&[70.0; 6], 70.0), None);
    }

    fn cell(mode: Mode, representation: Representation, algorithm: Algorithm) -> CellId {
        CellId {
            mode,
            representation,
            algorithm,
        }
    }

    #[test]
    fn summary_means() {
        let reports: Vec<EvalReport> = Algorithm::ALL
            .iter()
            .map(|&a| EvalReport {
                cell: cell(Mode::MergeAll, Representation::Numerical, a),
                predictions: Vec::new(),
                accuracy_pct: 70.0,
                auc: 0.5,
            })
            .collect();
        let s = summarize(&reports);
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].mean_accuracy, 70.0);
        assert_eq!(s.rows[0].n_algorithms, 6);
        let one = summarize(&reports[..1]);
        assert_eq!(one.rows[0].mean_auc, 0.5);
    }

    #[test]
    fn cell_ids_round_trip() {
        let c = cell(Mode::EnsemblePerSource, Representation::Discretized, Algorithm::RepTree);
        assert_eq!(c.to_string(), "ensemble_per_source:discretized:rep_tree");
        assert_eq!(c.to_string().parse::<CellId>().unwrap(), c);
        assert!("merge_all:numerical".parse::<CellId>().is_err());
    }

    #[test]
    fn memorizing_learner_is_perfect() {
        use crate::dataset::{Attribute, AttributeSchema, Source, Value};
        let labels = cohort_labels();
        let schema = AttributeSchema::with_attributes(vec![Attribute::numeric("x", Source::Logs)]).unwrap();
        let rows = labels.iter().map(|&l| vec![Value::Num(l as f64)]).collect();
        let ids = (0..40).map(|i| format!("s{i}")).collect();
        let d = Dataset::new(schema, ids, rows, Some(labels.clone()), None).unwrap();
        let folds = stratified_folds(&labels, 10, 1).unwrap();
        let c = cell(Mode::MergeAll, Representation::Numerical, Algorithm::C45Tree);
        let oracle = cross_validate_with(&d, &folds, c, |_, test| {
            Ok(test
                .rows()
                .iter()
                .map(|r| ClassDistribution::one_hot(r[0].as_num().unwrap() as usize, 2))
                .collect())
        })
        .unwrap();
        assert_eq!((oracle.accuracy_pct, oracle.auc), (100.0, 1.0));
        let majority = cross_validate_with(&d, &folds, c, |train, test| {
            let counts = train.class_counts();
            Ok(vec![ClassDistribution::from_counts(&counts); test.len()])
        })
        .unwrap();
        assert_eq!(majority.accuracy_pct, 52.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn auc_matches_pair_counting(seed in any::<u64>(), n in 2usize..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..10u32)) / 10.0).collect();
            let a = auc(&scores, &labels, 0).unwrap();
            prop_assert!((a - pair_count_auc(&scores, &labels)).abs() < 1e-12);
            let flipped: Vec<usize> = labels.iter().map(|&l| 1 - l).collect();
            prop_assert!((auc(&scores, &flipped, 0).unwrap() - (1.0 - a)).abs() < 1e-12);
            let cubed: Vec<f64> = scores.iter().map(|s| s * s * s + 2.0).collect();
            prop_assert_eq!(auc(&cubed, &labels, 0).unwrap(), a);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let ps: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
            let pl: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
            prop_assert!((auc(&ps, &pl, 0).unwrap() - a).abs() < 1e-12);
        }

        #[test]
        fn folds_partition_and_stratify(seed in any::<u64>(), n_pos in 1usize..40, n_neg in 1usize..40, k in 2usize..12) {
            let mut labels = vec![0; n_pos];
            labels.extend(vec![1; n_neg]);
            prop_assume!(k <= labels.len());
            let f = stratified_folds(&labels, k, seed).unwrap();
            let sizes = f.fold_sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), labels.len());
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for (class, total) in [(0, n_pos), (1, n_neg)] {
                let share = total as f64 / k as f64;
                for fold in 0..k {
                    let c = f.test_indices(fold).iter().filter(|&&i| labels[i] == class).count() as f64;
                    prop_assert!((c - share).abs() < 1.0 + 1e-9);
                }
            }
        }
    }
}

//! Correlation-based feature selection (CFS).
//!
//! Correlations are symmetric uncertainties over discrete codes; numeric
//! attributes are discretized against the class with Fayyad–Irani MDL
//! cuts first. Subsets are scored by
//! `k * mean(r_cf) / sqrt(k + k(k-1) * mean(r_ff))`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSchema, Dataset, Source, Value};
use crate::error::{Error, Result};

/// Consecutive non-improving expansions before best-first search stops.
pub const STALE_LIMIT: usize = 5;
/// Largest attribute count accepted by [`select_exhaustive`].
pub const EXHAUSTIVE_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    /// Sorted attribute indices.
    pub indices: Vec<usize>,
    pub merit: f64,
    /// Every subset evaluated, in evaluation order.
    pub trace: Vec<(Vec<usize>, f64)>,
}

impl FeatureSubset {
    pub fn names(&self, schema: &AttributeSchema) -> Vec<String> {
        self.indices
            .iter()
            .map(|&i| schema.attribute(i).name.clone())
            .collect()
    }
}

fn entropy_of<K: Ord>(counts: &BTreeMap<K, usize>, n: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// `2 I(a; b) / (H(a) + H(b))` over discrete codes; 0 when either entropy is 0.
pub fn symmetric_uncertainty(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let n = a.len() as f64;
    let mut ca = BTreeMap::new();
    let mut cb = BTreeMap::new();
    let mut cab = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_insert(0) += 1;
        *cb.entry(y).or_insert(0) += 1;
        *cab.entry((x, y)).or_insert(0) += 1;
    }
    let ha = entropy_of(&ca, n);
    let hb = entropy_of(&cb, n);
    if ha <= 0.0 || hb <= 0.0 {
        return Ok(0.0);
    }
    let info = ha + hb - entropy_of(&cab, n);
    Ok((2.0 * info / (ha + hb)).clamp(0.0, 1.0))
}

fn class_entropy(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).log2())
        .sum()
}

/// Fayyad–Irani MDL cut points of `values` against `labels`, ascending.
pub fn mdl_cut_points(values: &[f64], labels: &[usize], n_classes: usize) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut cuts = Vec::new();
    mdl_recurse(&pairs, n_classes, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    cuts
}

fn mdl_recurse(sorted: &[(f64, usize)], n_classes: usize, cuts: &mut Vec<f64>) {
    let n = sorted.len();
    if n < 2 {
        return;
    }
    let mut total = vec![0.0; n_classes];
    for &(_, y) in sorted {
        total[y] += 1.0;
    }
    let h = class_entropy(&total);
    let mut left = vec![0.0; n_classes];
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for k in 0..n - 1 {
        left[sorted[k].1] += 1.0;
        if sorted[k].0 == sorted[k + 1].0 {
            continue;
        }
        let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let nl = (k + 1) as f64;
        let e = (nl * class_entropy(&left) + (n as f64 - nl) * class_entropy(&right)) / n as f64;
        if best.as_ref().is_none_or(|(b, ..)| e < *b) {
            best = Some((e, k, left.clone()));
        }
    }
    let Some((e, k, left)) = best else { return };
    let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
    let present = |c: &[f64]| c.iter().filter(|&&v| v > 0.0).count() as f64;
    let gain = h - e;
    let delta = (3f64.powf(present(&total)) - 2.0).log2()
        - (present(&total) * h - present(&left) * class_entropy(&left) - present(&right) * class_entropy(&right));
    let n_f = n as f64;
    if gain <= ((n_f - 1.0).log2() + delta) / n_f {
        return;
    }
    let (lo, hi) = (sorted[k].0, sorted[k + 1].0);
    let mut cut = lo + (hi - lo) / 2.0;
    if cut >= hi {
        cut = lo;
    }
    cuts.push(cut);
    mdl_recurse(&sorted[..=k], n_classes, cuts);
    mdl_recurse(&sorted[k + 1..], n_classes, cuts);
}

/// Discrete codes per attribute plus the class codes, with cached correlations.
pub struct CfsEvaluator {
    class_su: Vec<f64>,
    pair_su: Vec<Vec<f64>>,
}

impl CfsEvaluator {
    pub fn new(dataset: &Dataset) -> Result<Self> {
        let labels = dataset.require_labels()?;
        let d = dataset.n_attributes();
        let n_classes = dataset.schema().n_classes();
        let codes: Vec<Vec<usize>> = (0..d)
            .map(|a| match dataset.numeric_column(a) {
                Some(values) => {
                    let cuts = mdl_cut_points(&values, labels, n_classes);
                    values
                        .iter()
                        .map(|&x| cuts.iter().filter(|&&c| x > c).count())
                        .collect()
                }
                None => dataset
                    .rows()
                    .iter()
                    .map(|r| match r[a] {
                        Value::Cat(c) => c,
                        Value::Num(_) => 0,
                    })
                    .collect(),
            })
            .collect();
        let class_su = codes
            .iter()
            .map(|c| symmetric_uncertainty(c, labels))
            .collect::<Result<Vec<_>>>()?;
        let mut pair_su = vec![vec![0.0; d]; d];
        for i in 0..d {
            pair_su[i][i] = symmetric_uncertainty(&codes[i], &codes[i])?;
            for j in i + 1..d {
                let su = symmetric_uncertainty(&codes[i], &codes[j])?;
                pair_su[i][j] = su;
                pair_su[j][i] = su;
            }
        }
        Ok(CfsEvaluator { class_su, pair_su })
    }

    pub fn n_attributes(&self) -> usize {
        self.class_su.len()
    }

    /// Feature-class symmetric uncertainty per attribute.
    pub fn class_correlations(&self) -> &[f64] {
        &self.class_su
    }

    /// Feature-feature symmetric uncertainty.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.pair_su[i][j]
    }

    /// CFS merit of `subset` (order-insensitive).
    pub fn merit(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let d = self.n_attributes();
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        if let Some(&bad) = s.iter().find(|&&i| i >= d) {
            return Err(Error::IndexOutOfRange { index: bad, len: d });
        }
        Ok(merit_from(&s.iter().map(|&i| self.class_su[i]).collect::<Vec<_>>(), &{
            let mut ff = Vec::new();
            for (a, &i) in s.iter().enumerate() {
                for &j in &s[a + 1..] {
                    ff.push(self.pair_su[i][j]);
                }
            }
            ff
        }))
    }
}

/// `k * mean(r_cf) / sqrt(k + k(k-1) * mean(r_ff))`.
pub fn merit_from(r_cf: &[f64], r_ff: &[f64]) -> f64 {
    let k = r_cf.len() as f64;
    let mean_cf = r_cf.iter().sum::<f64>() / k;
    let mean_ff = if r_ff.is_empty() {
        0.0
    } else {
        r_ff.iter().sum::<f64>() / r_ff.len() as f64
    };
    let denom = (k + k * (k - 1.0) * mean_ff).sqrt();
    if denom <= 0.0 {
        return 0.0;
    }
    k * mean_cf / denom
}

pub fn cfs_merit(subset: &[usize], dataset: &Dataset) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    CfsEvaluator::new(dataset)?.merit(subset)
}

/// Higher merit first, then the lexicographically smaller subset.
fn frontier_order(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}

fn best_singleton(eval: &CfsEvaluator) -> FeatureSubset {
    let su = eval.class_correlations();
    let i = (0..su.len()).fold(0, |b, i| if su[i] > su[b] { i } else { b });
    FeatureSubset {
        indices: vec![i],
        merit: su[i],
        trace: Vec::new(),
    }
}

pub fn select_best_first(dataset: &Dataset) -> Result<FeatureSubset> {
    if dataset.n_attributes() == 0 {
        return Err(Error::EmptySubset);
    }
    let eval = CfsEvaluator::new(dataset)?;
    best_first_with(&eval)
}

pub(crate) fn best_first_with(eval: &CfsEvaluator) -> Result<FeatureSubset> {
    let d = eval.n_attributes();
    let mut open: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    visited.insert(Vec::new());
    let mut best: (f64, Vec<usize>) = (0.0, Vec::new());
    let mut trace = Vec::new();
    let mut stale = 0;
    while stale < STALE_LIMIT {
        open.sort_by(frontier_order);
        if open.is_empty() {
            break;
        }
        let (_, subset) = open.remove(0);
        let mut improved = false;
        for f in 0..d {
            if subset.contains(&f) {
                continue;
            }
            let mut child = subset.clone();
            child.push(f);
            child.sort_unstable();
            if !visited.insert(child.clone()) {
                continue;
            }
            let m = eval.merit(&child)?;
            trace.push((child.clone(), m));
            if m > best.0 {
                best = (m, child.clone());
                improved = true;
            }
            open.push((m, child));
        }
        stale = if improved { 0 } else { stale + 1 };
    }
    if best.1.is_empty() || best.0 <= 0.0 {
        let mut single = best_singleton(eval);
        single.trace = trace;
        return Ok(single);
    }
    Ok(FeatureSubset {
        indices: best.1,
        merit: best.0,
        trace,
    })
}

/// Global merit maximizer over all non-empty subsets; ties go to the
/// smaller subset, then the lexicographically smaller one.
pub fn select_exhaustive(dataset: &Dataset) -> Result<FeatureSubset> {
    let d = dataset.n_attributes();
    if d > EXHAUSTIVE_MAX {
        return Err(Error::TooManyAttributes {
            got: d,
            max: EXHAUSTIVE_MAX,
        });
    }
    if d == 0 {
        return Err(Error::EmptySubset);
    }
    let eval = CfsEvaluator::new(dataset)?;
    let mut subsets: Vec<Vec<usize>> = (1u32..(1u32 << d))
        .map(|mask| (0..d).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in subsets {
        let m = eval.merit(&s)?;
        if best.as_ref().is_none_or(|(b, _)| m > *b) {
            best = Some((m, s));
        }
    }
    let (merit, indices) = best.expect("d >= 1");
    Ok(FeatureSubset {
        indices,
        merit,
        trace: Vec::new(),
    })
}

/// Best-first selection within each source's columns; indices refer to
/// the merged schema.
pub fn select_per_source(dataset: &Dataset) -> Result<Vec<(Source, FeatureSubset)>> {
    let schema = dataset.schema();
    let mut out = Vec::new();
    for source in schema.sources() {
        let cols = schema.source_indices(source);
        let part = crate::preprocess::project(dataset, &cols)?;
        let mut fs = select_best_first(&part)?;
        fs.indices = fs.indices.iter().map(|&i| cols[i]).collect();
        for (s, _) in fs.trace.iter_mut() {
            *s = s.iter().map(|&i| cols[i]).collect();
        }
        out.push((source, fs));
    }
    Ok(out)
}

/// Attribute names of a subset, for comparing selections across schemas.
pub fn selected_names(schema: &AttributeSchema, fs: &FeatureSubset) -> BTreeSet<String> {
    fs.names(schema).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Attribute;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Mutual information and entropies straight from the definition.
    fn su_oracle(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len() as f64;
        let av: BTreeSet<usize> = a.iter().copied().collect();
        let bv: BTreeSet<usize> = b.iter().copied().collect();
        let p = |f: &dyn Fn(usize) -> bool| (0..a.len()).filter(|&i| f(i)).count() as f64 / n;
        let h = |vals: &BTreeSet<usize>, col: &[usize]| -> f64 {
            vals.iter()
                .map(|&v| p(&|i| col[i] == v))
                .map(|q| if q > 0.0 { -q * q.ln() } else { 0.0 })
                .sum::<f64>()
                / 2f64.ln()
        };
        let (ha, hb) = (h(&av, a), h(&bv, b));
        if ha == 0.0 || hb == 0.0 {
            return 0.0;
        }
        let mut i = 0.0;
        for &x in &av {
            for &y in &bv {
                let pxy = p(&|k| a[k] == x && b[k] == y);
                if pxy > 0.0 {
                    i += pxy * (pxy / (p(&|k| a[k] == x) * p(&|k| b[k] == y))).log2();
                }
            }
        }
        2.0 * i / (ha + hb)
    }

    fn numeric_dataset(cols: &[Vec<f64>], labels: Vec<usize>) -> Dataset {
        let attrs = (0..cols.len())
            .map(|i| Attribute::numeric(format!("f{i}"), Source::Logs))
            .collect();
        let schema = AttributeSchema::with_attributes(attrs).unwrap();
        let n = labels.len();
        let rows = (0..n)
            .map(|r| cols.iter().map(|c| Value::Num(c[r])).collect())
            .collect();
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        Dataset::new(schema, ids, rows, Some(labels), None).unwrap()
    }

    #[test]
    fn su_examples() {
        let a = [0, 1, 2, 0, 1, 2];
        assert_eq!(symmetric_uncertainty(&a, &a).unwrap(), 1.0);
        assert_eq!(symmetric_uncertainty(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(symmetric_uncertainty(&[3, 3, 3], &[0, 1, 0]).unwrap(), 0.0);
        assert!(matches!(symmetric_uncertainty(&[0], &[0, 1]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn merit_formula() {
        assert_eq!(merit_from(&[0.4], &[]), 0.4);
        // duplicated feature: r_ff = 1 gives no gain over one copy
        assert_eq!(merit_from(&[0.5, 0.5], &[1.0]), 0.5);
        assert_eq!(merit_from(&[0.0, 0.0], &[0.0]), 0.0);
    }

    #[test]
    fn mdl_finds_a_clean_cut_and_rejects_noise() {
        let values: Vec<f64> = (0..20).map(f64::from).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        assert_eq!(mdl_cut_points(&values, &labels, 2), vec![9.5]);
        let alternating: Vec<usize> = (0..20).map(|i| i % 2).collect();
        assert!(mdl_cut_points(&values, &alternating, 2).is_empty());
    }

    #[test]
    fn duplicated_pair_equals_singleton() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let d = numeric_dataset(&[x.clone(), x], labels);
        let single = cfs_merit(&[0], &d).unwrap();
        assert_eq!(cfs_merit(&[0, 1], &d).unwrap(), single);
        let ex = select_exhaustive(&d).unwrap();
        assert_eq!(ex.indices, vec![0]);
    }

    #[test]
    fn relevant_feature_is_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i % 2 == 0)).collect();
        let relevant: Vec<f64> = labels.iter().map(|&y| y as f64 + rng.gen::<f64>() * 0.5).collect();
        let mut cols = vec![relevant];
        for _ in 0..4 {
            cols.push((0..40).map(|_| rng.gen()).collect());
        }
        let d = numeric_dataset(&cols, labels);
        let bf = select_best_first(&d).unwrap();
        assert_eq!(bf.indices, vec![0]);
        assert_eq!(select_exhaustive(&d).unwrap().indices, vec![0]);
        assert!(!bf.trace.is_empty());
    }

    #[test]
    fn empty_subset_and_large_d_are_errors() {
        let d = numeric_dataset(&[vec![0.0, 1.0]], vec![0, 1]);
        assert!(matches!(cfs_merit(&[], &d), Err(Error::EmptySubset)));
        let cols: Vec<Vec<f64>> = (0..21).map(|_| vec![0.0, 1.0]).collect();
        let wide = numeric_dataset(&cols, vec![0, 1]);
        assert!(matches!(select_exhaustive(&wide), Err(Error::TooManyAttributes { .. })));
    }

    #[test]
    fn fallback_when_nothing_correlates() {
        let d = numeric_dataset(&[vec![1.0; 6], vec![2.0; 6]], vec![0, 1, 0, 1, 0, 1]);
        let bf = select_best_first(&d).unwrap();
        assert_eq!(bf.indices, vec![0]);
        assert_eq!(bf.merit, 0.0);
    }

    fn random_dataset(seed: u64, d: usize, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let strength = rng.gen::<f64>();
                labels
                    .iter()
                    .map(|&y| {
                        let v = f64::from(rng.gen_range(0..10u32));
                        if j % 2 == 0 { v + strength * 8.0 * y as f64 } else { v }
                    })
                    .collect()
            })
            .collect();
        numeric_dataset(&cols, labels)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn su_matches_definition_and_is_symmetric(
            a in prop::collection::vec(0usize..4, 1..60),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<usize> = a.iter().map(|&x| if rng.gen_bool(0.5) { x } else { rng.gen_range(0..3) }).collect();
            let ab = symmetric_uncertainty(&a, &b).unwrap();
            let ba = symmetric_uncertainty(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - su_oracle(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn search_merits_are_ordered(seed in any::<u64>(), d in 1usize..7) {
            let data = random_dataset(seed, d, 40);
            let eval = CfsEvaluator::new(&data).unwrap();
            let best_single = eval.class_correlations().iter().cloned().fold(0.0, f64::max);
            let bf = select_best_first(&data).unwrap();
            let ex = select_exhaustive(&data).unwrap();
            prop_assert!(ex.merit >= bf.merit);
            prop_assert!(bf.merit >= best_single);
            prop_assert_eq!(eval.merit(&bf.indices).unwrap(), bf.merit);
        }

        #[test]
        fn permuting_attributes_keeps_the_selection(seed in any::<u64>(), d in 2usize..7) {
            let data = random_dataset(seed, d, 40);
            let mut order: Vec<usize> = (0..d).collect();
            order.reverse();
            let cols: Vec<Vec<f64>> = order.iter().map(|&j| data.numeric_column(j).unwrap()).collect();
            let names: Vec<String> = order.iter().map(|&j| data.schema().attribute(j).name.clone()).collect();
            let attrs = names.iter().map(|n| Attribute::numeric(n.clone(), Source::Logs)).collect();
            let schema = AttributeSchema::with_attributes(attrs).unwrap();
            let rows = (0..data.len()).map(|r| cols.iter().map(|c| Value::Num(c[r])).collect()).collect();
            let rev = Dataset::new(schema, data.ids().to_vec(), rows, data.labels().map(<[usize]>::to_vec), None).unwrap();
            let a = select_exhaustive(&data).unwrap();
            let b = select_exhaustive(&rev).unwrap();
            prop_assert!((a.merit - b.merit).abs() < 1e-12);
            if a.merit > 0.0 {
                prop_assert_eq!(selected_names(data.schema(), &a), selected_names(rev.schema(), &b));
            }
        }
    }
}

//! Decision trees: C4.5 (gain ratio + pessimistic pruning), REPTree
//! (info gain + reduced-error pruning) and RandomTree.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::rules::{Condition, Rule, Test};
use super::{argmax, C45Params, RandomTreeParams, RepTreeParams, TrainData};
use crate::dataset::Value;

const EPS: f64 = 1e-10;

pub(crate) fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

fn errors(counts: &[f64]) -> f64 {
    counts.iter().sum::<f64>() - counts[argmax(counts)]
}

fn is_pure(counts: &[f64]) -> bool {
    counts.iter().filter(|&&c| c > 0.0).count() <= 1
}

/// Upper confidence bound on the error count of a leaf holding `n`
/// instances with `e` training errors, minus `e`.
pub(crate) fn add_errs(n: f64, e: f64, cf: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (add_errs(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

/// Pessimistic error estimate of a leaf with class `counts`.
pub(crate) fn leaf_estimate(counts: &[f64], cf: f64) -> f64 {
    let n: f64 = counts.iter().sum();
    let e = errors(counts);
    e + add_errs(n, e, cf)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Split {
    /// Branch 0: `x <= value`; branch 1: `x > value`.
    Threshold { attr: usize, value: f64 },
    /// One branch per category.
    Category { attr: usize, arity: usize },
}

impl Split {
    pub fn branch(&self, x: &[Value]) -> usize {
        match (self, x) {
            (Split::Threshold { attr, value }, x) => match x[*attr] {
                Value::Num(v) if v <= *value => 0,
                _ => 1,
            },
            (Split::Category { attr, .. }, x) => x[*attr].as_cat().unwrap_or(0),
        }
    }

    pub fn condition(&self, branch: usize) -> Condition {
        match self {
            Split::Threshold { attr, value } => Condition {
                attr: *attr,
                test: if branch == 0 {
                    Test::Le(*value)
                } else {
                    Test::Gt(*value)
                },
            },
            Split::Category { attr, .. } => Condition {
                attr: *attr,
                test: Test::Eq(branch),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf {
        counts: Vec<f64>,
    },
    Internal {
        split: Split,
        counts: Vec<f64>,
        children: Vec<Node>,
    },
}

impl Node {
    pub fn counts(&self) -> &[f64] {
        match self {
            Node::Leaf { counts } | Node::Internal { counts, .. } => counts,
        }
    }

    fn counts_mut(&mut self) -> &mut Vec<f64> {
        match self {
            Node::Leaf { counts } | Node::Internal { counts, .. } => counts,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Internal { children, .. } => 1 + children.iter().map(Node::size).sum::<usize>(),
        }
    }

    fn collapse(&mut self) {
        let counts = self.counts().to_vec();
        *self = Node::Leaf { counts };
    }

    /// Leaf counts for `x`; an empty leaf takes its nearest non-empty ancestor's counts.
    pub fn counts_for(&self, x: &[Value]) -> Vec<f64> {
        let mut node = self;
        let mut inherited = self.counts();
        loop {
            if node.counts().iter().sum::<f64>() > 0.0 {
                inherited = node.counts();
            }
            match node {
                Node::Leaf { .. } => return inherited.to_vec(),
                Node::Internal {
                    split, children, ..
                } => node = &children[split.branch(x)],
            }
        }
    }

    /// One rule per leaf, depth-first, branch order.
    pub fn to_rules(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        self.collect_rules(&mut Vec::new(), self.counts(), &mut out);
        out
    }

    fn collect_rules(&self, path: &mut Vec<Condition>, inherited: &[f64], out: &mut Vec<Rule>) {
        let own = self.counts();
        let effective = if own.iter().sum::<f64>() > 0.0 { own } else { inherited };
        match self {
            Node::Leaf { .. } => out.push(Rule {
                conditions: path.clone(),
                counts: effective.to_vec(),
            }),
            Node::Internal {
                split, children, ..
            } => {
                for (b, child) in children.iter().enumerate() {
                    path.push(split.condition(b));
                    child.collect_rules(path, effective, out);
                    path.pop();
                }
            }
        }
    }

    fn training_errors(&self) -> f64 {
        match self {
            Node::Leaf { counts } => errors(counts),
            Node::Internal { children, .. } => children.iter().map(Node::training_errors).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    GainRatio,
    InfoGain,
}

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub split: Split,
    pub gain: f64,
    pub split_info: f64,
    pub parts: Vec<Vec<usize>>,
}

/// Best test on one attribute: the info-gain-maximizing midpoint
/// threshold for numeric attributes, a multiway split for categorical.
pub(crate) fn evaluate_attribute(
    data: &TrainData<'_>,
    idx: &[usize],
    attr: usize,
    min_leaf: usize,
) -> Option<Candidate> {
    let n = idx.len() as f64;
    let parent = data.counts(idx);
    let parent_h = entropy(&parent);
    match data.schema.attribute(attr).categories() {
        None => {
            let mut sorted: Vec<(f64, usize)> = idx
                .iter()
                .map(|&i| (data.rows[i][attr].as_num().unwrap_or(0.0), i))
                .collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0.0; data.n_classes()];
            let mut best: Option<(f64, usize)> = None;
            for k in 0..sorted.len().saturating_sub(1) {
                left[data.labels[sorted[k].1]] += 1.0;
                let n_left = k + 1;
                let n_right = sorted.len() - n_left;
                if sorted[k].0 == sorted[k + 1].0 || n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let gain = parent_h
                    - (n_left as f64 / n) * entropy(&left)
                    - (n_right as f64 / n) * entropy(&right);
                if best.is_none_or(|(g, _)| gain > g + 1e-12) {
                    best = Some((gain, k));
                }
            }
            let (gain, k) = best?;
            let (lo, hi) = (sorted[k].0, sorted[k + 1].0);
            let mut value = lo + (hi - lo) / 2.0;
            if value >= hi {
                value = lo;
            }
            let split = Split::Threshold { attr, value };
            let mut parts = vec![Vec::new(), Vec::new()];
            for &i in idx {
                parts[split.branch(&data.rows[i])].push(i);
            }
            let split_info = entropy(&[parts[0].len() as f64, parts[1].len() as f64]);
            Some(Candidate {
                split,
                gain,
                split_info,
                parts,
            })
        }
        Some(cats) => {
            let arity = cats.len();
            let split = Split::Category { attr, arity };
            let mut parts = vec![Vec::new(); arity];
            for &i in idx {
                parts[split.branch(&data.rows[i])].push(i);
            }
            let sizes: Vec<f64> = parts.iter().map(|p| p.len() as f64).collect();
            let nonempty = sizes.iter().filter(|&&s| s > 0.0).count();
            let big = parts.iter().filter(|p| p.len() >= min_leaf).count();
            if nonempty < 2 || big < 2 {
                return None;
            }
            let children_h: f64 = parts
                .iter()
                .filter(|p| !p.is_empty())
                .map(|p| (p.len() as f64 / n) * entropy(&data.counts(p)))
                .sum();
            Some(Candidate {
                split,
                gain: parent_h - children_h,
                split_info: entropy(&sizes),
                parts,
            })
        }
    }
}

/// Picks among evaluated candidates. With `allow_zero`, an impure node
/// with no informative test still splits on the best valid one.
pub(crate) fn choose(cands: Vec<Candidate>, criterion: Criterion, allow_zero: bool) -> Option<Candidate> {
    if cands.is_empty() {
        return None;
    }
    let informative = cands.iter().any(|c| c.gain > EPS);
    if !informative {
        return if allow_zero { cands.into_iter().next() } else { None };
    }
    match criterion {
        Criterion::InfoGain => cands
            .into_iter()
            .filter(|c| c.gain > EPS)
            .reduce(|best, c| if c.gain > best.gain + 1e-12 { c } else { best }),
        Criterion::GainRatio => {
            let avg = cands.iter().map(|c| c.gain).sum::<f64>() / cands.len() as f64;
            cands
                .into_iter()
                .filter(|c| c.gain > EPS && c.gain >= avg - 1e-3 && c.split_info > 0.0)
                .map(|c| (c.gain / c.split_info, c))
                .reduce(|best, c| if c.0 > best.0 + 1e-12 { c } else { best })
                .map(|(_, c)| c)
        }
    }
}

enum AttrPicker {
    All,
    Random { rng: Box<ChaCha8Rng>, k: usize },
}

struct Grower<'d, 'a> {
    data: &'d TrainData<'a>,
    min_leaf: usize,
    criterion: Criterion,
    allow_zero: bool,
    picker: AttrPicker,
}

impl Grower<'_, '_> {
    fn find_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let d = self.data.schema.len();
        match &mut self.picker {
            AttrPicker::All => {
                let cands = (0..d)
                    .filter_map(|a| evaluate_attribute(self.data, idx, a, self.min_leaf))
                    .collect();
                choose(cands, self.criterion, self.allow_zero)
            }
            AttrPicker::Random { rng, k } => {
                let mut order: Vec<usize> = (0..d).collect();
                order.shuffle(rng.as_mut());
                let mut seen = Vec::new();
                for (pos, &a) in order.iter().enumerate() {
                    if let Some(c) = evaluate_attribute(self.data, idx, a, self.min_leaf) {
                        seen.push(c);
                    }
                    // keep drawing past k until some attribute is informative
                    if pos + 1 >= *k && seen.iter().any(|c| c.gain > EPS) {
                        break;
                    }
                }
                choose(seen, self.criterion, self.allow_zero)
            }
        }
    }

    fn grow(&mut self, idx: &[usize]) -> Node {
        let counts = self.data.counts(idx);
        if idx.len() < 2 * self.min_leaf || idx.len() < 2 || is_pure(&counts) {
            return Node::Leaf { counts };
        }
        let Some(cand) = self.find_split(idx) else {
            return Node::Leaf { counts };
        };
        let children = cand.parts.iter().map(|p| self.grow(p)).collect();
        Node::Internal {
            split: cand.split,
            counts,
            children,
        }
    }
}

/// Subtree collapsing plus pessimistic subtree replacement; returns the
/// estimated errors of the (possibly pruned) node.
fn prune_pessimistic(node: &mut Node, cf: f64) -> f64 {
    if let Node::Leaf { counts } = node {
        return leaf_estimate(counts, cf);
    }
    if node.training_errors() >= errors(node.counts()) - 1e-3 {
        node.collapse();
        return leaf_estimate(node.counts(), cf);
    }
    let Node::Internal { children, counts, .. } = node else {
        unreachable!()
    };
    let tree_est: f64 = children.iter_mut().map(|c| prune_pessimistic(c, cf)).sum();
    let leaf_est = leaf_estimate(counts, cf);
    if leaf_est <= tree_est + 0.1 {
        node.collapse();
        leaf_est
    } else {
        tree_est
    }
}

pub(crate) fn build_c45(data: &TrainData<'_>, p: &C45Params) -> Node {
    let idx: Vec<usize> = (0..data.rows.len()).collect();
    let mut g = Grower {
        data,
        min_leaf: p.min_leaf,
        criterion: Criterion::GainRatio,
        allow_zero: !p.pruned,
        picker: AttrPicker::All,
    };
    let mut root = g.grow(&idx);
    if p.pruned {
        prune_pessimistic(&mut root, p.confidence);
    }
    root
}

/// Seeded stratified partition of `idx` into `folds` groups: shuffle
/// within each class, then deal round-robin.
pub(crate) fn stratified_groups(
    idx: &[usize],
    labels: &[usize],
    n_classes: usize,
    folds: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); folds];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = idx.iter().copied().filter(|&i| labels[i] == class).collect();
        members.shuffle(rng);
        for i in members {
            groups[next].push(i);
            next = (next + 1) % folds;
        }
    }
    groups
}

/// Reduced-error pruning against held-out instances; returns their error count.
fn prune_reduced_error(node: &mut Node, data: &TrainData<'_>, holdout: &[usize]) -> f64 {
    let predicted = argmax(node.counts());
    let leaf_errors = holdout
        .iter()
        .filter(|&&i| data.labels[i] != predicted)
        .count() as f64;
    let Node::Internal {
        split, children, ..
    } = node
    else {
        return leaf_errors;
    };
    let mut parts = vec![Vec::new(); children.len()];
    for &i in holdout {
        parts[split.branch(&data.rows[i])].push(i);
    }
    let tree_errors: f64 = children
        .iter_mut()
        .zip(&parts)
        .map(|(c, p)| prune_reduced_error(c, data, p))
        .sum();
    if leaf_errors <= tree_errors {
        node.collapse();
        leaf_errors
    } else {
        tree_errors
    }
}

fn backfit(node: &mut Node, x: &[Value], class: usize) {
    node.counts_mut()[class] += 1.0;
    if let Node::Internal {
        split, children, ..
    } = node
    {
        let b = split.branch(x);
        backfit(&mut children[b], x, class);
    }
}

pub(crate) fn build_rep(data: &TrainData<'_>, p: &RepTreeParams) -> Node {
    let all: Vec<usize> = (0..data.rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (grow_idx, prune_idx) = if all.len() >= p.folds {
        let mut groups = stratified_groups(&all, data.labels, data.n_classes(), p.folds, &mut rng);
        let prune = std::mem::take(&mut groups[0]);
        let mut grow: Vec<usize> = groups.concat();
        grow.sort_unstable();
        let mut prune = prune;
        prune.sort_unstable();
        (grow, prune)
    } else {
        (all, Vec::new())
    };
    let mut g = Grower {
        data,
        min_leaf: p.min_leaf,
        criterion: Criterion::InfoGain,
        allow_zero: false,
        picker: AttrPicker::All,
    };
    let mut root = g.grow(&grow_idx);
    if !prune_idx.is_empty() {
        prune_reduced_error(&mut root, data, &prune_idx);
        for &i in &prune_idx {
            backfit(&mut root, &data.rows[i], data.labels[i]);
        }
    }
    root
}

pub(crate) fn random_k(d: usize) -> usize {
    if d == 0 {
        return 1;
    }
    (d as f64).log2().floor() as usize + 1
}

pub(crate) fn build_random(data: &TrainData<'_>, p: &RandomTreeParams) -> Node {
    let idx: Vec<usize> = (0..data.rows.len()).collect();
    let k = p.k.unwrap_or_else(|| random_k(data.schema.len()));
    let mut g = Grower {
        data,
        min_leaf: p.min_leaf,
        criterion: Criterion::InfoGain,
        allow_zero: true,
        picker: AttrPicker::Random {
            rng: Box::new(ChaCha8Rng::seed_from_u64(p.seed)),
            k,
        },
    };
    g.grow(&idx)
}

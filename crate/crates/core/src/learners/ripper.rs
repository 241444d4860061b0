//! RIPPER rule induction (JRip-like).
//!
//! Classes are learned from rarest to most frequent; the most frequent
//! class becomes the default rule. Each class gets an IREP* ruleset
//! (grow on 2/3, prune on 1/3, stop on description length or error) that
//! is then optimized by replacement and revision.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::rules::{Condition, Rule, Test};
use super::tree::stratified_groups;
use super::{RipperParams, TrainData};

const MIN_COVER: usize = 2;
const THEORY_WEIGHT: f64 = 0.5;

type Conds = Vec<Condition>;

fn covers(conds: &[Condition], data: &TrainData<'_>, i: usize) -> bool {
    conds.iter().all(|c| c.holds(&data.rows[i]))
}

/// Bits to encode which `k` of `t` elements are selected at rate `p`.
fn subset_dl(t: f64, k: f64, p: f64) -> f64 {
    let mut bits = 0.0;
    if k > 0.0 && p > 0.0 {
        bits -= k * p.log2();
    }
    if t - k > 0.0 && p < 1.0 {
        bits -= (t - k) * (1.0 - p).log2();
    }
    bits
}

fn theory_dl(k: usize, total_conds: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    let mut bits = k.log2();
    if k > 1.0 {
        bits += 2.0 * bits.log2();
    }
    bits += subset_dl(total_conds, k, k / total_conds);
    THEORY_WEIGHT * bits
}

fn data_dl(exp_fp: f64, cover: f64, uncover: f64, fp: f64, fn_: f64) -> f64 {
    let total = (cover + uncover + 1.0).log2();
    let (cover_bits, uncover_bits) = if cover > uncover {
        let exp_err = exp_fp * (fp + fn_);
        let c = subset_dl(cover, fp, exp_err / cover);
        let u = if uncover > 0.0 {
            subset_dl(uncover, fn_, fn_ / uncover)
        } else {
            0.0
        };
        (c, u)
    } else {
        let exp_err = (1.0 - exp_fp) * (fp + fn_);
        let c = if cover > 0.0 {
            subset_dl(cover, fp, fp / cover)
        } else {
            0.0
        };
        let u = if uncover > 0.0 {
            subset_dl(uncover, fn_, exp_err / uncover)
        } else {
            0.0
        };
        (c, u)
    };
    total + cover_bits + uncover_bits
}

/// Number of distinct conditions the grower could form.
fn total_conditions(data: &TrainData<'_>) -> f64 {
    let mut total = 0.0;
    for a in 0..data.schema.len() {
        total += match data.schema.attribute(a).categories() {
            Some(cats) => cats.len() as f64,
            None => {
                let mut v: Vec<f64> = data.rows.iter().filter_map(|r| r[a].as_num()).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                2.0 * v.len() as f64
            }
        };
    }
    total.max(1.0)
}

struct ClassLearner<'d, 'a> {
    data: &'d TrainData<'a>,
    class: usize,
    /// Instances still uncovered when this class started.
    idx: Vec<usize>,
    total_conds: f64,
    exp_fp: f64,
    folds: usize,
}

impl ClassLearner<'_, '_> {
    fn is_pos(&self, i: usize) -> bool {
        self.data.labels[i] == self.class
    }

    fn ruleset_dl(&self, rules: &[Conds]) -> f64 {
        let theory: f64 = rules.iter().map(|r| theory_dl(r.len(), self.total_conds)).sum();
        let (mut cover, mut uncover, mut fp, mut fn_) = (0.0, 0.0, 0.0, 0.0);
        for &i in &self.idx {
            let hit = rules.iter().any(|r| covers(r, self.data, i));
            match (hit, self.is_pos(i)) {
                (true, pos) => {
                    cover += 1.0;
                    if !pos {
                        fp += 1.0;
                    }
                }
                (false, pos) => {
                    uncover += 1.0;
                    if pos {
                        fn_ += 1.0;
                    }
                }
            }
        }
        theory + data_dl(self.exp_fp, cover, uncover, fp, fn_)
    }

    fn split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
        if idx.len() < self.folds {
            return (idx.to_vec(), Vec::new());
        }
        let mut groups = stratified_groups(idx, self.data.labels, self.data.n_classes(), self.folds, rng);
        let mut prune = std::mem::take(&mut groups[0]);
        let mut grow = groups.concat();
        grow.sort_unstable();
        prune.sort_unstable();
        (grow, prune)
    }

    fn pos_neg(&self, conds: &[Condition], idx: &[usize]) -> (f64, f64) {
        let (mut p, mut n) = (0.0, 0.0);
        for &i in idx {
            if covers(conds, self.data, i) {
                if self.is_pos(i) {
                    p += 1.0;
                } else {
                    n += 1.0;
                }
            }
        }
        (p, n)
    }

    /// Best FOIL-gain condition over the instances `covered`.
    fn best_condition(&self, covered: &[usize], used_cats: &[usize]) -> Option<Condition> {
        let p0 = covered.iter().filter(|&&i| self.is_pos(i)).count() as f64;
        let t0 = covered.len() as f64;
        let base = ((p0 + 1.0) / (t0 + 1.0)).log2();
        let gain = |accu: f64, cover: f64| accu * (((accu + 1.0) / (cover + 1.0)).log2() - base);
        let mut best: Option<(f64, Condition)> = None;
        let mut offer = |g: f64, c: Condition| {
            if g > 0.0 && best.as_ref().is_none_or(|(b, _)| g > *b + 1e-12) {
                best = Some((g, c));
            }
        };
        for a in 0..self.data.schema.len() {
            match self.data.schema.attribute(a).categories() {
                Some(cats) => {
                    if used_cats.contains(&a) {
                        continue;
                    }
                    for v in 0..cats.len() {
                        let (mut accu, mut cover) = (0.0, 0.0);
                        for &i in covered {
                            if self.data.rows[i][a].as_cat() == Some(v) {
                                cover += 1.0;
                                if self.is_pos(i) {
                                    accu += 1.0;
                                }
                            }
                        }
                        if cover >= MIN_COVER as f64 {
                            offer(gain(accu, cover), Condition { attr: a, test: Test::Eq(v) });
                        }
                    }
                }
                None => {
                    let mut sorted: Vec<(f64, bool)> = covered
                        .iter()
                        .filter_map(|&i| self.data.rows[i][a].as_num().map(|x| (x, self.is_pos(i))))
                        .collect();
                    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
                    let total_pos = sorted.iter().filter(|s| s.1).count() as f64;
                    let n = sorted.len();
                    let mut left_pos = 0.0;
                    for k in 0..n.saturating_sub(1) {
                        if sorted[k].1 {
                            left_pos += 1.0;
                        }
                        if sorted[k].0 == sorted[k + 1].0 {
                            continue;
                        }
                        let (lo, hi) = (sorted[k].0, sorted[k + 1].0);
                        let mut mid = lo + (hi - lo) / 2.0;
                        if mid >= hi {
                            mid = lo;
                        }
                        let left = (k + 1) as f64;
                        let right = (n - k - 1) as f64;
                        if left >= MIN_COVER as f64 {
                            offer(gain(left_pos, left), Condition { attr: a, test: Test::Le(mid) });
                        }
                        if right >= MIN_COVER as f64 {
                            offer(
                                gain(total_pos - left_pos, right),
                                Condition { attr: a, test: Test::Gt(mid) },
                            );
                        }
                    }
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// Adds conditions to `start` until no negatives in `grow` are covered.
    fn grow(&self, start: Conds, grow: &[usize]) -> Conds {
        let mut conds = start;
        loop {
            let covered: Vec<usize> = grow.iter().copied().filter(|&i| covers(&conds, self.data, i)).collect();
            if covered.iter().all(|&i| self.is_pos(i)) {
                break;
            }
            let used: Vec<usize> = conds
                .iter()
                .filter(|c| matches!(c.test, Test::Eq(_)))
                .map(|c| c.attr)
                .collect();
            match self.best_condition(&covered, &used) {
                Some(c) => conds.push(c),
                None => break,
            }
        }
        conds
    }

    /// Keeps the shortest prefix of at least `keep` conditions maximizing
    /// `(p - n) / (p + n)` on `prune`.
    fn prune(&self, conds: Conds, prune: &[usize], keep: usize) -> Conds {
        if prune.is_empty() || conds.len() <= keep.max(1) {
            return conds;
        }
        let mut best: Option<(f64, usize)> = None;
        for len in keep.max(1)..=conds.len() {
            let (p, n) = self.pos_neg(&conds[..len], prune);
            if p + n == 0.0 {
                continue;
            }
            let worth = (p - n) / (p + n);
            if best.is_none_or(|(b, _)| worth > b) {
                best = Some((worth, len));
            }
        }
        match best {
            Some((_, len)) => conds[..len].to_vec(),
            None => conds,
        }
    }

    /// IREP*: appends rules covering the positives in `idx` until a stop condition.
    fn cover(&self, rules: &mut Vec<Conds>, rng: &mut ChaCha8Rng, surplus: f64) {
        let mut min_dl = self.ruleset_dl(rules);
        loop {
            let uncovered: Vec<usize> = self
                .idx
                .iter()
                .copied()
                .filter(|&i| !rules.iter().any(|r| covers(r, self.data, i)))
                .collect();
            if !uncovered.iter().any(|&i| self.is_pos(i)) {
                break;
            }
            let (grow, prune) = self.split(&uncovered, rng);
            let rule = self.prune(self.grow(Vec::new(), &grow), &prune, 1);
            if rule.is_empty() {
                break;
            }
            let (p, n) = self.pos_neg(&rule, &uncovered);
            if p == 0.0 || n / (p + n) >= 0.5 {
                break;
            }
            rules.push(rule);
            let dl = self.ruleset_dl(rules);
            if !dl.is_finite() || dl > min_dl + surplus {
                rules.pop();
                break;
            }
            min_dl = min_dl.min(dl);
        }
        self.reduce_dl(rules);
    }

    /// Deletes rules, last first, whenever that lowers the description length.
    fn reduce_dl(&self, rules: &mut Vec<Conds>) {
        let mut i = rules.len();
        while i > 0 {
            i -= 1;
            let with = self.ruleset_dl(rules);
            let removed = rules.remove(i);
            if self.ruleset_dl(rules) < with {
                continue;
            }
            rules.insert(i, removed);
        }
    }

    fn optimize(&self, rules: &mut [Conds], rng: &mut ChaCha8Rng) {
        for i in 0..rules.len() {
            let others_cover = |j: usize| rules.iter().enumerate().any(|(k, r)| k != i && covers(r, self.data, j));
            let relevant: Vec<usize> = self.idx.iter().copied().filter(|&j| !others_cover(j)).collect();
            let (grow, prune) = self.split(&relevant, rng);
            let original = rules[i].clone();
            let replacement = self.prune(self.grow(Vec::new(), &grow), &prune, 1);
            let revision = self.prune(self.grow(original.clone(), &grow), &prune, original.len());

            let mut best = (self.ruleset_dl(rules), original);
            for variant in [replacement, revision] {
                if variant.is_empty() || variant == best.1 {
                    continue;
                }
                let saved = std::mem::replace(&mut rules[i], variant.clone());
                let dl = self.ruleset_dl(rules);
                rules[i] = saved;
                if dl < best.0 {
                    best = (dl, variant);
                }
            }
            rules[i] = best.1;
        }
    }
}

pub(crate) fn build(data: &TrainData<'_>, params: &RipperParams) -> Vec<Rule> {
    let n = data.rows.len();
    let all: Vec<usize> = (0..n).collect();
    let overall = data.counts(&all);
    let mut order: Vec<usize> = (0..data.n_classes()).collect();
    order.sort_by(|&a, &b| overall[a].total_cmp(&overall[b]));
    let total_conds = total_conditions(data);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut remaining = all;
    let mut learned: Vec<Conds> = Vec::new();
    for &class in &order[..order.len() - 1] {
        let class_count = remaining.iter().filter(|&&i| data.labels[i] == class).count();
        if class_count == 0 || remaining.is_empty() {
            continue;
        }
        let learner = ClassLearner {
            data,
            class,
            exp_fp: class_count as f64 / remaining.len() as f64,
            idx: remaining.clone(),
            total_conds,
            folds: params.folds,
        };
        let mut rules = Vec::new();
        learner.cover(&mut rules, &mut rng, params.max_dl_surplus);
        for _ in 0..params.optimizations {
            learner.optimize(&mut rules, &mut rng);
            learner.cover(&mut rules, &mut rng, params.max_dl_surplus);
        }
        remaining.retain(|&i| !rules.iter().any(|r| covers(r, data, i)));
        learned.extend(rules);
    }

    let mut out = Vec::with_capacity(learned.len() + 1);
    let mut left: Vec<usize> = (0..n).collect();
    for conds in learned {
        let (hit, miss): (Vec<usize>, Vec<usize>) = left.iter().partition(|&&i| covers(&conds, data, i));
        out.push(Rule {
            counts: data.counts(&hit),
            conditions: conds,
        });
        left = miss;
    }
    let default_counts = if left.is_empty() { overall } else { data.counts(&left) };
    out.push(Rule {
        conditions: Vec::new(),
        counts: default_counts,
    });
    out
}

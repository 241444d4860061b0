//! PART: one rule per partial C4.5 tree.
//!
//! Each round grows a tree that only expands subsets while they keep
//! turning into leaves (lowest-entropy subsets first), prunes it
//! pessimistically, and turns its largest expanded leaf into a rule.
//! Covered instances are removed and the next round starts.

use super::rules::{Condition, Rule};
use super::tree::{choose, entropy, evaluate_attribute, leaf_estimate, Criterion, Split};
use super::{PartParams, TrainData};

enum PartialNode {
    Leaf { idx: Vec<usize>, counts: Vec<f64> },
    Unexpanded,
    Internal { split: Split, children: Vec<PartialNode> },
}

struct Builder<'d, 'a> {
    data: &'d TrainData<'a>,
    params: &'d PartParams,
}

impl Builder<'_, '_> {
    fn expand(&self, idx: Vec<usize>) -> PartialNode {
        let counts = self.data.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || idx.len() < 2 * self.params.min_leaf {
            return PartialNode::Leaf { idx, counts };
        }
        let cands = (0..self.data.schema.len())
            .filter_map(|a| evaluate_attribute(self.data, &idx, a, self.params.min_leaf))
            .collect();
        let Some(cand) = choose(cands, Criterion::GainRatio, false) else {
            return PartialNode::Leaf { idx, counts };
        };

        let mut order: Vec<usize> = (0..cand.parts.len()).collect();
        let ent: Vec<f64> = cand.parts.iter().map(|p| entropy(&self.data.counts(p))).collect();
        order.sort_by(|&a, &b| ent[a].total_cmp(&ent[b]));

        let mut children: Vec<PartialNode> = cand.parts.iter().map(|_| PartialNode::Unexpanded).collect();
        let mut parts: Vec<Option<Vec<usize>>> = cand.parts.into_iter().map(Some).collect();
        let mut all_leaves = true;
        for b in order {
            let child = self.expand(parts[b].take().unwrap_or_default());
            let is_leaf = matches!(child, PartialNode::Leaf { .. });
            children[b] = child;
            if !is_leaf {
                all_leaves = false;
                break;
            }
        }

        if all_leaves {
            let subtree: f64 = children
                .iter()
                .map(|c| match c {
                    PartialNode::Leaf { counts, .. } => leaf_estimate(counts, self.params.confidence),
                    _ => 0.0,
                })
                .sum();
            if leaf_estimate(&counts, self.params.confidence) <= subtree + 0.1 {
                return PartialNode::Leaf { idx, counts };
            }
        }
        PartialNode::Internal {
            split: cand.split,
            children,
        }
    }
}

/// Leaf size, path, instance indices and weights.
type LeafPick<'n> = (usize, Vec<Condition>, &'n [usize], &'n [f64]);

/// Largest expanded leaf (first in depth-first order on ties) and its path.
fn best_leaf<'n>(
    node: &'n PartialNode,
    path: &mut Vec<Condition>,
    best: &mut Option<LeafPick<'n>>,
) {
    match node {
        PartialNode::Leaf { idx, counts } => {
            if best.as_ref().is_none_or(|(n, ..)| idx.len() > *n) {
                *best = Some((idx.len(), path.clone(), idx, counts));
            }
        }
        PartialNode::Unexpanded => {}
        PartialNode::Internal { split, children } => {
            for (b, c) in children.iter().enumerate() {
                path.push(split.condition(b));
                best_leaf(c, path, best);
                path.pop();
            }
        }
    }
}

pub(crate) fn build(data: &TrainData<'_>, params: &PartParams) -> Vec<Rule> {
    let builder = Builder { data, params };
    let all: Vec<usize> = (0..data.rows.len()).collect();
    let overall = data.counts(&all);
    let mut remaining = all;
    let mut rules = Vec::new();
    while !remaining.is_empty() {
        let tree = builder.expand(remaining.clone());
        if let PartialNode::Leaf { counts, .. } = &tree {
            rules.push(Rule {
                conditions: Vec::new(),
                counts: counts.clone(),
            });
            return rules;
        }
        let mut best = None;
        best_leaf(&tree, &mut Vec::new(), &mut best);
        let Some((n, conditions, covered, counts)) = best else {
            break;
        };
        if n == 0 {
            break;
        }
        let covered: std::collections::HashSet<usize> = covered.iter().copied().collect();
        rules.push(Rule {
            conditions,
            counts: counts.to_vec(),
        });
        remaining.retain(|i| !covered.contains(i));
    }
    let leftovers = data.counts(&remaining);
    let default_counts = if leftovers.iter().sum::<f64>() > 0.0 {
        leftovers
    } else {
        overall
    };
    rules.push(Rule {
        conditions: Vec::new(),
        counts: default_counts,
    });
    rules
}

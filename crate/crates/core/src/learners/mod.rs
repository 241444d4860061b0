//! Six white-box classifiers and the Vote meta-classifier.
//!
//! Every model predicts a class distribution, and every model exports
//! canonical `If … Then …` rule text that [`interpret_rules`] evaluates
//! back to the same label.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{check_row, AttributeSchema, Dataset, Value};
use crate::error::{Error, Result};

mod nnge;
mod part;
mod ripper;
mod rules;
mod tree;
mod vote;

pub use rules::{interpret_rules, Condition, Rule, RuleText, Test};
pub use vote::{VoteMember, VoteModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// C4.5 decision tree (J48-like).
    C45Tree,
    /// Reduced-error-pruning tree.
    RepTree,
    /// Unpruned tree over random attribute subsets.
    RandomTree,
    /// RIPPER rule induction (JRip-like).
    Ripper,
    /// Rules from partial C4.5 trees (PART-like).
    PartRules,
    /// Non-nested generalized exemplars.
    Nnge,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::C45Tree,
        Algorithm::RepTree,
        Algorithm::RandomTree,
        Algorithm::Ripper,
        Algorithm::PartRules,
        Algorithm::Nnge,
    ];

    /// Identifier used in configs and cell names.
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::C45Tree => "c45_tree",
            Algorithm::RepTree => "rep_tree",
            Algorithm::RandomTree => "random_tree",
            Algorithm::Ripper => "ripper",
            Algorithm::PartRules => "part_rules",
            Algorithm::Nnge => "nnge",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::C45Tree => "C45Tree",
            Algorithm::RepTree => "REPTree",
            Algorithm::RandomTree => "RandomTree",
            Algorithm::Ripper => "Ripper",
            Algorithm::PartRules => "PartRules",
            Algorithm::Nnge => "NNGE",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "c45tree" | "c45" | "j48" => Algorithm::C45Tree,
            "reptree" => Algorithm::RepTree,
            "randomtree" => Algorithm::RandomTree,
            "ripper" | "jrip" => Algorithm::Ripper,
            "partrules" | "part" => Algorithm::PartRules,
            "nnge" => Algorithm::Nnge,
            _ => return Err(Error::Config(format!("unknown algorithm `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C45Params {
    pub pruned: bool,
    /// Confidence factor of the pessimistic error estimate.
    pub confidence: f64,
    pub min_leaf: usize,
}

impl Default for C45Params {
    fn default() -> Self {
        C45Params {
            pruned: true,
            confidence: 0.25,
            min_leaf: 2,
        }
    }
}

impl C45Params {
    /// Fully grown tree: no pruning, single-instance leaves, and impure
    /// nodes keep splitting even when no test has positive gain.
    pub fn unpruned() -> Self {
        C45Params {
            pruned: false,
            confidence: 0.25,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepTreeParams {
    pub min_leaf: usize,
    /// Number of stratified folds; one of them is held out for pruning.
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomTreeParams {
    /// Candidate attributes per node; `None` means `floor(log2(d)) + 1`.
    pub k: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipperParams {
    /// Folds for the grow/prune split; one fold prunes, the rest grow.
    pub folds: usize,
    pub optimizations: usize,
    /// Allowed description-length surplus over the best ruleset, in bits.
    pub max_dl_surplus: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartParams {
    pub confidence: f64,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct NngeParams {}

/// Algorithm plus hyperparameters; seeds live in the stochastic variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LearnerSpec {
    C45Tree(C45Params),
    RepTree(RepTreeParams),
    RandomTree(RandomTreeParams),
    Ripper(RipperParams),
    PartRules(PartParams),
    Nnge(NngeParams),
}

impl LearnerSpec {
    /// Default hyperparameters for `algorithm`.
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        match algorithm {
            Algorithm::C45Tree => LearnerSpec::C45Tree(C45Params::default()),
            Algorithm::RepTree => LearnerSpec::RepTree(RepTreeParams {
                min_leaf: 2,
                folds: 3,
                seed,
            }),
            Algorithm::RandomTree => LearnerSpec::RandomTree(RandomTreeParams {
                k: None,
                min_leaf: 1,
                seed,
            }),
            Algorithm::Ripper => LearnerSpec::Ripper(RipperParams {
                folds: 3,
                optimizations: 2,
                max_dl_surplus: 64.0,
                seed,
            }),
            Algorithm::PartRules => LearnerSpec::PartRules(PartParams {
                confidence: 0.25,
                min_leaf: 2,
            }),
            Algorithm::Nnge => LearnerSpec::Nnge(NngeParams::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            LearnerSpec::C45Tree(_) => Algorithm::C45Tree,
            LearnerSpec::RepTree(_) => Algorithm::RepTree,
            LearnerSpec::RandomTree(_) => Algorithm::RandomTree,
            LearnerSpec::Ripper(_) => Algorithm::Ripper,
            LearnerSpec::PartRules(_) => Algorithm::PartRules,
            LearnerSpec::Nnge(_) => Algorithm::Nnge,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match self {
            LearnerSpec::C45Tree(p) if !(p.confidence > 0.0 && p.confidence <= 0.5) => {
                bad("C4.5 confidence must lie in (0, 0.5]")
            }
            LearnerSpec::C45Tree(p) if p.min_leaf == 0 => bad("min_leaf must be >= 1"),
            LearnerSpec::RepTree(p) if p.folds < 2 || p.min_leaf == 0 => {
                bad("REPTree needs folds >= 2 and min_leaf >= 1")
            }
            LearnerSpec::RandomTree(p) if p.k == Some(0) || p.min_leaf == 0 => {
                bad("RandomTree needs k >= 1 and min_leaf >= 1")
            }
            LearnerSpec::Ripper(p) if p.folds < 2 => bad("Ripper needs folds >= 2"),
            LearnerSpec::PartRules(p) if !(p.confidence > 0.0 && p.confidence <= 0.5) => {
                bad("PART confidence must lie in (0, 0.5]")
            }
            LearnerSpec::PartRules(p) if p.min_leaf == 0 => bad("min_leaf must be >= 1"),
            _ => Ok(()),
        }
    }
}

/// Probability per class label, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    /// Relative frequencies of `counts`; all-zero counts give a uniform distribution.
    pub fn from_counts(counts: &[f64]) -> Self {
        let total: f64 = counts.iter().sum();
        if total > 0.0 {
            ClassDistribution(counts.iter().map(|c| c / total).collect())
        } else {
            let n = counts.len().max(1) as f64;
            ClassDistribution(vec![1.0 / n; counts.len()])
        }
    }

    pub fn one_hot(class: usize, n_classes: usize) -> Self {
        let mut p = vec![0.0; n_classes];
        p[class] = 1.0;
        ClassDistribution(p)
    }

    /// Component-wise arithmetic mean.
    pub fn mean(parts: &[ClassDistribution]) -> Self {
        let n = parts[0].0.len();
        let mut acc = vec![0.0; n];
        for p in parts {
            for (a, v) in acc.iter_mut().zip(&p.0) {
                *a += v;
            }
        }
        let b = parts.len() as f64;
        ClassDistribution(acc.into_iter().map(|a| a / b).collect())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn probability(&self, class: usize) -> f64 {
        self.0[class]
    }

    /// Index of the largest probability; exact ties go to the earlier class.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    (0..values.len()).fold(0, |best, i| if values[i] > values[best] { i } else { best })
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Structure {
    Tree(tree::Node),
    Rules(Vec<Rule>),
    Exemplars(nnge::Exemplars),
}

/// A trained single classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: LearnerSpec,
    schema: AttributeSchema,
    structure: Structure,
}

/// Anything that maps an instance to a class distribution and can show
/// its logic as rule text.
pub trait Classifier {
    fn schema(&self) -> &AttributeSchema;

    fn predict_distribution(&self, instance: &[Value]) -> Result<ClassDistribution>;

    /// Argmax of the distribution, ties toward the earlier class.
    fn predict_label(&self, instance: &[Value]) -> Result<usize> {
        Ok(self.predict_distribution(instance)?.argmax())
    }

    fn export_rules(&self) -> RuleText;
}

impl Model {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm()
    }

    /// Number of tree nodes, for tree models.
    pub fn tree_size(&self) -> Option<usize> {
        match &self.structure {
            Structure::Tree(n) => Some(n.size()),
            _ => None,
        }
    }

    /// The model's logic as an ordered rule list (trees flattened root-to-leaf).
    pub fn rules(&self) -> Vec<Rule> {
        match &self.structure {
            Structure::Tree(n) => n.to_rules(),
            Structure::Rules(r) => r.clone(),
            Structure::Exemplars(e) => e.to_rules(),
        }
    }

    pub(crate) fn section_text(&self) -> String {
        let class_labels = self.schema.class_labels();
        let mut out = String::new();
        match &self.structure {
            Structure::Exemplars(e) => {
                out.push_str(&e.render(&self.schema));
            }
            _ => {
                let rules = self.rules();
                for r in &rules {
                    out.push_str(&r.render(&self.schema, class_labels, true));
                    out.push('\n');
                }
                if let Some(size) = self.tree_size() {
                    out.push_str(&format!("Size of the tree: {size}\n"));
                }
                out.push_str(&format!("Number of Rules: {}\n", rules.len()));
            }
        }
        out
    }
}

impl Classifier for Model {
    fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn predict_distribution(&self, instance: &[Value]) -> Result<ClassDistribution> {
        check_row(&self.schema, instance)?;
        Ok(match &self.structure {
            Structure::Tree(n) => ClassDistribution::from_counts(&n.counts_for(instance)),
            Structure::Rules(rules) => {
                let rule = rules
                    .iter()
                    .find(|r| r.covers(instance))
                    .expect("rule lists end with a catch-all");
                ClassDistribution::from_counts(&rule.counts)
            }
            Structure::Exemplars(e) => {
                ClassDistribution::one_hot(e.nearest(instance).class, self.schema.n_classes())
            }
        })
    }

    fn export_rules(&self) -> RuleText {
        RuleText(self.section_text())
    }
}

/// Training view shared by the learners.
pub(crate) struct TrainData<'a> {
    pub rows: &'a [Vec<Value>],
    pub labels: &'a [usize],
    pub schema: &'a AttributeSchema,
}

impl<'a> TrainData<'a> {
    pub fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }

    pub fn counts(&self, idx: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_classes()];
        for &i in idx {
            c[self.labels[i]] += 1.0;
        }
        c
    }
}

/// Trains `spec` on a labeled dataset. Deterministic in `(spec, dataset)`.
pub fn train(spec: &LearnerSpec, dataset: &Dataset) -> Result<Model> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = dataset.require_labels()?;
    let data = TrainData {
        rows: dataset.rows(),
        labels,
        schema: dataset.schema(),
    };
    let structure = match spec {
        LearnerSpec::C45Tree(p) => Structure::Tree(tree::build_c45(&data, p)),
        LearnerSpec::RepTree(p) => Structure::Tree(tree::build_rep(&data, p)),
        LearnerSpec::RandomTree(p) => Structure::Tree(tree::build_random(&data, p)),
        LearnerSpec::Ripper(p) => Structure::Rules(ripper::build(&data, p)),
        LearnerSpec::PartRules(p) => Structure::Rules(part::build(&data, p)),
        LearnerSpec::Nnge(_) => Structure::Exemplars(nnge::build(&data)),
    };
    Ok(Model {
        spec: *spec,
        schema: dataset.schema().clone(),
        structure,
    })
}

pub fn predict_distribution(model: &impl Classifier, instance: &[Value]) -> Result<ClassDistribution> {
    model.predict_distribution(instance)
}

/// Predicted class label name.
pub fn predict_label(model: &impl Classifier, instance: &[Value]) -> Result<String> {
    let c = model.predict_label(instance)?;
    Ok(model.schema().class_labels()[c].clone())
}

pub fn export_rules(model: &impl Classifier) -> RuleText {
    model.export_rules()
}

#[cfg(test)]
mod tests;

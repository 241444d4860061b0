//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! modes = merge_all, select_merged, ensemble_per_source
//! representations = numerical, discretized
//! algorithms = c45_tree, rep_tree, random_tree, ripper, part_rules, nnge
//! k = 10
//! cv_seed = 1
//! output_dir = out
//! ```
//!
//! Unset seeds take `FUSE_SEED` when it is set, else 1.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synth::{GenParams, PlantedSignal};
use crate::dataset::{Attribute, AttributeSchema, Source};
use crate::error::{Error, Result};
use crate::evaluation::{Mode, Representation};
use crate::learners::Algorithm;
use crate::preprocess::ClassCutoffs;

pub const SEED_ENV: &str = "FUSE_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

impl OutputFormat {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(OutputFormat::Text),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }

    fn id(self) -> &'static str {
        match self {
            OutputFormat::Text => "text",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub modes: Vec<Mode>,
    pub representations: Vec<Representation>,
    pub algorithms: Vec<Algorithm>,
    pub k: usize,
    pub cv_seed: Option<u64>,
    pub generator_seed: Option<u64>,
    pub learner_seed: Option<u64>,
    pub anonymize_seed: Option<u64>,
    pub n_bins: usize,
    /// Mark cut-offs, ascending.
    pub cutoffs: Vec<f64>,
    /// One label per mark interval, lowest interval first.
    pub cutoff_labels: Vec<String>,
    /// Directory with `logs.csv`, `emotion.csv`, `gaze.csv`, `scores.csv`;
    /// `None` generates a synthetic cohort.
    pub input_dir: Option<PathBuf>,
    pub generator: GenParams,
    pub output_dir: PathBuf,
    /// Fit normalization, binning and selection on training folds only.
    pub fit_in_fold: bool,
    pub allow_missing: bool,
    /// Also evaluate one Vote over every requested algorithm per source.
    pub vote_across_algorithms: bool,
    pub formats: Vec<OutputFormat>,
    /// Attributes added to the default schema.
    pub extra_attributes: Vec<Attribute>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            modes: Mode::ALL.to_vec(),
            representations: Representation::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            k: 10,
            cv_seed: None,
            generator_seed: None,
            learner_seed: None,
            anonymize_seed: None,
            n_bins: 3,
            cutoffs: vec![5.0],
            cutoff_labels: vec!["FAIL".into(), "PASS".into()],
            input_dir: None,
            generator: GenParams::default(),
            output_dir: PathBuf::from("fuse-out"),
            fit_in_fold: false,
            allow_missing: false,
            vote_across_algorithms: false,
            formats: vec![OutputFormat::Text, OutputFormat::Csv, OutputFormat::Json],
            extra_attributes: Vec::new(),
        }
    }
}

fn list(value: &str) -> Vec<&str> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_list<T>(key: &str, value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items = list(value)
        .into_iter()
        .map(f)
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("`{key}` needs at least one value")));
    }
    Ok(items)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn dedup<T: PartialEq + Copy>(items: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

impl ExperimentConfig {
    /// Parses config text; unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` set twice", n + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies `FUSE_SEED` to unset seeds.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.apply_env_seed(env_seed()?);
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "modes" => self.modes = dedup(parse_list(key, value, str::parse)?),
            "representations" => self.representations = dedup(parse_list(key, value, str::parse)?),
            "algorithms" => self.algorithms = dedup(parse_list(key, value, str::parse)?),
            "k" => self.k = parse_value(key, value)?,
            "cv_seed" => self.cv_seed = Some(parse_value(key, value)?),
            "generator_seed" => self.generator_seed = Some(parse_value(key, value)?),
            "learner_seed" => self.learner_seed = Some(parse_value(key, value)?),
            "anonymize_seed" => self.anonymize_seed = Some(parse_value(key, value)?),
            "n_bins" => self.n_bins = parse_value(key, value)?,
            "cutoffs" => self.cutoffs = parse_list(key, value, |v| parse_value(key, v))?,
            "cutoff_labels" => {
                self.cutoff_labels = parse_list(key, value, |v| Ok(v.to_string()))?;
            }
            "input_dir" => self.input_dir = Some(PathBuf::from(value)),
            "n_students" => self.generator.n_students = parse_value(key, value)?,
            "n_pass" => self.generator.n_pass = parse_value(key, value)?,
            "noise" => self.generator.noise = parse_value(key, value)?,
            "skew" => self.generator.skew = parse_value(key, value)?,
            "signals" => {
                self.generator.signals = parse_list(key, value, |item| {
                    let (name, t) = item
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("signal `{item}` is not name:threshold")))?;
                    Ok(PlantedSignal {
                        attribute: name.trim().to_string(),
                        threshold: parse_value(key, t.trim())?,
                    })
                })?;
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "fit_in_fold" => self.fit_in_fold = parse_bool(key, value)?,
            "allow_missing" => self.allow_missing = parse_bool(key, value)?,
            "vote_across_algorithms" => self.vote_across_algorithms = parse_bool(key, value)?,
            "formats" => self.formats = dedup(parse_list(key, value, OutputFormat::parse)?),
            "extra_attributes" => {
                self.extra_attributes = parse_list(key, value, |item| {
                    let (name, source) = item
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("attribute `{item}` is not name:source")))?;
                    let source: Source = source.trim().parse()?;
                    Ok(Attribute::numeric(name.trim(), source))
                })?;
                self.generator.extra = self.extra_attributes.clone();
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.representations.is_empty() || self.algorithms.is_empty() {
            return Err(Error::Config(
                "at least one mode, representation and algorithm is required".into(),
            ));
        }
        if self.k < 2 {
            return Err(Error::Config("k must be at least 2".into()));
        }
        if self.n_bins < 2 {
            return Err(Error::TooFewBins(self.n_bins));
        }
        if self.input_dir.is_none() && self.generator.n_students < self.k {
            return Err(Error::Config(format!(
                "{} students cannot fill {} folds",
                self.generator.n_students, self.k
            )));
        }
        self.class_cutoffs()?;
        self.schema()?;
        Ok(())
    }

    /// Fills unset seeds with `seed`.
    pub fn apply_env_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            for slot in [
                &mut self.cv_seed,
                &mut self.generator_seed,
                &mut self.learner_seed,
                &mut self.anonymize_seed,
            ] {
                slot.get_or_insert(s);
            }
        }
    }

    pub fn cv_seed(&self) -> u64 {
        self.cv_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn generator_seed(&self) -> u64 {
        self.generator_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn learner_seed(&self) -> u64 {
        self.learner_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn anonymize_seed(&self) -> u64 {
        self.anonymize_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn class_cutoffs(&self) -> Result<ClassCutoffs> {
        ClassCutoffs::new(self.cutoffs.clone(), self.cutoff_labels.clone())
    }

    /// Merged schema; class labels run from the highest mark interval down,
    /// so PASS comes first by default.
    pub fn schema(&self) -> Result<AttributeSchema> {
        let mut labels = self.cutoff_labels.clone();
        labels.reverse();
        let mut schema = AttributeSchema::new(AttributeSchema::default_cohort().attributes().to_vec(), labels)?;
        for a in &self.extra_attributes {
            schema = schema.extend(a.clone())?;
        }
        Ok(schema)
    }

    /// Canonical text of every setting that affects results (not `output_dir`).
    pub fn canonical(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let _ = writeln!(s, "algorithms={}", join(self.algorithms.iter().map(|a| a.id().into()).collect()));
        let _ = writeln!(s, "allow_missing={}", self.allow_missing);
        let _ = writeln!(s, "anonymize_seed={}", self.anonymize_seed());
        let _ = writeln!(s, "cutoff_labels={}", self.cutoff_labels.join(","));
        let _ = writeln!(s, "cutoffs={}", join(self.cutoffs.iter().map(|c| c.to_string()).collect()));
        let _ = writeln!(s, "cv_seed={}", self.cv_seed());
        let _ = writeln!(
            s,
            "extra_attributes={}",
            join(
                self.extra_attributes
                    .iter()
                    .map(|a| format!("{}:{}", a.name, a.source.as_str()))
                    .collect()
            )
        );
        let _ = writeln!(s, "fit_in_fold={}", self.fit_in_fold);
        let _ = writeln!(s, "formats={}", join(self.formats.iter().map(|f| f.id().into()).collect()));
        let _ = writeln!(s, "generator_seed={}", self.generator_seed());
        let _ = writeln!(
            s,
            "input_dir={}",
            self.input_dir.as_ref().map_or(String::new(), |p| p.display().to_string())
        );
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "learner_seed={}", self.learner_seed());
        let _ = writeln!(s, "modes={}", join(self.modes.iter().map(|m| m.id().into()).collect()));
        let _ = writeln!(s, "n_bins={}", self.n_bins);
        let _ = writeln!(s, "n_pass={}", self.generator.n_pass);
        let _ = writeln!(s, "n_students={}", self.generator.n_students);
        let _ = writeln!(s, "noise={}", self.generator.noise);
        let _ = writeln!(s, "skew={}", self.generator.skew);
        let _ = writeln!(
            s,
            "representations={}",
            join(self.representations.iter().map(|r| r.id().into()).collect())
        );
        let _ = writeln!(
            s,
            "signals={}",
            join(
                self.generator
                    .signals
                    .iter()
                    .map(|p| format!("{}:{}", p.attribute, p.threshold))
                    .collect()
            )
        );
        let _ = writeln!(s, "vote_across_algorithms={}", self.vote_across_algorithms);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

/// `FUSE_SEED` from the environment, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

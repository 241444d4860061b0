//! Seeded synthetic cohorts shaped like the three-source study.
//!
//! Marks are drawn per class (PASS in [5, 10], FAIL in [0, 4.99]). Each
//! planted attribute is above its normalized threshold exactly when the
//! student passes, except that the indicator flips with probability
//! `noise`, independently per attribute. Every other attribute is
//! label-independent.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{write_scores_csv, write_source_csv, Attribute, AttributeSchema, Dataset, Source, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub attribute: String,
    /// Threshold on the min-max normalized scale.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_students: usize,
    pub n_pass: usize,
    /// Probability that a planted indicator disagrees with the label.
    pub noise: f64,
    pub signals: Vec<PlantedSignal>,
    /// Exponent shaping above-threshold values toward the threshold; 1 is uniform.
    pub skew: f64,
    /// Extra label-independent numeric attributes appended to the schema.
    pub extra: Vec<Attribute>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_students: 40,
            n_pass: 21,
            noise: 0.1,
            signals: vec![
                PlantedSignal {
                    attribute: "SummAll".into(),
                    threshold: 0.03,
                },
                PlantedSignal {
                    attribute: "AOI3FixCount".into(),
                    threshold: 0.29,
                },
                PlantedSignal {
                    attribute: "surprise".into(),
                    threshold: 0.05,
                },
            ],
            skew: 1.5,
            extra: Vec::new(),
        }
    }
}

/// Raw maximum of an attribute; `None` marks a [0, 1] confidence.
fn raw_max(name: &str) -> Option<f64> {
    match name {
        "SummAll" => Some(40.0),
        "COIStotalFreq" => Some(20.0),
        "PKAtotalFreq" => Some(15.0),
        "AOI1FixCount" => Some(150.0),
        "AOI2FixCount" => Some(200.0),
        "AOI3FixCount" => Some(300.0),
        _ => None,
    }
}

impl GenParams {
    pub fn schema(&self) -> Result<AttributeSchema> {
        let mut schema = AttributeSchema::default_cohort();
        for a in &self.extra {
            schema = schema.extend(a.clone())?;
        }
        Ok(schema)
    }

    fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        if self.n_students < 2 || self.n_pass == 0 || self.n_pass >= self.n_students {
            return Err(Error::Generator(format!(
                "cannot split {} students into {} PASS and at least one of each class",
                self.n_students, self.n_pass
            )));
        }
        if !(self.skew >= 1.0 && self.skew.is_finite()) {
            return Err(Error::Generator("skew must be at least 1".into()));
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return Err(Error::Generator("noise must lie in [0, 0.5]".into()));
        }
        for s in &self.signals {
            let i = schema
                .index_of(&s.attribute)
                .ok_or_else(|| Error::Generator(format!("unknown planted attribute `{}`", s.attribute)))?;
            if !schema.attribute(i).is_numeric() {
                return Err(Error::Generator(format!("`{}` is not numeric", s.attribute)));
            }
            if !(s.threshold > 0.0 && s.threshold < 1.0) {
                return Err(Error::Generator("thresholds must lie in (0, 1)".into()));
            }
        }
        Ok(())
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Raw value for normalized position `v` on an attribute with maximum `max`.
fn to_raw(v: f64, max: Option<f64>) -> f64 {
    match max {
        Some(m) => (v * m).round(),
        None => round_to(v, 4),
    }
}

/// Generates the merged cohort (ids `student01`…, raw marks attached).
pub fn generate_synthetic(params: &GenParams, seed: u64) -> Result<Dataset> {
    let schema = params.schema()?;
    params.validate(&schema)?;
    let n = params.n_students;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pass: Vec<bool> = (0..n).map(|i| i < params.n_pass).collect();
    pass.shuffle(&mut rng);
    let marks: Vec<f64> = pass
        .iter()
        .map(|&p| {
            if p {
                round_to(rng.gen_range(5.0..=10.0), 2)
            } else {
                round_to(rng.gen_range(0.0..=4.99), 2)
            }
        })
        .collect();

    let d = schema.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for a in 0..d {
        let name = &schema.attribute(a).name;
        let max = raw_max(name);
        let signal = params.signals.iter().find(|s| &s.attribute == name);
        let col: Vec<f64> = match signal {
            None => (0..n).map(|_| to_raw(rng.gen::<f64>(), max)).collect(),
            Some(s) => {
                let t = s.threshold;
                let high: Vec<bool> = pass.iter().map(|&p| p != rng.gen_bool(params.noise)).collect();
                let top = max.unwrap_or(1.0);
                // smallest raw value strictly above the threshold, largest strictly below
                let step = if max.is_some() { 1.0 } else { 1e-4 };
                let q = t * top / step;
                let (lo_k, hi_k) = if (q - q.round()).abs() < 1e-9 {
                    (q.round() - 1.0, q.round() + 1.0)
                } else {
                    (q.floor(), q.ceil())
                };
                let (lo_max, hi_min) = (lo_k * step, hi_k * step);
                let mut col: Vec<f64> = high
                    .iter()
                    .map(|&h| {
                        let u: f64 = rng.gen();
                        let raw = if h {
                            hi_min + (top - hi_min) * u.powf(params.skew)
                        } else {
                            lo_max.max(0.0) * u
                        };
                        if max.is_some() {
                            (raw / step).round() * step
                        } else {
                            round_to(raw, 4)
                        }
                    })
                    .collect();
                if let Some(i) = high.iter().position(|&h| h) {
                    col[i] = top;
                }
                if let Some(i) = high.iter().position(|&h| !h) {
                    col[i] = 0.0;
                }
                col
            }
        };
        cols.push(col);
    }

    let ids: Vec<String> = (0..n).map(|i| format!("student{:02}", i + 1)).collect();
    let rows = (0..n)
        .map(|r| cols.iter().map(|c| Value::Num(c[r])).collect())
        .collect();
    Dataset::new(schema, ids, rows, None, Some(marks))
}

/// Writes `logs.csv`, `emotion.csv`, `gaze.csv` and `scores.csv` into `dir`.
pub fn write_cohort(cohort: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for source in Source::ALL {
        if cohort.schema().source_indices(source).is_empty() {
            continue;
        }
        let path = dir.join(source.file_name());
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_source_csv(cohort, source, f)?;
    }
    let scores: Vec<(String, f64)> = cohort
        .ids()
        .iter()
        .cloned()
        .zip(cohort.scores().unwrap_or_default().iter().copied())
        .collect();
    let path = dir.join("scores.csv");
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_scores_csv(&scores, f)
}

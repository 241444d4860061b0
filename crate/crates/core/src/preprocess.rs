//! Min-max normalization, equal-width binning, class cut-offs and projection.

use serde::{Deserialize, Serialize};

use crate::dataset::{Attribute, AttributeKind, AttributeSchema, Dataset, Value, FAIL, PASS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

/// Per-attribute `[min, max]` observed when fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub ranges: Vec<Range>,
}

impl NormalizationParams {
    /// `(x - min) / (max - min)`, clamped to `[0, 1]`; constant attributes map to 0.
    pub fn scale(&self, attr: usize, x: f64) -> f64 {
        let Range { min, max } = self.ranges[attr];
        if max <= min {
            return 0.0;
        }
        ((x - min) / (max - min)).clamp(0.0, 1.0)
    }

    /// Applies fitted ranges to new data (held-out rows are clamped).
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        require_numeric(dataset)?;
        if dataset.n_attributes() != self.ranges.len() {
            return Err(Error::SchemaMismatch(format!(
                "normalization fitted on {} attributes, data has {}",
                self.ranges.len(),
                dataset.n_attributes()
            )));
        }
        let rows = dataset
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| Value::Num(self.scale(j, v.as_num().unwrap_or_default())))
                    .collect()
            })
            .collect();
        dataset.with_rows(dataset.schema().clone(), rows)
    }
}

fn require_numeric(dataset: &Dataset) -> Result<()> {
    match dataset.schema().attributes().iter().find(|a| !a.is_numeric()) {
        Some(a) => Err(Error::NotNumeric(a.name.clone())),
        None => Ok(()),
    }
}

fn fit_ranges(dataset: &Dataset) -> Vec<Range> {
    (0..dataset.n_attributes())
        .map(|j| {
            let col = dataset.numeric_column(j).unwrap_or_default();
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if col.is_empty() {
                Range { min: 0.0, max: 0.0 }
            } else {
                Range { min, max }
            }
        })
        .collect()
}

/// Rescales every attribute to `[0, 1]` with the min-max formula.
pub fn min_max_normalize(dataset: &Dataset) -> Result<(Dataset, NormalizationParams)> {
    require_numeric(dataset)?;
    let params = NormalizationParams {
        ranges: fit_ranges(dataset),
    };
    Ok((params.apply(dataset)?, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeBins {
    pub min: f64,
    pub bin_width: f64,
    pub n_bins: usize,
}

impl AttributeBins {
    /// Half-open `[min + i·w, min + (i+1)·w)` intervals, last bin closed;
    /// values outside the fitted range fall into the end bins.
    pub fn bin_of(&self, x: f64) -> usize {
        if self.bin_width <= 0.0 {
            return 0;
        }
        (1..self.n_bins)
            .take_while(|&i| x >= self.min + i as f64 * self.bin_width)
            .last()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningParams {
    pub bins: Vec<AttributeBins>,
}

/// Category names for `n` equal-width bins.
pub fn bin_labels(n: usize) -> Vec<String> {
    match n {
        2 => vec!["LOW".into(), "HIGH".into()],
        3 => vec!["LOW".into(), "MEDIUM".into(), "HIGH".into()],
        _ => (1..=n).map(|i| format!("BIN{i}")).collect(),
    }
}

impl BinningParams {
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        require_numeric(dataset)?;
        if dataset.n_attributes() != self.bins.len() {
            return Err(Error::SchemaMismatch(format!(
                "binning fitted on {} attributes, data has {}",
                self.bins.len(),
                dataset.n_attributes()
            )));
        }
        let attrs = dataset
            .schema()
            .attributes()
            .iter()
            .zip(&self.bins)
            .map(|(a, b)| Attribute {
                name: a.name.clone(),
                source: a.source,
                kind: AttributeKind::Categorical(bin_labels(b.n_bins)),
            })
            .collect();
        let schema = dataset.schema().with_replaced_attributes(attrs)?;
        let rows = dataset
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&self.bins)
                    .map(|(v, b)| Value::Cat(b.bin_of(v.as_num().unwrap_or_default())))
                    .collect()
            })
            .collect();
        dataset.with_rows(schema, rows)
    }
}

/// Equal-width binning with `bin_width = (max - min) / n_bins`.
pub fn equal_width_discretize(dataset: &Dataset, n_bins: usize) -> Result<(Dataset, BinningParams)> {
    if n_bins < 2 {
        return Err(Error::TooFewBins(n_bins));
    }
    require_numeric(dataset)?;
    let params = BinningParams {
        bins: fit_ranges(dataset)
            .into_iter()
            .map(|Range { min, max }| AttributeBins {
                min,
                bin_width: ((max - min) / n_bins as f64).max(0.0),
                n_bins,
            })
            .collect(),
    };
    Ok((params.apply(dataset)?, params))
}

/// Manual cut-offs on the 0–10 mark scale. Interval `i` is
/// `[cuts[i-1], cuts[i])`; the last interval is closed at 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCutoffs {
    cuts: Vec<f64>,
    labels: Vec<String>,
}

impl ClassCutoffs {
    pub fn new(cuts: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != cuts.len() + 1 {
            return Err(Error::Config(format!(
                "{} cut-offs need {} labels, got {}",
                cuts.len(),
                cuts.len() + 1,
                labels.len()
            )));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("cut-offs must be strictly increasing".into()));
        }
        if cuts.iter().any(|c| !(*c > 0.0 && *c <= 10.0)) {
            return Err(Error::Config("cut-offs must lie in (0, 10]".into()));
        }
        Ok(ClassCutoffs { cuts, labels })
    }

    /// FAIL below `pass_mark`, PASS at or above it.
    pub fn pass_fail(pass_mark: f64) -> Result<Self> {
        Self::new(vec![pass_mark], vec![FAIL.into(), PASS.into()])
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_of(&self, mark: f64) -> Result<&str> {
        if !(0.0..=10.0).contains(&mark) {
            return Err(Error::MarkOutOfRange(mark));
        }
        let interval = self.cuts.iter().filter(|&&c| mark >= c).count();
        Ok(&self.labels[interval])
    }
}

impl Default for ClassCutoffs {
    fn default() -> Self {
        Self::pass_fail(5.0).expect("default cut-off is valid")
    }
}

pub fn discretize_class(scores: &[f64], cutoffs: &ClassCutoffs) -> Result<Vec<String>> {
    scores
        .iter()
        .map(|&m| cutoffs.label_of(m).map(str::to_string))
        .collect()
}

/// Attaches class labels derived from the dataset's marks.
pub fn label_from_scores(dataset: &Dataset, cutoffs: &ClassCutoffs) -> Result<Dataset> {
    let scores = dataset
        .scores()
        .ok_or_else(|| Error::Dataset("dataset has no marks to discretize".into()))?;
    let labels = discretize_class(scores, cutoffs)?
        .iter()
        .map(|l| {
            dataset
                .schema()
                .class_index(l)
                .ok_or_else(|| Error::Config(format!("cut-off label `{l}` is not a class label")))
        })
        .collect::<Result<Vec<_>>>()?;
    dataset.with_labels(labels)
}

/// Restricts the dataset to `indices`, keeping schema order.
pub fn project(dataset: &Dataset, indices: &[usize]) -> Result<Dataset> {
    if indices.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut idx = indices.to_vec();
    idx.sort_unstable();
    idx.dedup();
    let schema: AttributeSchema = dataset.schema().project(&idx)?;
    let rows = dataset
        .rows()
        .iter()
        .map(|r| idx.iter().map(|&i| r[i]).collect())
        .collect();
    dataset.with_rows(schema, rows)
}

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::schema::{AttributeKind, AttributeSchema};
use crate::error::{Error, Result};

/// One cell: a real in source units, or an index into the attribute's categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(usize),
}

impl Value {
    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(self) -> Option<usize> {
        match self {
            Value::Cat(c) => Some(c),
            Value::Num(_) => None,
        }
    }
}

/// Checks that `row` conforms to `schema`.
pub fn check_row(schema: &AttributeSchema, row: &[Value]) -> Result<()> {
    if row.len() != schema.len() {
        return Err(Error::SchemaMismatch(format!(
            "expected {} values, got {}",
            schema.len(),
            row.len()
        )));
    }
    for (a, v) in schema.attributes().iter().zip(row) {
        match (&a.kind, v) {
            (AttributeKind::Numeric, Value::Num(x)) if x.is_finite() => {}
            (AttributeKind::Categorical(c), Value::Cat(i)) if *i < c.len() => {}
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "value {v:?} does not fit attribute `{}`",
                    a.name
                )))
            }
        }
    }
    Ok(())
}

/// Immutable table of instances bound to a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: AttributeSchema,
    ids: Vec<String>,
    rows: Vec<Vec<Value>>,
    labels: Option<Vec<usize>>,
    scores: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        schema: AttributeSchema,
        ids: Vec<String>,
        rows: Vec<Vec<Value>>,
        labels: Option<Vec<usize>>,
        scores: Option<Vec<f64>>,
    ) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::LengthMismatch(ids.len(), rows.len()));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for row in &rows {
            check_row(&schema, row)?;
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(Error::LengthMismatch(l.len(), rows.len()));
            }
            if let Some(bad) = l.iter().find(|&&c| c >= schema.n_classes()) {
                return Err(Error::Dataset(format!("class index {bad} out of range")));
            }
        }
        if let Some(s) = &scores {
            if s.len() != rows.len() {
                return Err(Error::LengthMismatch(s.len(), rows.len()));
            }
            if let Some(&bad) = s.iter().find(|m| !(0.0..=10.0).contains(*m)) {
                return Err(Error::MarkOutOfRange(bad));
            }
        }
        Ok(Dataset {
            schema,
            ids,
            rows,
            labels,
            scores,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Value] {
        &self.rows[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Labels, or an error for unlabeled data.
    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels.as_deref().ok_or(Error::Unlabeled)
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    /// Numeric column; `None` if the attribute is categorical.
    pub fn numeric_column(&self, attr: usize) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r[attr].as_num()).collect()
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Dataset::new(
            self.schema.clone(),
            self.ids.clone(),
            self.rows.clone(),
            Some(labels),
            self.scores.clone(),
        )
    }

    pub fn with_ids(&self, ids: Vec<String>) -> Result<Self> {
        Dataset::new(
            self.schema.clone(),
            ids,
            self.rows.clone(),
            self.labels.clone(),
            self.scores.clone(),
        )
    }

    /// Same ids/labels/scores, new attribute block.
    pub fn with_rows(&self, schema: AttributeSchema, rows: Vec<Vec<Value>>) -> Result<Self> {
        Dataset::new(
            schema,
            self.ids.clone(),
            rows,
            self.labels.clone(),
            self.scores.clone(),
        )
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            scores: self
                .scores
                .as_ref()
                .map(|s| indices.iter().map(|&i| s[i]).collect()),
        }
    }

    /// Per-class instance counts.
    pub fn class_counts(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.schema.n_classes()];
        if let Some(l) = &self.labels {
            for &c in l {
                counts[c] += 1.0;
            }
        }
        counts
    }
}

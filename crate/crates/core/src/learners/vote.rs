//! Vote: the arithmetic mean of base-model class distributions.

use super::{ClassDistribution, Classifier, Model, RuleText};
use crate::dataset::{check_row, AttributeSchema, Value};
use crate::error::{Error, Result};

/// One base model and the columns of the merged schema it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMember {
    /// Section heading in the exported rules, usually the source name.
    pub name: String,
    pub columns: Vec<usize>,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoteModel {
    schema: AttributeSchema,
    members: Vec<VoteMember>,
}

impl VoteModel {
    /// `schema` is the merged schema every member's columns index into.
    pub fn new(schema: AttributeSchema, members: Vec<VoteMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("a vote needs at least one base model".into()));
        }
        for m in &members {
            let own = m.model.schema();
            if own.class_labels() != schema.class_labels() {
                return Err(Error::SchemaMismatch(format!(
                    "base `{}` has different class labels",
                    m.name
                )));
            }
            if own.len() != m.columns.len() {
                return Err(Error::SchemaMismatch(format!(
                    "base `{}` reads {} columns but was trained on {}",
                    m.name,
                    m.columns.len(),
                    own.len()
                )));
            }
            for (k, &c) in m.columns.iter().enumerate() {
                if c >= schema.len() {
                    return Err(Error::IndexOutOfRange {
                        index: c,
                        len: schema.len(),
                    });
                }
                if schema.attribute(c) != own.attribute(k) {
                    return Err(Error::SchemaMismatch(format!(
                        "base `{}` column {k} is `{}`, merged column {c} is `{}`",
                        m.name,
                        own.attribute(k).name,
                        schema.attribute(c).name
                    )));
                }
            }
        }
        Ok(VoteModel { schema, members })
    }

    pub fn members(&self) -> &[VoteMember] {
        &self.members
    }
}

impl Classifier for VoteModel {
    fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn predict_distribution(&self, instance: &[Value]) -> Result<ClassDistribution> {
        check_row(&self.schema, instance)?;
        let parts = self
            .members
            .iter()
            .map(|m| {
                let x: Vec<Value> = m.columns.iter().map(|&c| instance[c]).collect();
                m.model.predict_distribution(&x)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClassDistribution::mean(&parts))
    }

    fn export_rules(&self) -> RuleText {
        let mut out = String::new();
        for m in &self.members {
            out.push_str(&format!("=== {} ===\n", m.name));
            out.push_str(&m.model.section_text());
        }
        RuleText(out)
    }
}

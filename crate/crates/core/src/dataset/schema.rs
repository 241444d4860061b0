use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The recording modality an attribute comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Tutoring-system interaction logs.
    Logs,
    /// Facial-expression emotion confidences.
    Emotion,
    /// Eye-tracking fixations on areas of interest.
    Gaze,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Logs, Source::Emotion, Source::Gaze];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Logs => "logs",
            Source::Emotion => "emotion",
            Source::Gaze => "gaze",
        }
    }

    /// Conventional per-source input file name.
    pub fn file_name(self) -> &'static str {
        match self {
            Source::Logs => "logs.csv",
            Source::Emotion => "emotion.csv",
            Source::Gaze => "gaze.csv",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logs" | "metatutor" => Ok(Source::Logs),
            "emotion" | "emotions" => Ok(Source::Emotion),
            "gaze" | "interaction" => Ok(Source::Gaze),
            other => Err(Error::Schema(format!("unknown source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Numeric,
    /// Ordered category names; cells store the index into this list.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub source: Source,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>, source: Source) -> Self {
        Attribute {
            name: name.into(),
            source,
            kind: AttributeKind::Numeric,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        source: Source,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Attribute {
            name: name.into(),
            source,
            kind: AttributeKind::Categorical(categories.into_iter().map(Into::into).collect()),
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric)
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Numeric => None,
            AttributeKind::Categorical(c) => Some(c),
        }
    }

    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories()?.iter().position(|c| c == value)
    }
}

/// Names appear verbatim in CSV headers and rule text, so they must be
/// single tokens free of the characters both formats use as syntax.
fn check_token(what: &str, token: &str) -> Result<()> {
    const RESERVED: &[char] = &[',', '[', ']', '{', '}', '(', ')', '=', '<', '>', ':', '"'];
    if token.is_empty() {
        return Err(Error::Schema(format!("empty {what}")));
    }
    if token.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c)) {
        return Err(Error::Schema(format!(
            "{what} `{token}` contains whitespace or a reserved character"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    class_labels: Vec<String>,
}

pub const PASS: &str = "PASS";
pub const FAIL: &str = "FAIL";

pub const LOG_ATTRIBUTES: [&str; 3] = ["SummAll", "COIStotalFreq", "PKAtotalFreq"];
pub const EMOTION_ATTRIBUTES: [&str; 8] = [
    "anger",
    "contempt",
    "disgust",
    "fear",
    "happiness",
    "neutral",
    "sadness",
    "surprise",
];
pub const GAZE_ATTRIBUTES: [&str; 3] = ["AOI1FixCount", "AOI2FixCount", "AOI3FixCount"];

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>, class_labels: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &attributes {
            check_token("attribute name", &a.name)?;
            if a.name == "id" || a.name == "score" || a.name == "class" {
                return Err(Error::Schema(format!("`{}` is a reserved column name", a.name)));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", a.name)));
            }
            if let AttributeKind::Categorical(cats) = &a.kind {
                if cats.is_empty() {
                    return Err(Error::Schema(format!("attribute `{}` has no categories", a.name)));
                }
                let mut cat_seen = HashSet::new();
                for c in cats {
                    check_token("category", c)?;
                    if !cat_seen.insert(c) {
                        return Err(Error::Schema(format!(
                            "attribute `{}` repeats category `{c}`",
                            a.name
                        )));
                    }
                }
            }
        }
        let distinct: HashSet<_> = class_labels.iter().collect();
        if class_labels.len() < 2 || distinct.len() != class_labels.len() {
            return Err(Error::Schema(
                "class labels need at least two distinct entries".into(),
            ));
        }
        for l in &class_labels {
            check_token("class label", l)?;
        }
        Ok(AttributeSchema {
            attributes,
            class_labels,
        })
    }

    /// Schema with the default PASS/FAIL class labels.
    pub fn with_attributes(attributes: Vec<Attribute>) -> Result<Self> {
        Self::new(attributes, vec![PASS.to_string(), FAIL.to_string()])
    }

    /// The fourteen numeric attributes of the logs, emotion and gaze sources.
    pub fn default_cohort() -> Self {
        let attrs = LOG_ATTRIBUTES
            .iter()
            .map(|n| Attribute::numeric(*n, Source::Logs))
            .chain(EMOTION_ATTRIBUTES.iter().map(|n| Attribute::numeric(*n, Source::Emotion)))
            .chain(GAZE_ATTRIBUTES.iter().map(|n| Attribute::numeric(*n, Source::Gaze)))
            .collect();
        Self::with_attributes(attrs).expect("default schema is valid")
    }

    /// Adds an attribute, keeping attributes grouped in source order.
    pub fn extend(&self, attribute: Attribute) -> Result<Self> {
        let mut attrs = self.attributes.clone();
        let at = attrs
            .iter()
            .rposition(|a| a.source <= attribute.source)
            .map_or(0, |i| i + 1);
        attrs.insert(at, attribute);
        Self::new(attrs, self.class_labels.clone())
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Indices of the attributes recorded by `source`, in schema order.
    pub fn source_indices(&self, source: Source) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.attributes[i].source == source)
            .collect()
    }

    pub fn sources(&self) -> Vec<Source> {
        let mut out: Vec<Source> = self.attributes.iter().map(|a| a.source).collect();
        out.sort();
        out.dedup();
        out
    }

    /// The attributes of one source, used as a loading fragment.
    pub fn fragment(&self, source: Source) -> Vec<Attribute> {
        self.attributes
            .iter()
            .filter(|a| a.source == source)
            .cloned()
            .collect()
    }

    /// Schema restricted to `indices` (which must be valid), in the given order.
    pub fn project(&self, indices: &[usize]) -> Result<Self> {
        let mut attrs = Vec::with_capacity(indices.len());
        for &i in indices {
            let a = self.attributes.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })?;
            attrs.push(a.clone());
        }
        Self::new(attrs, self.class_labels.clone())
    }

    pub fn with_class_labels(&self, class_labels: &[String]) -> Result<Self> {
        Self::new(self.attributes.clone(), class_labels.to_vec())
    }

    pub fn with_replaced_attributes(&self, attributes: Vec<Attribute>) -> Result<Self> {
        Self::new(attributes, self.class_labels.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_has_fourteen_attributes_in_source_order() {
        let s = AttributeSchema::default_cohort();
        assert_eq!(s.len(), 14);
        assert_eq!(s.source_indices(Source::Logs), vec![0, 1, 2]);
        assert_eq!(s.source_indices(Source::Emotion), (3..11).collect::<Vec<_>>());
        assert_eq!(s.source_indices(Source::Gaze), vec![11, 12, 13]);
        assert_eq!(s.class_labels(), &["PASS".to_string(), "FAIL".to_string()]);
    }

    #[test]
    fn rejects_duplicates_and_empty_categories() {
        let dup = vec![
            Attribute::numeric("a", Source::Logs),
            Attribute::numeric("a", Source::Gaze),
        ];
        assert!(AttributeSchema::with_attributes(dup).is_err());
        let empty = vec![Attribute::categorical("a", Source::Logs, Vec::<String>::new())];
        assert!(AttributeSchema::with_attributes(empty).is_err());
        assert!(AttributeSchema::new(vec![], vec!["PASS".into(), "PASS".into()]).is_err());
        assert!(AttributeSchema::with_attributes(vec![Attribute::numeric("a b", Source::Logs)]).is_err());
    }

    #[test]
    fn extend_keeps_source_grouping() {
        let s = AttributeSchema::default_cohort()
            .extend(Attribute::numeric("PLANtotalFreq", Source::Logs))
            .unwrap();
        assert_eq!(s.len(), 15);
        assert_eq!(s.attribute(3).name, "PLANtotalFreq");
        assert_eq!(s.source_indices(Source::Logs), vec![0, 1, 2, 3]);
    }
}

//! Canonical rule text and its interpreter.
//!
//! ```text
//! === logs ===
//! If SummAll > 0.25 Then PASS (PASS=12, FAIL=1)
//! If SummAll <= 0.25 AND surprise <= 0.061227 Then FAIL (PASS=2, FAIL=14)
//! If true Then FAIL (PASS=3, FAIL=4)
//! Size of the tree: 5
//! Number of Rules: 3
//! ```
//!
//! Lines starting with `#` are comments.
//!
//! Rules fire first-match within a section. Exemplar sections end with an
//! `Otherwise nearest exemplar scaled by a:r b:r` line instead of a `true`
//! rule. With several sections the per-section distributions (rule counts,
//! or one-hot without counts) are averaged.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{format_num, AttributeSchema, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Test {
    Le(f64),
    Lt(f64),
    Gt(f64),
    Ge(f64),
    /// Category index equality.
    Eq(usize),
    /// Closed numeric interval.
    Within { lo: f64, hi: f64 },
    /// Category index membership.
    OneOf(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attr: usize,
    pub test: Test,
}

impl Condition {
    pub fn holds(&self, instance: &[Value]) -> bool {
        match (&self.test, instance[self.attr]) {
            (Test::Le(t), Value::Num(x)) => x <= *t,
            (Test::Lt(t), Value::Num(x)) => x < *t,
            (Test::Gt(t), Value::Num(x)) => x > *t,
            (Test::Ge(t), Value::Num(x)) => x >= *t,
            (Test::Within { lo, hi }, Value::Num(x)) => *lo <= x && x <= *hi,
            (Test::Eq(c), Value::Cat(v)) => *c == v,
            (Test::OneOf(cs), Value::Cat(v)) => cs.contains(&v),
            _ => false,
        }
    }

    pub fn render(&self, schema: &AttributeSchema) -> String {
        let a = schema.attribute(self.attr);
        let cat = |i: usize| {
            a.categories()
                .and_then(|c| c.get(i).cloned())
                .unwrap_or_else(|| i.to_string())
        };
        let name = &a.name;
        match &self.test {
            Test::Le(t) => format!("{name} <= {}", format_num(*t)),
            Test::Lt(t) => format!("{name} < {}", format_num(*t)),
            Test::Gt(t) => format!("{name} > {}", format_num(*t)),
            Test::Ge(t) => format!("{name} >= {}", format_num(*t)),
            Test::Eq(c) => format!("{name} = {}", cat(*c)),
            Test::Within { lo, hi } => {
                format!("{name} in [{}, {}]", format_num(*lo), format_num(*hi))
            }
            Test::OneOf(cs) => format!(
                "{name} in {{{}}}",
                cs.iter().map(|&c| cat(c)).collect::<Vec<_>>().join(", ")
            ),
        }
    }
}

/// A conjunction of conditions with the class counts of the training
/// instances it covered. An empty conjunction is the catch-all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub counts: Vec<f64>,
}

impl Rule {
    pub fn covers(&self, instance: &[Value]) -> bool {
        self.conditions.iter().all(|c| c.holds(instance))
    }

    pub fn label(&self) -> usize {
        super::ClassDistribution::from_counts(&self.counts).argmax()
    }

    pub fn render(&self, schema: &AttributeSchema, class_labels: &[String], with_counts: bool) -> String {
        let body = if self.conditions.is_empty() {
            "true".to_string()
        } else {
            self.conditions
                .iter()
                .map(|c| c.render(schema))
                .collect::<Vec<_>>()
                .join(" AND ")
        };
        let mut line = format!("If {body} Then {}", class_labels[self.label()]);
        if with_counts {
            let counts = class_labels
                .iter()
                .zip(&self.counts)
                .map(|(l, c)| format!("{l}={}", format_num(*c)))
                .collect::<Vec<_>>()
                .join(", ");
            line.push_str(&format!(" ({counts})"));
        }
        line
    }
}

/// Exported rule text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleText(pub String);

impl RuleText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of `If` lines plus nearest-exemplar fallbacks.
    pub fn rule_count(&self) -> usize {
        self.0
            .lines()
            .filter(|l| l.starts_with("If ") || l.starts_with("Otherwise nearest"))
            .count()
    }
}

impl fmt::Display for RuleText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Le,
    Lt,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
enum Cond {
    True,
    Cmp { attr: String, op: Op, value: f64 },
    Eq { attr: String, category: String },
    Within { attr: String, lo: f64, hi: f64 },
    OneOf { attr: String, categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
struct ParsedRule {
    conds: Vec<Cond>,
    label: String,
    counts: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Section {
    rules: Vec<ParsedRule>,
    nearest: Option<Vec<(String, f64)>>,
    declared_rules: Option<usize>,
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::RuleText {
        line,
        message: message.into(),
    }
}

fn parse_num(line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| malformed(line, format!("bad number `{s}`")))
}

fn parse_cond(line: usize, text: &str) -> Result<Cond> {
    let text = text.trim();
    if text == "true" {
        return Ok(Cond::True);
    }
    let (attr, rest) = text
        .split_once(' ')
        .ok_or_else(|| malformed(line, format!("bad condition `{text}`")))?;
    let attr = attr.to_string();
    let rest = rest.trim();
    if let Some(set) = rest.strip_prefix("in ") {
        let set = set.trim();
        if let Some(inner) = set.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let (lo, hi) = inner
                .split_once(',')
                .ok_or_else(|| malformed(line, "interval needs two bounds"))?;
            return Ok(Cond::Within {
                attr,
                lo: parse_num(line, lo)?,
                hi: parse_num(line, hi)?,
            });
        }
        if let Some(inner) = set.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
            let categories = inner.split(',').map(|c| c.trim().to_string()).collect();
            return Ok(Cond::OneOf { attr, categories });
        }
        return Err(malformed(line, format!("bad set `{set}`")));
    }
    let (op, value) = rest
        .split_once(' ')
        .ok_or_else(|| malformed(line, format!("bad condition `{text}`")))?;
    let cmp = |op| -> Result<Cond> {
        Ok(Cond::Cmp {
            attr: attr.clone(),
            op,
            value: parse_num(line, value)?,
        })
    };
    match op {
        "<=" => cmp(Op::Le),
        "<" => cmp(Op::Lt),
        ">" => cmp(Op::Gt),
        ">=" => cmp(Op::Ge),
        "=" => Ok(Cond::Eq {
            attr: attr.clone(),
            category: value.trim().to_string(),
        }),
        other => Err(malformed(line, format!("unknown operator `{other}`"))),
    }
}

fn parse_rule(line: usize, text: &str) -> Result<ParsedRule> {
    let body = text.strip_prefix("If ").ok_or_else(|| malformed(line, "expected `If`"))?;
    let (lhs, rhs) = body
        .rsplit_once(" Then ")
        .ok_or_else(|| malformed(line, "expected `Then`"))?;
    let conds = lhs
        .split(" AND ")
        .map(|c| parse_cond(line, c))
        .collect::<Result<Vec<_>>>()?;
    let rhs = rhs.trim();
    let (label, counts) = match rhs.split_once(' ') {
        None => (rhs.to_string(), None),
        Some((label, rest)) => {
            let inner = rest
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| malformed(line, "counts must be parenthesised"))?;
            let counts = inner
                .split(',')
                .map(|kv| {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| malformed(line, format!("bad count `{kv}`")))?;
                    Ok((k.trim().to_string(), parse_num(line, v)?))
                })
                .collect::<Result<Vec<_>>>()?;
            (label.to_string(), Some(counts))
        }
    };
    Ok(ParsedRule { conds, label, counts })
}

fn parse(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    let mut current: Option<Section> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix("=== ").and_then(|s| s.strip_suffix(" ===")) {
            if name.trim().is_empty() {
                return Err(malformed(line_no, "empty section name"));
            }
            sections.extend(current.take());
            current = Some(Section::default());
            continue;
        }
        let sec = current.get_or_insert_with(Section::default);
        if line.starts_with("If ") {
            if sec.nearest.is_some() || sec.declared_rules.is_some() {
                return Err(malformed(line_no, "rule after the end of a section"));
            }
            sec.rules.push(parse_rule(line_no, line)?);
        } else if let Some(rest) = line.strip_prefix("Otherwise nearest exemplar") {
            let rest = rest.trim();
            let mut scales = Vec::new();
            if let Some(list) = rest.strip_prefix("scaled by") {
                for item in list.split_whitespace() {
                    let (k, v) = item
                        .rsplit_once(':')
                        .ok_or_else(|| malformed(line_no, format!("bad scale `{item}`")))?;
                    scales.push((k.to_string(), parse_num(line_no, v)?));
                }
            } else if !rest.is_empty() {
                return Err(malformed(line_no, "unexpected text after nearest exemplar"));
            }
            sec.nearest = Some(scales);
        } else if let Some(n) = line.strip_prefix("Size of the tree:") {
            n.trim()
                .parse::<usize>()
                .map_err(|_| malformed(line_no, "bad tree size"))?;
        } else if let Some(n) = line.strip_prefix("Number of Rules:") {
            let k = n
                .trim()
                .parse::<usize>()
                .map_err(|_| malformed(line_no, "bad rule count"))?;
            let have = sec.rules.len() + usize::from(sec.nearest.is_some());
            if k != have {
                return Err(malformed(
                    line_no,
                    format!("declares {k} rules but the section has {have}"),
                ));
            }
            sec.declared_rules = Some(k);
        } else {
            return Err(malformed(line_no, format!("unrecognised line `{line}`")));
        }
    }
    sections.extend(current.take());
    if sections.is_empty() || sections.iter().any(|s| s.rules.is_empty() && s.nearest.is_none()) {
        return Err(malformed(0, "no rules"));
    }
    Ok(sections)
}

struct Lookup<'a> {
    schema: &'a AttributeSchema,
    instance: &'a [Value],
}

impl Lookup<'_> {
    fn index(&self, attr: &str) -> Result<usize> {
        self.schema
            .index_of(attr)
            .ok_or_else(|| Error::SchemaMismatch(format!("rule names unknown attribute `{attr}`")))
    }

    fn num(&self, attr: &str) -> Result<f64> {
        self.instance[self.index(attr)?]
            .as_num()
            .ok_or_else(|| Error::SchemaMismatch(format!("`{attr}` is not numeric")))
    }

    fn category(&self, attr: &str) -> Result<&str> {
        let i = self.index(attr)?;
        let c = self.instance[i]
            .as_cat()
            .ok_or_else(|| Error::SchemaMismatch(format!("`{attr}` is not categorical")))?;
        Ok(&self.schema.attribute(i).categories().expect("categorical")[c])
    }

    fn holds(&self, cond: &Cond) -> Result<bool> {
        Ok(match cond {
            Cond::True => true,
            Cond::Cmp { attr, op, value } => {
                let x = self.num(attr)?;
                match op {
                    Op::Le => x <= *value,
                    Op::Lt => x < *value,
                    Op::Gt => x > *value,
                    Op::Ge => x >= *value,
                }
            }
            Cond::Eq { attr, category } => self.category(attr)? == category,
            Cond::Within { attr, lo, hi } => {
                let x = self.num(attr)?;
                *lo <= x && x <= *hi
            }
            Cond::OneOf { attr, categories } => {
                let c = self.category(attr)?;
                categories.iter().any(|k| k == c)
            }
        })
    }

    /// Squared scaled distance from the instance to an exemplar's box.
    fn distance(&self, conds: &[Cond], scales: &[(String, f64)]) -> Result<f64> {
        let mut sum = 0.0;
        for cond in conds {
            match cond {
                Cond::Within { attr, lo, hi } => {
                    let x = self.num(attr)?;
                    let range = scales
                        .iter()
                        .find(|(k, _)| k == attr)
                        .map_or(0.0, |(_, r)| *r);
                    let gap = if x < *lo {
                        *lo - x
                    } else if x > *hi {
                        x - *hi
                    } else {
                        0.0
                    };
                    let g = if range > 0.0 { gap / range } else { 0.0 };
                    sum += g * g;
                }
                other => {
                    if !self.holds(other)? {
                        sum += 1.0;
                    }
                }
            }
        }
        Ok(sum)
    }
}

fn class_of(schema: &AttributeSchema, label: &str) -> Result<usize> {
    schema
        .class_index(label)
        .ok_or_else(|| Error::SchemaMismatch(format!("unknown class label `{label}`")))
}

fn section_distribution(sec: &Section, look: &Lookup<'_>) -> Result<Vec<f64>> {
    let n = look.schema.n_classes();
    let mut fired = None;
    for rule in &sec.rules {
        let mut all = true;
        for c in &rule.conds {
            if !look.holds(c)? {
                all = false;
                break;
            }
        }
        if all {
            fired = Some(rule);
            break;
        }
    }
    if fired.is_none() {
        if let Some(scales) = &sec.nearest {
            let mut best: Option<(f64, &ParsedRule)> = None;
            for rule in &sec.rules {
                let d = look.distance(&rule.conds, scales)?;
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, rule));
                }
            }
            fired = best.map(|(_, r)| r);
        }
    }
    let rule = fired.ok_or_else(|| Error::RuleText {
        line: 0,
        message: "no rule fires and the section has no catch-all".into(),
    })?;
    match &rule.counts {
        Some(counts) => {
            let mut c = vec![0.0; n];
            for (label, v) in counts {
                c[class_of(look.schema, label)?] = *v;
            }
            let total: f64 = c.iter().sum();
            Ok(if total > 0.0 {
                c.iter().map(|v| v / total).collect()
            } else {
                vec![1.0 / n as f64; n]
            })
        }
        None => {
            let mut p = vec![0.0; n];
            p[class_of(look.schema, &rule.label)?] = 1.0;
            Ok(p)
        }
    }
}

fn first_match_label<'r>(sec: &'r Section, look: &Lookup<'_>) -> Result<Option<&'r str>> {
    for rule in &sec.rules {
        let mut all = true;
        for c in &rule.conds {
            if !look.holds(c)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(&rule.label));
        }
    }
    Ok(None)
}

/// Evaluates exported rule text on one instance of `schema`.
pub fn interpret_rules(text: &str, schema: &AttributeSchema, instance: &[Value]) -> Result<String> {
    let sections = parse(text)?;
    if instance.len() != schema.len() {
        return Err(Error::SchemaMismatch(format!(
            "expected {} values, got {}",
            schema.len(),
            instance.len()
        )));
    }
    let look = Lookup { schema, instance };
    if let [sec] = sections.as_slice() {
        if let Some(label) = first_match_label(sec, &look)? {
            class_of(schema, label)?;
            return Ok(label.to_string());
        }
        let p = section_distribution(sec, &look)?;
        return Ok(schema.class_labels()[super::argmax(&p)].clone());
    }
    let mut acc = vec![0.0; schema.n_classes()];
    for sec in &sections {
        for (a, v) in acc.iter_mut().zip(section_distribution(sec, &look)?) {
            *a += v;
        }
    }
    let b = sections.len() as f64;
    let mean: Vec<f64> = acc.into_iter().map(|a| a / b).collect();
    Ok(schema.class_labels()[super::argmax(&mean)].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, Source};

    fn schema() -> AttributeSchema {
        AttributeSchema::with_attributes(vec![
            Attribute::numeric("SummAll", Source::Logs),
            Attribute::numeric("surprise", Source::Emotion),
            Attribute::numeric("AOI3FixCount", Source::Gaze),
            Attribute::categorical("level", Source::Gaze, ["LOW", "MEDIUM", "HIGH"]),
        ])
        .unwrap()
    }

    const TABLE7: &str = "If SummAll > 0.25 Then PASS
If SummAll <= 0.25 AND surprise <= 0.061227 Then FAIL
If surprise > 0.06 AND AOI3FixCount <= 0.04 Then PASS
If true Then FAIL
Number of Rules: 4
";

    fn x(s: f64, su: f64, a: f64, l: usize) -> Vec<Value> {
        vec![Value::Num(s), Value::Num(su), Value::Num(a), Value::Cat(l)]
    }

    #[test]
    fn four_rule_tree_text() {
        let s = schema();
        assert_eq!(interpret_rules(TABLE7, &s, &x(0.3, 0.0, 0.5, 0)).unwrap(), "PASS");
        assert_eq!(interpret_rules(TABLE7, &s, &x(0.1, 0.01, 0.5, 0)).unwrap(), "FAIL");
        assert_eq!(interpret_rules(TABLE7, &s, &x(0.1, 0.2, 0.01, 0)).unwrap(), "PASS");
        assert_eq!(interpret_rules(TABLE7, &s, &x(0.1, 0.2, 0.5, 0)).unwrap(), "FAIL");
    }

    #[test]
    fn comment_lines_are_ignored() {
        let s = schema();
        let t = format!("# fuse 0.1.0 cv_seed=1\n{TABLE7}");
        assert_eq!(interpret_rules(&t, &s, &x(0.3, 0.0, 0.5, 0)).unwrap(), "PASS");
    }

    #[test]
    fn catch_all_only() {
        let s = schema();
        let t = "If true Then FAIL\nNumber of Rules: 1\n";
        assert_eq!(interpret_rules(t, &s, &x(9.0, 9.0, 9.0, 2)).unwrap(), "FAIL");
    }

    #[test]
    fn categorical_and_interval_conditions() {
        let s = schema();
        let t = "If level in {MEDIUM, HIGH} AND SummAll in [0, 0.5] Then PASS\n\
                 If level = LOW Then FAIL\nIf true Then PASS\n";
        assert_eq!(interpret_rules(t, &s, &x(0.2, 0.0, 0.0, 1)).unwrap(), "PASS");
        assert_eq!(interpret_rules(t, &s, &x(0.7, 0.0, 0.0, 0)).unwrap(), "FAIL");
    }

    #[test]
    fn nearest_exemplar_fallback() {
        let s = schema();
        let t = "If SummAll in [0, 0.1] AND level in {LOW} Then FAIL\n\
                 If SummAll in [0.5, 0.9] AND level in {LOW} Then PASS\n\
                 Otherwise nearest exemplar scaled by SummAll:1\nNumber of Rules: 3\n";
        assert_eq!(interpret_rules(t, &s, &x(0.2, 0.0, 0.0, 0)).unwrap(), "FAIL");
        assert_eq!(interpret_rules(t, &s, &x(0.4, 0.0, 0.0, 0)).unwrap(), "PASS");
    }

    #[test]
    fn sections_average_their_distributions() {
        let s = schema();
        let t = "=== a ===\nIf true Then PASS (PASS=9, FAIL=1)\n\
                 === b ===\nIf true Then FAIL (PASS=4, FAIL=6)\n\
                 === c ===\nIf true Then FAIL (PASS=4, FAIL=6)\n";
        // mean PASS = (0.9 + 0.4 + 0.4) / 3 > 0.5
        assert_eq!(interpret_rules(t, &s, &x(0.0, 0.0, 0.0, 0)).unwrap(), "PASS");
        let one_hot = "=== a ===\nIf true Then PASS\n=== b ===\nIf true Then FAIL\n";
        // exact tie goes to the earlier class
        assert_eq!(interpret_rules(one_hot, &s, &x(0.0, 0.0, 0.0, 0)).unwrap(), "PASS");
    }

    #[test]
    fn malformed_text_is_rejected() {
        let s = schema();
        let inst = x(0.0, 0.0, 0.0, 0);
        for bad in [
            "",
            "If SummAll >> 1 Then PASS\n",
            "If SummAll > abc Then PASS\n",
            "When true Then PASS\n",
            "If true Then PASS\nNumber of Rules: 2\n",
            "If true PASS\n",
        ] {
            assert!(
                matches!(interpret_rules(bad, &s, &inst), Err(Error::RuleText { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn rendering_round_trips_thresholds() {
        let s = schema();
        let r = Rule {
            conditions: vec![Condition {
                attr: 0,
                test: Test::Gt(0.1 + 0.2),
            }],
            counts: vec![3.0, 1.0],
        };
        let line = r.render(&s, s.class_labels(), true);
        assert_eq!(line, "If SummAll > 0.30000000000000004 Then PASS (PASS=3, FAIL=1)");
        assert_eq!(interpret_rules(&line, &s, &x(0.31, 0.0, 0.0, 0)).unwrap(), "PASS");
        assert!(interpret_rules(&line, &s, &x(0.3, 0.0, 0.0, 0)).is_err());
    }
}

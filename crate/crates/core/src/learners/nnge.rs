//! Non-nested generalized exemplars.
//!
//! Instances are absorbed one at a time in dataset order. An exemplar is
//! an axis-aligned box (numeric intervals, category sets) over its member
//! instances. A new instance first splits any other-class box that
//! contains it, then extends the nearest same-class box when the extension
//! stays clear of every other class, or else becomes a point exemplar.

use super::rules::{Condition, Rule, Test};
use super::TrainData;
use crate::dataset::{format_num, AttributeSchema, Value};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Bound {
    Num { lo: f64, hi: f64 },
    /// Sorted category indices.
    Cat(Vec<usize>),
}

impl Bound {
    fn point(v: Value) -> Self {
        match v {
            Value::Num(x) => Bound::Num { lo: x, hi: x },
            Value::Cat(c) => Bound::Cat(vec![c]),
        }
    }

    fn contains(&self, v: Value) -> bool {
        match (self, v) {
            (Bound::Num { lo, hi }, Value::Num(x)) => *lo <= x && x <= *hi,
            (Bound::Cat(set), Value::Cat(c)) => set.binary_search(&c).is_ok(),
            _ => false,
        }
    }

    fn extend(&mut self, v: Value) {
        match (self, v) {
            (Bound::Num { lo, hi }, Value::Num(x)) => {
                *lo = lo.min(x);
                *hi = hi.max(x);
            }
            (Bound::Cat(set), Value::Cat(c)) => {
                if let Err(pos) = set.binary_search(&c) {
                    set.insert(pos, c);
                }
            }
            _ => {}
        }
    }

    fn overlaps(&self, other: &Bound) -> bool {
        match (self, other) {
            (Bound::Num { lo, hi }, Bound::Num { lo: l2, hi: h2 }) => lo <= h2 && l2 <= hi,
            (Bound::Cat(a), Bound::Cat(b)) => a.iter().any(|c| b.binary_search(c).is_ok()),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Exemplar {
    pub class: usize,
    pub members: Vec<usize>,
    pub bounds: Vec<Bound>,
}

impl Exemplar {
    fn from_members(data: &TrainData<'_>, class: usize, members: Vec<usize>) -> Self {
        let first = &data.rows[members[0]];
        let mut bounds: Vec<Bound> = first.iter().map(|&v| Bound::point(v)).collect();
        for &m in &members[1..] {
            for (b, &v) in bounds.iter_mut().zip(&data.rows[m]) {
                b.extend(v);
            }
        }
        Exemplar {
            class,
            members,
            bounds,
        }
    }

    pub fn contains(&self, x: &[Value]) -> bool {
        self.bounds.iter().zip(x).all(|(b, &v)| b.contains(v))
    }

    fn overlaps(&self, other: &Exemplar) -> bool {
        self.bounds.iter().zip(&other.bounds).all(|(a, b)| a.overlaps(b))
    }

    fn conditions(&self) -> Vec<Condition> {
        self.bounds
            .iter()
            .enumerate()
            .map(|(attr, b)| Condition {
                attr,
                test: match b {
                    Bound::Num { lo, hi } => Test::Within { lo: *lo, hi: *hi },
                    Bound::Cat(set) => Test::OneOf(set.clone()),
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Exemplars {
    pub list: Vec<Exemplar>,
    /// Training range per attribute; 0 for categorical and constant attributes.
    pub ranges: Vec<f64>,
    n_classes: usize,
}

impl Exemplars {
    /// Squared distance from `x` to the box, attributes in schema order.
    fn distance(&self, e: &Exemplar, x: &[Value]) -> f64 {
        let mut sum = 0.0;
        for ((b, &v), &range) in e.bounds.iter().zip(x).zip(&self.ranges) {
            match (b, v) {
                (Bound::Num { lo, hi }, Value::Num(x)) => {
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
                (b, v) => {
                    if !b.contains(v) {
                        sum += 1.0;
                    }
                }
            }
        }
        sum
    }

    /// First exemplar containing `x`, else the first at minimum distance.
    pub fn nearest(&self, x: &[Value]) -> &Exemplar {
        if let Some(e) = self.list.iter().find(|e| e.contains(x)) {
            return e;
        }
        let mut best: Option<(f64, &Exemplar)> = None;
        for e in &self.list {
            let d = self.distance(e, x);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, e));
            }
        }
        best.expect("at least one exemplar").1
    }

    pub fn to_rules(&self) -> Vec<Rule> {
        self.list
            .iter()
            .map(|e| {
                let mut counts = vec![0.0; self.n_classes];
                counts[e.class] = e.members.len() as f64;
                Rule {
                    conditions: e.conditions(),
                    counts,
                }
            })
            .collect()
    }

    pub fn render(&self, schema: &AttributeSchema) -> String {
        let labels = schema.class_labels();
        let mut out = String::new();
        for rule in self.to_rules() {
            out.push_str(&rule.render(schema, labels, false));
            out.push('\n');
        }
        let scales: Vec<String> = (0..schema.len())
            .filter(|&a| schema.attribute(a).is_numeric())
            .map(|a| format!("{}:{}", schema.attribute(a).name, format_num(self.ranges[a])))
            .collect();
        if scales.is_empty() {
            out.push_str("Otherwise nearest exemplar\n");
        } else {
            out.push_str(&format!("Otherwise nearest exemplar scaled by {}\n", scales.join(" ")));
        }
        out.push_str(&format!("Number of Rules: {}\n", self.list.len() + 1));
        out
    }
}

/// Splits `e` so that no part contains `x`: along the numeric dimension
/// that leaves the larger smaller part, or into one exemplar per distinct point.
fn split(data: &TrainData<'_>, e: &Exemplar, x: &[Value]) -> Vec<Exemplar> {
    let mut best: Option<(usize, Vec<usize>, Vec<usize>)> = None;
    for (a, &xv) in x.iter().enumerate() {
        let Value::Num(xa) = xv else { continue };
        let mut below = Vec::new();
        let mut above = Vec::new();
        let mut clean = true;
        for &m in &e.members {
            match data.rows[m][a] {
                Value::Num(v) if v < xa => below.push(m),
                Value::Num(v) if v > xa => above.push(m),
                _ => {
                    clean = false;
                    break;
                }
            }
        }
        if !clean {
            continue;
        }
        let score = below.len().min(above.len());
        if best.as_ref().is_none_or(|(s, ..)| score > *s) {
            best = Some((score, below, above));
        }
    }
    match best {
        Some((_, below, above)) => [below, above]
            .into_iter()
            .filter(|p| !p.is_empty())
            .map(|p| Exemplar::from_members(data, e.class, p))
            .collect(),
        None => {
            // one exemplar per distinct point, in first-member order
            let mut points: Vec<Vec<usize>> = Vec::new();
            for &m in &e.members {
                match points.iter_mut().find(|p| data.rows[p[0]] == data.rows[m]) {
                    Some(p) => p.push(m),
                    None => points.push(vec![m]),
                }
            }
            points
                .into_iter()
                .map(|p| Exemplar::from_members(data, e.class, p))
                .collect()
        }
    }
}

pub(crate) fn build(data: &TrainData<'_>) -> Exemplars {
    let d = data.schema.len();
    let ranges: Vec<f64> = (0..d)
        .map(|a| {
            let vals: Vec<f64> = data.rows.iter().filter_map(|r| r[a].as_num()).collect();
            if vals.is_empty() {
                return 0.0;
            }
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .collect();
    let mut ex = Exemplars {
        list: Vec::new(),
        ranges,
        n_classes: data.n_classes(),
    };

    for (i, x) in data.rows.iter().enumerate() {
        let class = data.labels[i];

        let mut next = Vec::with_capacity(ex.list.len());
        for e in std::mem::take(&mut ex.list) {
            if e.class != class && e.contains(x) {
                next.extend(split(data, &e, x));
            } else {
                next.push(e);
            }
        }
        ex.list = next;

        let mut nearest: Option<(f64, usize)> = None;
        for (j, e) in ex.list.iter().enumerate() {
            if e.class != class {
                continue;
            }
            let dist = ex.distance(e, x);
            if nearest.is_none_or(|(b, _)| dist < b) {
                nearest = Some((dist, j));
            }
        }
        let extended = nearest.and_then(|(dist, j)| {
            if dist == 0.0 && ex.list[j].contains(x) {
                let mut same = ex.list[j].clone();
                same.members.push(i);
                return Some((j, same));
            }
            let mut grown = ex.list[j].clone();
            for (b, &v) in grown.bounds.iter_mut().zip(x) {
                b.extend(v);
            }
            grown.members.push(i);
            let clear = ex
                .list
                .iter()
                .filter(|o| o.class != class)
                .all(|o| !grown.overlaps(o));
            clear.then_some((j, grown))
        });
        match extended {
            Some((j, grown)) => ex.list[j] = grown,
            None => ex.list.push(Exemplar::from_members(data, class, vec![i])),
        }
    }
    // overlapping or equidistant exemplars resolve toward the larger one
    ex.list.sort_by_key(|e| std::cmp::Reverse(e.members.len()));
    ex
}

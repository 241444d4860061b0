use std::collections::{BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::schema::{AttributeSchema, Source};
use super::table::Dataset;
use crate::error::{Error, Result};

/// Joins single-source tables and the mark table on `id`.
///
/// Rows follow the order of `scores`; attributes follow source order
/// (logs, emotion, gaze) regardless of the order of `parts`.
pub fn join_sources(parts: &[Dataset], scores: &[(String, f64)]) -> Result<Dataset> {
    let mut tagged: Vec<(Source, &Dataset)> = Vec::with_capacity(parts.len());
    for p in parts {
        let sources = p.schema().sources();
        match sources.as_slice() {
            [s] => tagged.push((*s, p)),
            [] => return Err(Error::Dataset("source part without attributes".into())),
            _ => return Err(Error::Dataset("a part mixes several sources".into())),
        }
    }
    tagged.sort_by_key(|(s, _)| *s);
    if tagged.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Dataset("two parts share a source".into()));
    }

    let score_ids: HashSet<&str> = scores.iter().map(|(id, _)| id.as_str()).collect();
    let index_maps: Vec<HashMap<&str, usize>> = tagged
        .iter()
        .map(|(_, p)| p.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect())
        .collect();

    let mut orphans = BTreeSet::new();
    for id in index_maps.iter().flat_map(|m| m.keys()).chain(score_ids.iter()) {
        let everywhere = score_ids.contains(id) && index_maps.iter().all(|m| m.contains_key(id));
        if !everywhere {
            orphans.insert(id.to_string());
        }
    }
    if !orphans.is_empty() {
        return Err(Error::OrphanIds(orphans.into_iter().collect()));
    }

    let class_labels = tagged
        .first()
        .map(|(_, p)| p.schema().class_labels().to_vec())
        .unwrap_or_else(|| AttributeSchema::default_cohort().class_labels().to_vec());
    let attributes = tagged
        .iter()
        .flat_map(|(_, p)| p.schema().attributes().iter().cloned())
        .collect();
    let schema = AttributeSchema::new(attributes, class_labels)?;

    let mut ids = Vec::with_capacity(scores.len());
    let mut rows = Vec::with_capacity(scores.len());
    let mut marks = Vec::with_capacity(scores.len());
    for (id, mark) in scores {
        let mut row = Vec::with_capacity(schema.len());
        for ((_, p), m) in tagged.iter().zip(&index_maps) {
            row.extend_from_slice(p.row(m[id.as_str()]));
        }
        ids.push(id.clone());
        rows.push(row);
        marks.push(*mark);
    }
    Dataset::new(schema, ids, rows, None, Some(marks))
}

/// Original identifier to anonymous token, in row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMap {
    pub pairs: Vec<(String, String)>,
}

impl IdMap {
    pub fn anonymous(&self, original: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(o, _)| o == original)
            .map(|(_, a)| a.as_str())
    }
}

/// Replaces ids with seeded random numeric tokens. Tokens are unique and
/// never contain an original id as a substring.
pub fn anonymize(dataset: &Dataset, seed: u64) -> (Dataset, IdMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let originals: Vec<&str> = dataset.ids().iter().map(String::as_str).collect();
    let mut used = HashSet::new();
    let mut pairs = Vec::with_capacity(originals.len());
    for original in &originals {
        let mut digits = 8u32;
        let mut attempts = 0u32;
        let token = loop {
            let lo = 10u64.pow(digits - 1);
            let candidate = rng.gen_range(lo..lo * 10).to_string();
            let clean = !originals.iter().any(|o| candidate.contains(o));
            if clean && !used.contains(&candidate) {
                break candidate;
            }
            attempts += 1;
            if attempts.is_multiple_of(64) && digits < 18 {
                digits += 1;
            }
            if attempts > 4096 {
                // only reachable when originals cover every digit
                let fallback = format!("anon{}", used.len());
                if !used.contains(&fallback) {
                    break fallback;
                }
            }
        };
        used.insert(token.clone());
        pairs.push((original.to_string(), token));
    }
    let ids = pairs.iter().map(|(_, t)| t.clone()).collect();
    let anon = dataset.with_ids(ids).expect("tokens are unique");
    (anon, IdMap { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, Value};

    fn part(source: Source, name: &str, ids: &[&str]) -> Dataset {
        let schema = AttributeSchema::with_attributes(vec![Attribute::numeric(name, source)]).unwrap();
        Dataset::new(
            schema,
            ids.iter().map(|s| s.to_string()).collect(),
            ids.iter().enumerate().map(|(i, _)| vec![Value::Num(i as f64)]).collect(),
            None,
            None,
        )
        .unwrap()
    }

    fn scores(ids: &[&str]) -> Vec<(String, f64)> {
        ids.iter().map(|s| (s.to_string(), 5.0)).collect()
    }

    #[test]
    fn join_orders_attributes_by_source() {
        let ids = ["a", "b", "c"];
        let g = part(Source::Gaze, "g", &ids);
        let l = part(Source::Logs, "l", &["c", "b", "a"]);
        let e = part(Source::Emotion, "e", &ids);
        let joined = join_sources(&[g.clone(), l.clone(), e.clone()], &scores(&ids)).unwrap();
        let names: Vec<_> = joined.schema().attributes().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["l", "e", "g"]);
        assert_eq!(joined.row(0), &[Value::Num(2.0), Value::Num(0.0), Value::Num(0.0)]);
        let again = join_sources(&[e, g, l], &scores(&ids)).unwrap();
        assert_eq!(joined, again);
    }

    #[test]
    fn single_part_passes_through() {
        let ids = ["a", "b"];
        let joined = join_sources(&[part(Source::Logs, "l", &ids)], &scores(&ids)).unwrap();
        assert_eq!(joined.len(), 2);
        assert_eq!(joined.scores(), Some(&[5.0, 5.0][..]));
    }

    #[test]
    fn orphan_ids_are_listed() {
        let all = ["s05", "s06", "s07"];
        let err = join_sources(
            &[part(Source::Logs, "l", &all), part(Source::Gaze, "g", &["s05", "s06"])],
            &scores(&all),
        )
        .unwrap_err();
        match err {
            Error::OrphanIds(ids) => assert_eq!(ids, vec!["s07".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn anonymize_is_seeded_and_bijective() {
        let names: Vec<String> = (0..40).map(|i| format!("student{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let d = part(Source::Logs, "l", &refs);
        let (a1, m1) = anonymize(&d, 1);
        let (a1b, _) = anonymize(&d, 1);
        let (a2, m2) = anonymize(&d, 2);
        assert_eq!(a1, a1b);
        assert_ne!(a1.ids(), a2.ids());
        for m in [&m1, &m2] {
            let set: HashSet<_> = m.pairs.iter().map(|(_, t)| t).collect();
            assert_eq!(set.len(), 40);
            for (_, t) in &m.pairs {
                assert!(names.iter().all(|n| !t.contains(n.as_str())));
            }
        }
        assert_eq!(a1.rows(), d.rows());
    }
}

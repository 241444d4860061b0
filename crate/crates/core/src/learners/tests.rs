use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataset::{Attribute, Source};

fn numeric_schema(d: usize) -> AttributeSchema {
    let attrs = (0..d)
        .map(|i| Attribute::numeric(format!("a{i}"), Source::Logs))
        .collect();
    AttributeSchema::with_attributes(attrs).unwrap()
}

fn dataset(schema: AttributeSchema, rows: Vec<Vec<Value>>, labels: Vec<usize>) -> Dataset {
    let ids = (0..rows.len()).map(|i| format!("s{i}")).collect();
    Dataset::new(schema, ids, rows, Some(labels), None).unwrap()
}

fn nums(xs: &[f64]) -> Vec<Value> {
    xs.iter().map(|&x| Value::Num(x)).collect()
}

/// x_i = (i + 0.5) / 20, PASS iff x > 0.5.
fn threshold_data() -> Dataset {
    let rows: Vec<Vec<Value>> = (0..20).map(|i| nums(&[(i as f64 + 0.5) / 20.0])).collect();
    let labels = rows
        .iter()
        .map(|r| if r[0].as_num().unwrap() > 0.5 { 0 } else { 1 })
        .collect();
    dataset(numeric_schema(1), rows, labels)
}

/// Mixed numeric/categorical data with a noisy two-attribute signal.
fn random_data(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attrs: Vec<Attribute> = (0..d)
        .map(|i| {
            if i % 3 == 2 {
                Attribute::categorical(format!("c{i}"), Source::Gaze, ["LOW", "MEDIUM", "HIGH"])
            } else {
                Attribute::numeric(format!("a{i}"), Source::Logs)
            }
        })
        .collect();
    let schema = AttributeSchema::with_attributes(attrs).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<Value> = (0..d)
            .map(|i| {
                if i % 3 == 2 {
                    Value::Cat(rng.gen_range(0..3))
                } else {
                    // coarse grid so that ties and duplicates occur
                    Value::Num(f64::from(rng.gen_range(0..20u32)) / 19.0)
                }
            })
            .collect();
        let signal = row[0].as_num().unwrap() + if d > 1 { row[1].as_num().unwrap_or(0.0) } else { 0.0 };
        let noisy = rng.gen_bool(0.15);
        let pass = (signal > 0.8) != noisy;
        labels.push(if pass { 0 } else { 1 });
        rows.push(row);
    }
    dataset(schema, rows, labels)
}

fn random_instance(rng: &mut ChaCha8Rng, schema: &AttributeSchema) -> Vec<Value> {
    schema
        .attributes()
        .iter()
        .map(|a| match a.categories() {
            Some(c) => Value::Cat(rng.gen_range(0..c.len())),
            None => Value::Num(rng.gen_range(-0.2..1.2)),
        })
        .collect()
}

fn training_accuracy(m: &Model, d: &Dataset) -> f64 {
    let labels = d.labels().unwrap();
    let ok = (0..d.len())
        .filter(|&i| m.predict_label(d.row(i)).unwrap() == labels[i])
        .count();
    ok as f64 / d.len() as f64
}

fn all_specs(seed: u64) -> Vec<LearnerSpec> {
    Algorithm::ALL.iter().map(|&a| LearnerSpec::new(a, seed)).collect()
}

#[test]
fn single_class_gives_constant_model() {
    let rows = (0..10).map(|i| nums(&[i as f64])).collect();
    let d = dataset(numeric_schema(1), rows, vec![0; 10]);
    for spec in all_specs(1) {
        let m = train(&spec, &d).unwrap();
        let p = m.predict_distribution(&nums(&[3.5])).unwrap();
        assert_eq!(p.probabilities(), &[1.0, 0.0], "{:?}", spec.algorithm());
        assert_eq!(predict_label(&m, &nums(&[-7.0])).unwrap(), "PASS");
    }
}

#[test]
fn constant_fail_model_says_fail() {
    let rows = (0..6).map(|i| nums(&[i as f64])).collect();
    let d = dataset(numeric_schema(1), rows, vec![1; 6]);
    let m = train(&LearnerSpec::new(Algorithm::C45Tree, 0), &d).unwrap();
    for x in [-1.0, 0.0, 100.0] {
        assert_eq!(predict_label(&m, &nums(&[x])).unwrap(), "FAIL");
    }
}

#[test]
fn empty_dataset_is_rejected() {
    let d = dataset(numeric_schema(1), Vec::new(), Vec::new());
    assert!(matches!(
        train(&LearnerSpec::new(Algorithm::C45Tree, 0), &d),
        Err(Error::EmptyDataset)
    ));
}

#[test]
fn c45_finds_the_threshold() {
    let d = threshold_data();
    let m = train(&LearnerSpec::new(Algorithm::C45Tree, 0), &d).unwrap();
    let Structure::Tree(tree::Node::Internal { split, .. }) = &m.structure else {
        panic!("expected a split at the root");
    };
    let tree::Split::Threshold { attr: 0, value } = split else {
        panic!("expected a threshold on x");
    };
    assert!(*value > 0.4 && *value <= 0.5, "theta = {value}");
    assert_eq!(training_accuracy(&m, &d), 1.0);
    assert_eq!(m.rules().len(), 2);
}

#[test]
fn aligned_attribute_wins_the_root() {
    // A is perfectly class-aligned, B is seeded noise
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30 {
        let pass = i % 2 == 0;
        let a = if pass { 0.6 + 0.01 * i as f64 } else { 0.01 * i as f64 };
        rows.push(nums(&[a, rng.gen::<f64>()]));
        labels.push(usize::from(!pass));
    }
    let d = dataset(numeric_schema(2), rows, labels);
    for alg in [Algorithm::C45Tree, Algorithm::RepTree] {
        let m = train(&LearnerSpec::new(alg, 5), &d).unwrap();
        match &m.structure {
            Structure::Tree(tree::Node::Internal { split, .. }) => {
                assert!(matches!(split, tree::Split::Threshold { attr: 0, .. }), "{alg}")
            }
            other => panic!("{alg}: {other:?}"),
        }
    }
}

#[test]
fn leaf_distribution_is_relative_frequency() {
    let node = tree::Node::Leaf {
        counts: vec![3.0, 1.0],
    };
    let m = Model {
        spec: LearnerSpec::new(Algorithm::C45Tree, 0),
        schema: numeric_schema(1),
        structure: Structure::Tree(node),
    };
    let p = m.predict_distribution(&nums(&[0.0])).unwrap();
    assert_eq!(p.probabilities(), &[0.75, 0.25]);
}

fn leaf_model(schema: &AttributeSchema, pass: f64, fail: f64) -> Model {
    Model {
        spec: LearnerSpec::new(Algorithm::C45Tree, 0),
        schema: schema.clone(),
        structure: Structure::Tree(tree::Node::Leaf {
            counts: vec![pass, fail],
        }),
    }
}

fn member(name: &str, columns: Vec<usize>, model: Model) -> VoteMember {
    VoteMember {
        name: name.into(),
        columns,
        model,
    }
}

#[test]
fn vote_is_the_mean_of_its_bases() {
    let s = numeric_schema(1);
    let vote = VoteModel::new(
        s.clone(),
        vec![
            member("logs", vec![0], leaf_model(&s, 8.0, 2.0)),
            member("emotion", vec![0], leaf_model(&s, 6.0, 4.0)),
            member("gaze", vec![0], leaf_model(&s, 4.0, 6.0)),
        ],
    )
    .unwrap();
    let p = vote.predict_distribution(&nums(&[0.0])).unwrap();
    assert!((p.probability(0) - 0.6).abs() < 1e-12);
    assert!((p.probability(1) - 0.4).abs() < 1e-12);
    assert_eq!(predict_label(&vote, &nums(&[0.0])).unwrap(), "PASS");
}

#[test]
fn vote_of_one_is_the_base() {
    let d = random_data(3, 40, 4);
    let base = train(&LearnerSpec::new(Algorithm::RepTree, 3), &d).unwrap();
    let vote = VoteModel::new(
        d.schema().clone(),
        vec![member("all", (0..4).collect(), base.clone())],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let x = random_instance(&mut rng, d.schema());
        assert_eq!(
            vote.predict_distribution(&x).unwrap(),
            base.predict_distribution(&x).unwrap()
        );
    }
}

#[test]
fn exact_tie_goes_to_pass() {
    assert_eq!(ClassDistribution(vec![0.5, 0.5]).argmax(), 0);
    assert_eq!(ClassDistribution(vec![0.6, 0.4]).argmax(), 0);
    let s = numeric_schema(1);
    let m = leaf_model(&s, 2.0, 2.0);
    assert_eq!(predict_label(&m, &nums(&[1.0])).unwrap(), "PASS");
}

#[test]
fn single_leaf_exports_one_rule() {
    let s = numeric_schema(1);
    let text = leaf_model(&s, 5.0, 0.0).export_rules();
    assert_eq!(
        text.as_str(),
        "If true Then PASS (PASS=5, FAIL=0)\nSize of the tree: 1\nNumber of Rules: 1\n"
    );
    assert_eq!(text.rule_count(), 1);
}

#[test]
fn stump_exports_two_rules() {
    let d = threshold_data();
    let m = train(&LearnerSpec::new(Algorithm::C45Tree, 0), &d).unwrap();
    let text = m.export_rules();
    let lines: Vec<&str> = text.as_str().lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[0].starts_with("If a0 <= 0.5 Then FAIL (PASS=0, FAIL=10)"), "{text}");
    assert!(lines[1].starts_with("If a0 > 0.5 Then PASS (PASS=10, FAIL=0)"), "{text}");
    assert_eq!(lines[2], "Size of the tree: 3");
    assert_eq!(lines[3], "Number of Rules: 2");
}

#[test]
fn vote_of_three_stumps_has_three_sections() {
    let d = threshold_data();
    let m = train(&LearnerSpec::new(Algorithm::C45Tree, 0), &d).unwrap();
    let s = d.schema().clone();
    let vote = VoteModel::new(
        s,
        ["logs", "emotion", "gaze"]
            .iter()
            .map(|n| member(n, vec![0], m.clone()))
            .collect(),
    )
    .unwrap();
    let text = vote.export_rules();
    assert_eq!(text.as_str().matches("=== ").count(), 3);
    assert_eq!(text.as_str().matches("Size of the tree: 3").count(), 3);
    assert_eq!(text.as_str().matches("Number of Rules: 2").count(), 3);
    assert_eq!(text.rule_count(), 6);
}

#[test]
fn vote_rejects_mismatched_members() {
    let s = numeric_schema(2);
    let m = leaf_model(&numeric_schema(1), 1.0, 1.0);
    assert!(VoteModel::new(s.clone(), Vec::new()).is_err());
    assert!(VoteModel::new(s.clone(), vec![member("x", vec![5], m.clone())]).is_err());
    assert!(VoteModel::new(s, vec![member("x", vec![0, 1], m)]).is_err());
}

#[test]
fn prediction_checks_the_schema() {
    let d = threshold_data();
    let m = train(&LearnerSpec::new(Algorithm::Nnge, 0), &d).unwrap();
    assert!(m.predict_distribution(&nums(&[0.1, 0.2])).is_err());
    assert!(m.predict_distribution(&[Value::Cat(0)]).is_err());
}

#[test]
fn unpruned_learners_fit_consistent_data() {
    for seed in 0..5 {
        let d = random_data(seed, 60, 5);
        // drop conflicting duplicates so the data is consistent
        let mut keep = Vec::new();
        for i in 0..d.len() {
            let clash = (0..d.len()).any(|j| d.row(j) == d.row(i) && d.labels().unwrap()[j] != d.labels().unwrap()[i]);
            if !clash {
                keep.push(i);
            }
        }
        let d = d.subset(&keep);
        let specs = [
            LearnerSpec::C45Tree(C45Params::unpruned()),
            LearnerSpec::new(Algorithm::RandomTree, seed),
            LearnerSpec::new(Algorithm::Nnge, seed),
        ];
        for spec in specs {
            let m = train(&spec, &d).unwrap();
            assert_eq!(training_accuracy(&m, &d), 1.0, "{:?} seed {seed}", spec.algorithm());
        }
    }
}

#[test]
fn pruned_learners_beat_the_majority_on_training_data() {
    for seed in 0..5 {
        let d = random_data(seed, 50, 4);
        let counts = d.class_counts();
        let majority = counts.iter().cloned().fold(0.0, f64::max) / d.len() as f64;
        for spec in [
            LearnerSpec::new(Algorithm::C45Tree, seed),
            LearnerSpec::new(Algorithm::PartRules, seed),
        ] {
            let m = train(&spec, &d).unwrap();
            assert!(training_accuracy(&m, &d) >= majority, "{:?} seed {seed}", spec.algorithm());
        }
    }
}

#[test]
fn ripper_learns_the_threshold() {
    let d = threshold_data();
    let m = train(&LearnerSpec::new(Algorithm::Ripper, 1), &d).unwrap();
    assert!(training_accuracy(&m, &d) >= 0.9, "{}", m.export_rules());
    assert!(m.rules().last().unwrap().conditions.is_empty());
}

#[test]
fn part_learns_the_threshold() {
    let d = threshold_data();
    let m = train(&LearnerSpec::new(Algorithm::PartRules, 0), &d).unwrap();
    assert_eq!(training_accuracy(&m, &d), 1.0, "{}", m.export_rules());
    assert!(m.rules().last().unwrap().conditions.is_empty());
}

#[test]
fn invalid_hyperparameters_are_config_errors() {
    let d = threshold_data();
    let bad = LearnerSpec::C45Tree(C45Params {
        confidence: 0.9,
        ..C45Params::default()
    });
    assert!(train(&bad, &d).unwrap_err().is_config_error());
}

#[test]
fn algorithm_names_parse() {
    for a in Algorithm::ALL {
        assert_eq!(a.id().parse::<Algorithm>().unwrap(), a);
        assert_eq!(a.display_name().parse::<Algorithm>().unwrap(), a);
    }
    assert_eq!("J48".parse::<Algorithm>().unwrap(), Algorithm::C45Tree);
    assert!("svm".parse::<Algorithm>().is_err());
}

fn assert_fidelity(m: &impl Classifier, rng: &mut ChaCha8Rng, n: usize) {
    let text = m.export_rules();
    for _ in 0..n {
        let x = random_instance(rng, m.schema());
        let expected = predict_label(m, &x).unwrap();
        let got = interpret_rules(text.as_str(), m.schema(), &x).unwrap();
        assert_eq!(got, expected, "instance {x:?}\n{text}");
    }
}

#[test]
fn exported_rules_reproduce_predictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..4 {
        let d = random_data(seed, 45, 6);
        let mut models = Vec::new();
        for spec in all_specs(seed) {
            let m = train(&spec, &d).unwrap();
            assert_fidelity(&m, &mut rng, 200);
            models.push(m);
        }
        let sources = [(Source::Logs, vec![0, 1]), (Source::Emotion, vec![2, 3]), (Source::Gaze, vec![4, 5])];
        for alg in Algorithm::ALL {
            let members = sources
                .iter()
                .map(|(src, cols)| {
                    let part = d.with_rows(d.schema().project(cols).unwrap(), d.rows().iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()).unwrap();
                    member(src.as_str(), cols.clone(), train(&LearnerSpec::new(alg, seed), &part).unwrap())
                })
                .collect();
            let vote = VoteModel::new(d.schema().clone(), members).unwrap();
            assert_fidelity(&vote, &mut rng, 200);
        }
    }
}

#[test]
fn training_is_deterministic() {
    let d = random_data(8, 50, 6);
    for spec in all_specs(4) {
        let a = train(&spec, &d).unwrap();
        let b = train(&spec, &d).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.export_rules(), b.export_rules());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distributions_are_valid_and_rules_faithful(seed in 0u64..10_000, n in 2usize..80, d in 1usize..8) {
        let data = random_data(seed, n, d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for spec in all_specs(seed) {
            let m = train(&spec, &data).unwrap();
            let text = m.export_rules();
            for _ in 0..20 {
                let x = random_instance(&mut rng, data.schema());
                let p = m.predict_distribution(&x).unwrap();
                let sum: f64 = p.probabilities().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
                prop_assert!(p.probabilities().iter().all(|&v| v >= 0.0));
                let label = predict_label(&m, &x).unwrap();
                prop_assert_eq!(interpret_rules(text.as_str(), data.schema(), &x).unwrap(), label);
            }
        }
    }

    #[test]
    fn vote_is_componentwise_mean(a in 0.0f64..10.0, b in 0.0f64..10.0, c in 0.0f64..10.0, e in 0.0f64..10.0) {
        let s = numeric_schema(1);
        let m1 = leaf_model(&s, a + 0.1, b);
        let m2 = leaf_model(&s, c, e + 0.1);
        let x = nums(&[0.0]);
        let p1 = m1.predict_distribution(&x).unwrap();
        let p2 = m2.predict_distribution(&x).unwrap();
        let vote = VoteModel::new(s.clone(), vec![member("l", vec![0], m1), member("g", vec![0], m2)]).unwrap();
        let p = vote.predict_distribution(&x).unwrap();
        for k in 0..2 {
            prop_assert_eq!(p.probability(k), (p1.probability(k) + p2.probability(k)) / 2.0);
        }
    }
}

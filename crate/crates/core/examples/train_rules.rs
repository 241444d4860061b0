//! Train each algorithm on the normalized cohort and print its rules,
//! then check a few instances against the rule interpreter.

use edufuse::harness::{generate_synthetic, GenParams};
use edufuse::learners::{export_rules, interpret_rules, predict_label, train, Algorithm, LearnerSpec};
use edufuse::preprocess::{label_from_scores, min_max_normalize, ClassCutoffs};

fn main() -> edufuse::error::Result<()> {
    let raw = generate_synthetic(&GenParams::default(), 2)?;
    let (data, _) = min_max_normalize(&label_from_scores(&raw, &ClassCutoffs::default())?)?;

    for alg in Algorithm::ALL {
        let model = train(&LearnerSpec::new(alg, 1), &data)?;
        let rules = export_rules(&model);
        println!("--- {} ({} rules)\n{rules}", alg.display_name(), rules.rule_count());
        for i in 0..3 {
            let x = data.row(i);
            assert_eq!(interpret_rules(rules.as_str(), data.schema(), x)?, predict_label(&model, x)?);
        }
    }
    Ok(())
}

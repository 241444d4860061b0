//! One model per source, combined by averaging their class distributions.

use edufuse::harness::{generate_synthetic, GenParams};
use edufuse::learners::{train, Algorithm, Classifier, LearnerSpec, VoteMember, VoteModel};
use edufuse::preprocess::{label_from_scores, min_max_normalize, project, ClassCutoffs};

fn main() -> edufuse::error::Result<()> {
    let raw = generate_synthetic(&GenParams::default(), 4)?;
    let (data, _) = min_max_normalize(&label_from_scores(&raw, &ClassCutoffs::default())?)?;
    let schema = data.schema();

    let mut members = Vec::new();
    for source in schema.sources() {
        let columns = schema.source_indices(source);
        let model = train(&LearnerSpec::new(Algorithm::RepTree, 1), &project(&data, &columns)?)?;
        members.push(VoteMember {
            name: source.as_str().into(),
            columns,
            model,
        });
    }
    let vote = VoteModel::new(schema.clone(), members)?;
    print!("{}", vote.export_rules());

    let x = data.row(0);
    for m in vote.members() {
        let own: Vec<_> = m.columns.iter().map(|&c| x[c]).collect();
        println!("{:>8}: {:?}", m.name, m.model.predict_distribution(&own)?.probabilities());
    }
    println!("    vote: {:?}", vote.predict_distribution(x)?.probabilities());
    Ok(())
}

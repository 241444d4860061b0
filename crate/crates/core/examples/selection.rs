//! CFS on the merged cohort and within each source.

use edufuse::harness::{generate_synthetic, GenParams};
use edufuse::preprocess::{label_from_scores, min_max_normalize, ClassCutoffs};
use edufuse::selection::{select_best_first, select_exhaustive, select_per_source, CfsEvaluator};

fn main() -> edufuse::error::Result<()> {
    let raw = generate_synthetic(&GenParams::default(), 1)?;
    let (data, _) = min_max_normalize(&label_from_scores(&raw, &ClassCutoffs::default())?)?;
    let schema = data.schema();

    let eval = CfsEvaluator::new(&data)?;
    println!("symmetric uncertainty with the class:");
    for (a, su) in eval.class_correlations().iter().enumerate() {
        println!("  {:<16} {su:.4}", schema.attribute(a).name);
    }

    let bf = select_best_first(&data)?;
    println!(
        "best-first: {:?} merit {:.4} ({} subsets evaluated)",
        bf.names(schema),
        bf.merit,
        bf.trace.len()
    );
    let ex = select_exhaustive(&data)?;
    println!("exhaustive: {:?} merit {:.4}", ex.names(schema), ex.merit);

    for (source, fs) in select_per_source(&data)? {
        println!("{source:>8}: {:?} merit {:.4}", fs.names(schema), fs.merit);
    }
    Ok(())
}

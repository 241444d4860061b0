//! Normalize a synthetic cohort, bin it into LOW/MEDIUM/HIGH, and label the marks.

use edufuse::harness::{generate_synthetic, GenParams};
use edufuse::preprocess::{equal_width_discretize, label_from_scores, min_max_normalize, ClassCutoffs};

fn main() -> edufuse::error::Result<()> {
    let raw = generate_synthetic(&GenParams::default(), 1)?;
    let labeled = label_from_scores(&raw, &ClassCutoffs::pass_fail(5.0)?)?;
    let (norm, params) = min_max_normalize(&labeled)?;
    let (disc, _) = equal_width_discretize(&norm, 3)?;

    let schema = labeled.schema();
    println!("{:<16} {:>8} {:>8} {:>10} {:>8}", "attribute", "min", "max", "first", "bin");
    for a in 0..schema.len() {
        let r = &params.ranges[a];
        let bin = disc.row(0)[a].as_cat().unwrap();
        println!(
            "{:<16} {:>8} {:>8} {:>10.4} {:>8}",
            schema.attribute(a).name,
            r.min,
            r.max,
            norm.row(0)[a].as_num().unwrap(),
            disc.schema().attribute(a).categories().unwrap()[bin]
        );
    }
    let counts = labeled.class_counts();
    println!("classes {:?} = {:?}", schema.class_labels(), counts);
    Ok(())
}

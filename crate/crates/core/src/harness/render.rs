//! Report tables, rule dumps and the JSON bundle.
//!
//! Every text and CSV file opens with a `# fuse ...` provenance line; the
//! JSON bundle carries the same data in its `provenance` object.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::OutputFormat;
use super::pipeline::{ReportBundle, SelectionReport};
use crate::dataset::{write_dataset_csv, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{mean, Mode, Representation};
use crate::learners::Algorithm;

/// A rectangular table with a title, rendered as aligned text or CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_text(&self) -> String {
        let n = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * n.saturating_sub(1));
        let mut out = format!("{}\n{}\n{}\n", self.title, line(&self.header), rule);
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    fn write_csv(&self, w: &mut csv::Writer<Vec<u8>>) -> Result<()> {
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(())
    }
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn auc(v: f64) -> String {
    format!("{v:.3}")
}

fn rep_title(r: Representation) -> &'static str {
    match r {
        Representation::Numerical => "NUMERICAL",
        Representation::Discretized => "DISCRETIZED",
    }
}

fn mode_title(m: Mode) -> &'static str {
    match m {
        Mode::MergeAll => "Merge all attributes",
        Mode::SelectMerged => "Select best attributes (CFS on merged data)",
        Mode::EnsemblePerSource => "Ensemble of per-source models (Vote)",
    }
}

fn modes_of(bundle: &ReportBundle) -> Vec<Mode> {
    let mut v: Vec<Mode> = bundle.reports.iter().map(|r| r.cell.mode).collect();
    v.sort();
    v.dedup();
    v
}

fn reps_of(bundle: &ReportBundle) -> Vec<Representation> {
    let mut v: Vec<Representation> = bundle.reports.iter().map(|r| r.cell.representation).collect();
    v.sort();
    v.dedup();
    v
}

fn algorithms_of(bundle: &ReportBundle) -> Vec<Algorithm> {
    let mut v: Vec<Algorithm> = bundle.reports.iter().map(|r| r.cell.algorithm).collect();
    v.sort();
    v.dedup();
    v
}

/// One table per mode: algorithm rows, accuracy/AUC column pairs per
/// representation, and an `Avg.` row of column means.
pub fn results_tables(bundle: &ReportBundle) -> Vec<Table> {
    let reps = reps_of(bundle);
    let mut header = vec!["Algorithm".to_string()];
    for r in &reps {
        header.push(format!("{} Acc.%", rep_title(*r)));
        header.push(format!("{} AUC", rep_title(*r)));
    }
    modes_of(bundle)
        .into_iter()
        .map(|mode| {
            let mut rows = Vec::new();
            let mut columns: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); reps.len()];
            for alg in algorithms_of(bundle) {
                let mut row = vec![alg.display_name().to_string()];
                for (i, &representation) in reps.iter().enumerate() {
                    let cell = crate::evaluation::CellId {
                        mode,
                        representation,
                        algorithm: alg,
                    };
                    match bundle.report(cell) {
                        Some(r) => {
                            columns[i].0.push(r.accuracy_pct);
                            columns[i].1.push(r.auc);
                            row.push(pct(r.accuracy_pct));
                            row.push(auc(r.auc));
                        }
                        None => row.extend(["-".to_string(), "-".to_string()]),
                    }
                }
                rows.push(row);
            }
            let mut avg = vec!["Avg.".to_string()];
            for (a, u) in &columns {
                avg.push(mean(a.iter().copied()).map_or("-".into(), pct));
                avg.push(mean(u.iter().copied()).map_or("-".into(), auc));
            }
            rows.push(avg);
            Table {
                title: format!("{} [{}]", mode_title(mode), mode.id()),
                header: header.clone(),
                rows,
            }
        })
        .collect()
}

/// Datasets, selected-attribute counts and names.
pub fn selection_table(selections: &[SelectionReport]) -> Table {
    Table {
        title: "Selected attributes".into(),
        header: ["Mode", "Representation", "Dataset", "#Selected", "Attributes", "Merit"]
            .map(String::from)
            .to_vec(),
        rows: selections
            .iter()
            .map(|s| {
                vec![
                    s.mode.id().to_string(),
                    s.representation.id().to_string(),
                    s.dataset.clone(),
                    format!("{}/{}", s.selected.len(), s.n_candidates),
                    s.selected.join(" "),
                    format!("{:.4}", s.merit),
                ]
            })
            .collect(),
    }
}

/// Mean accuracy and AUC per mode and representation, plus the mode average.
pub fn summary_table(bundle: &ReportBundle) -> Table {
    let reps = reps_of(bundle);
    let mut header = vec!["Approach".to_string()];
    for r in &reps {
        header.push(format!("{} Acc.%", rep_title(*r)));
        header.push(format!("{} AUC", rep_title(*r)));
    }
    header.push("Avg. Acc.%".into());
    let mut rows = Vec::new();
    for mode in modes_of(bundle) {
        let mut row = vec![mode.id().to_string()];
        for &r in &reps {
            match bundle.summary.get(mode, r) {
                Some(s) => {
                    row.push(pct(s.mean_accuracy));
                    row.push(auc(s.mean_auc));
                }
                None => row.extend(["-".to_string(), "-".to_string()]),
            }
        }
        row.push(bundle.summary.mode_accuracy(mode).map_or("-".into(), pct));
        rows.push(row);
    }
    let mut avg = vec!["Avg.".to_string()];
    for &r in &reps {
        let cells: Vec<_> = bundle.summary.rows.iter().filter(|s| s.representation == r).collect();
        avg.push(mean(cells.iter().map(|s| s.mean_accuracy)).map_or("-".into(), pct));
        avg.push(mean(cells.iter().map(|s| s.mean_auc)).map_or("-".into(), auc));
    }
    avg.push(mean(bundle.summary.rows.iter().map(|s| s.mean_accuracy)).map_or("-".into(), pct));
    rows.push(avg);
    Table {
        title: "Summary (mean over algorithms)".into(),
        header,
        rows,
    }
}

fn heterogeneous_table(bundle: &ReportBundle) -> Option<Table> {
    if bundle.heterogeneous.is_empty() {
        return None;
    }
    Some(Table {
        title: "Vote across algorithms and sources".into(),
        header: ["Representation", "Algorithms", "Acc.%", "AUC"].map(String::from).to_vec(),
        rows: bundle
            .heterogeneous
            .iter()
            .map(|h| {
                let names: Vec<&str> = h.algorithms.iter().map(|a| a.id()).collect();
                vec![
                    h.representation.id().to_string(),
                    names.join(" "),
                    pct(h.accuracy_pct),
                    auc(h.auc),
                ]
            })
            .collect(),
    })
}

/// Rule dump of a mode's best model, with its cell and scores as comments.
pub fn rules_text(bundle: &ReportBundle, mode: Mode) -> Option<String> {
    let best = bundle.best.iter().find(|b| b.cell.mode == mode)?;
    Some(format!(
        "# {}\n# best {} accuracy={} auc={}\n{}",
        bundle.provenance.header(),
        best.cell,
        pct(best.accuracy_pct),
        auc(best.auc),
        best.rules
    ))
}

fn write(dir: &Path, name: &str, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn text_file(header: &str, tables: &[Table]) -> String {
    let body: Vec<String> = tables.iter().map(Table::to_text).collect();
    format!("# {header}\n\n{}", body.join("\n"))
}

fn csv_file(header: &str, tables: &[Table], with_title: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for t in tables {
        if with_title {
            w.write_record([format!("# {}", t.title)])?;
        }
        t.write_csv(&mut w)?;
    }
    let body = w.into_inner().map_err(|e| Error::Dataset(e.to_string()))?;
    let mut out = format!("# {header}\n").into_bytes();
    out.extend(body);
    Ok(out)
}

/// Writes every requested format into `dir`; returns the paths written.
pub fn render_tables(bundle: &ReportBundle, formats: &[OutputFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = bundle.provenance.header();
    let mut results = results_tables(bundle);
    results.extend(heterogeneous_table(bundle));
    let selection = [selection_table(&bundle.selections)];
    let summary = [summary_table(bundle)];
    let mut written = Vec::new();
    for &f in formats {
        match f {
            OutputFormat::Text => {
                write(dir, "results.txt", text_file(&header, &results).as_bytes(), &mut written)?;
                write(dir, "selection.txt", text_file(&header, &selection).as_bytes(), &mut written)?;
                write(dir, "summary.txt", text_file(&header, &summary).as_bytes(), &mut written)?;
                for mode in modes_of(bundle) {
                    if let Some(t) = rules_text(bundle, mode) {
                        write(dir, &format!("rules_{}.txt", mode.id()), t.as_bytes(), &mut written)?;
                    }
                }
            }
            OutputFormat::Csv => {
                write(dir, "results.csv", &csv_file(&header, &results, true)?, &mut written)?;
                write(dir, "selection.csv", &csv_file(&header, &selection, false)?, &mut written)?;
                write(dir, "summary.csv", &csv_file(&header, &summary, false)?, &mut written)?;
            }
            OutputFormat::Json => {
                let mut json = serde_json::to_string_pretty(bundle)?;
                json.push('\n');
                write(dir, "bundle.json", json.as_bytes(), &mut written)?;
            }
        }
    }
    Ok(written)
}

/// Writes the labeled, anonymized cohort as `cohort.csv`.
pub fn write_cohort_csv(bundle: &ReportBundle, cohort: &Dataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("cohort.csv");
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_dataset_csv(cohort, std::io::BufWriter::new(f), Some(&bundle.provenance.header()))?;
    Ok(path)
}

/// Reloads a bundle written by [`render_tables`].
pub fn read_bundle(path: &Path) -> Result<ReportBundle> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_pipeline, ExperimentConfig};

    fn bundle() -> ReportBundle {
        run_pipeline(&ExperimentConfig::parse("modes = merge_all, ensemble_per_source").unwrap()).unwrap()
    }

    #[test]
    fn merge_all_table_has_six_rows_and_avg() {
        let b = bundle();
        let t = &results_tables(&b)[0];
        assert_eq!(t.rows.len(), 7);
        assert_eq!(t.rows[6][0], "Avg.");
        assert_eq!(t.header.len(), 5);
    }

    #[test]
    fn avg_row_matches_column_means() {
        let b = bundle();
        for t in results_tables(&b) {
            let (body, avg) = t.rows.split_at(t.rows.len() - 1);
            for col in 1..t.header.len() {
                let vals: Vec<f64> = body.iter().map(|r| r[col].parse().unwrap()).collect();
                let printed: f64 = avg[0][col].parse().unwrap();
                // values are themselves rounded, so allow one unit of the last printed digit
                let m = mean(vals.iter().copied()).unwrap();
                assert!((printed - m).abs() <= 0.0051, "{} col {col}: {printed} vs {m}", t.title);
            }
        }
    }

    #[test]
    fn every_file_has_provenance_and_json_round_trips() {
        let b = bundle();
        let dir = tempfile::tempdir().unwrap();
        let files = render_tables(&b, &[OutputFormat::Text, OutputFormat::Csv, OutputFormat::Json], dir.path()).unwrap();
        assert_eq!(files.len(), 3 + 2 + 3 + 1);
        for f in &files {
            let text = fs::read_to_string(f).unwrap();
            if f.extension().unwrap() == "json" {
                assert_eq!(read_bundle(f).unwrap(), b);
            } else {
                assert!(text.starts_with("# fuse "), "{}", f.display());
                assert!(text.lines().next().unwrap().contains("cv_seed=1"));
            }
        }
    }
}

//! CSV interchange: UTF-8, comma-delimited, `.` decimal separator, header row.
//!
//! Per-source files carry an `id` column plus that source's attributes;
//! `scores.csv` carries `id,score`. Full datasets are written as
//! `id,<attributes...>[,class][,score]`. Lines starting with `#` are
//! provenance comments and are skipped on read.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::schema::{Attribute, AttributeKind, AttributeSchema, Source};
use super::table::{Dataset, Value};
use crate::error::{Error, Result};

pub const ID_COLUMN: &str = "id";
pub const SCORE_COLUMN: &str = "score";
pub const CLASS_COLUMN: &str = "class";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Impute empty or `?` cells with the column mean (numeric) or mode
    /// (categorical) instead of rejecting them.
    pub allow_missing: bool,
}

/// Shortest text that parses back to the identical `f64`.
pub fn format_num(v: f64) -> String {
    format!("{v}")
}

fn reader_for<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Maps header names to column positions, rejecting duplicates, unknown
/// columns and absent required ones.
fn header_map(
    label: &str,
    headers: &csv::StringRecord,
    required: &[&str],
    optional: &[&str],
) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if map.insert(h.to_string(), i).is_some() {
            return Err(Error::Header {
                path: label.to_string(),
                message: format!("duplicate header `{h}`"),
            });
        }
        if !required.contains(&h) && !optional.contains(&h) {
            return Err(Error::Header {
                path: label.to_string(),
                message: format!("unknown column `{h}`"),
            });
        }
    }
    let mut absent: Vec<&str> = required
        .iter()
        .copied()
        .filter(|r| !map.contains_key(*r))
        .collect();
    if !absent.is_empty() {
        absent.sort_unstable();
        return Err(Error::Header {
            path: label.to_string(),
            message: format!("missing header(s) {}", absent.join(", ")),
        });
    }
    Ok(map)
}

fn parse_cell(label: &str, row: usize, attr: &Attribute, cell: &str) -> Result<Value> {
    let err = || Error::Cell {
        path: label.to_string(),
        row,
        column: attr.name.clone(),
        value: cell.to_string(),
    };
    match &attr.kind {
        AttributeKind::Numeric => {
            let v: f64 = cell.parse().map_err(|_| err())?;
            if v.is_finite() {
                Ok(Value::Num(v))
            } else {
                Err(err())
            }
        }
        AttributeKind::Categorical(_) => attr.category_index(cell).map(Value::Cat).ok_or_else(err),
    }
}

fn impute(attr: &Attribute, column: &[Option<Value>]) -> Value {
    match &attr.kind {
        AttributeKind::Numeric => {
            let known: Vec<f64> = column.iter().flatten().filter_map(|v| v.as_num()).collect();
            if known.is_empty() {
                Value::Num(0.0)
            } else {
                Value::Num(known.iter().sum::<f64>() / known.len() as f64)
            }
        }
        AttributeKind::Categorical(cats) => {
            let mut counts = vec![0usize; cats.len()];
            for c in column.iter().flatten().filter_map(|v| v.as_cat()) {
                counts[c] += 1;
            }
            // first category wins ties
            let best = (0..cats.len()).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
            Value::Cat(best)
        }
    }
}

/// Reads one source's attribute table from any reader. `label` names the
/// input in error messages.
pub fn read_source_csv<R: Read>(
    reader: R,
    label: &str,
    source: Source,
    fragment: &[Attribute],
    options: CsvOptions,
) -> Result<Dataset> {
    if let Some(a) = fragment.iter().find(|a| a.source != source) {
        return Err(Error::Schema(format!(
            "attribute `{}` belongs to {} not {source}",
            a.name, a.source
        )));
    }
    let schema = AttributeSchema::with_attributes(fragment.to_vec())?;
    let mut rdr = reader_for(reader);
    let headers = rdr.headers()?.clone();
    let mut required = vec![ID_COLUMN];
    required.extend(fragment.iter().map(|a| a.name.as_str()));
    let map = header_map(label, &headers, &required, &[])?;

    let mut ids = Vec::new();
    let mut cells: Vec<Vec<Option<Value>>> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        ids.push(record.get(map[ID_COLUMN]).unwrap_or("").to_string());
        let mut row = Vec::with_capacity(fragment.len());
        for attr in fragment {
            let cell = record.get(map[attr.name.as_str()]).unwrap_or("");
            if is_missing(cell) {
                if !options.allow_missing {
                    return Err(Error::Missing {
                        path: label.to_string(),
                        row: row_no,
                        column: attr.name.clone(),
                    });
                }
                row.push(None);
            } else {
                row.push(Some(parse_cell(label, row_no, attr, cell)?));
            }
        }
        cells.push(row);
    }
    let fills: Vec<Value> = fragment
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let col: Vec<Option<Value>> = cells.iter().map(|r| r[j]).collect();
            impute(a, &col)
        })
        .collect();
    let rows = cells
        .into_iter()
        .map(|r| r.into_iter().zip(&fills).map(|(v, f)| v.unwrap_or(*f)).collect())
        .collect();
    Dataset::new(schema, ids, rows, None, None)
}

/// Loads a per-source CSV file holding the attributes in `fragment`.
pub fn load_source_csv(
    path: impl AsRef<Path>,
    source: Source,
    fragment: &[Attribute],
    options: CsvOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    read_source_csv(open(path)?, &path.display().to_string(), source, fragment, options)
}

pub fn read_scores_csv<R: Read>(reader: R, label: &str) -> Result<Vec<(String, f64)>> {
    let mut rdr = reader_for(reader);
    let headers = rdr.headers()?.clone();
    let map = header_map(label, &headers, &[ID_COLUMN, SCORE_COLUMN], &[])?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let id = record.get(map[ID_COLUMN]).unwrap_or("").to_string();
        let cell = record.get(map[SCORE_COLUMN]).unwrap_or("");
        let mark: f64 = cell.parse().map_err(|_| Error::Cell {
            path: label.to_string(),
            row: r + 1,
            column: SCORE_COLUMN.to_string(),
            value: cell.to_string(),
        })?;
        if !(0.0..=10.0).contains(&mark) {
            return Err(Error::MarkOutOfRange(mark));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        out.push((id, mark));
    }
    Ok(out)
}

pub fn load_scores_csv(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    read_scores_csv(open(path)?, &path.display().to_string())
}

fn write_comment<W: Write>(out: &mut W, comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

/// Writes `dataset` as `id,<attributes>[,class][,score]`.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, mut out: W, comment: Option<&str>) -> Result<()> {
    write_comment(&mut out, comment).map_err(|e| Error::io("<dataset>", e))?;
    let schema = dataset.schema();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(schema.attributes().iter().map(|a| a.name.clone()));
    if dataset.labels().is_some() {
        header.push(CLASS_COLUMN.into());
    }
    if dataset.scores().is_some() {
        header.push(SCORE_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..dataset.len() {
        let mut rec = vec![dataset.ids()[i].clone()];
        for (a, v) in schema.attributes().iter().zip(dataset.row(i)) {
            rec.push(match (v, a.categories()) {
                (Value::Num(x), _) => format_num(*x),
                (Value::Cat(c), Some(cats)) => cats[*c].clone(),
                (Value::Cat(c), None) => c.to_string(),
            });
        }
        if let Some(l) = dataset.labels() {
            rec.push(schema.class_labels()[l[i]].clone());
        }
        if let Some(s) = dataset.scores() {
            rec.push(format_num(s[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

/// Writes a per-source file (`id` plus that source's attributes).
pub fn write_source_csv<W: Write>(dataset: &Dataset, source: Source, out: W) -> Result<()> {
    let idx = dataset.schema().source_indices(source);
    let schema = dataset.schema().project(&idx)?;
    let rows = dataset
        .rows()
        .iter()
        .map(|r| idx.iter().map(|&i| r[i]).collect())
        .collect();
    let part = Dataset::new(schema, dataset.ids().to_vec(), rows, None, None)?;
    write_dataset_csv(&part, out, None)
}

pub fn write_scores_csv<W: Write>(scores: &[(String, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([ID_COLUMN, SCORE_COLUMN])?;
    for (id, s) in scores {
        w.write_record([id.clone(), format_num(*s)])?;
    }
    w.flush().map_err(|e| Error::io("<scores>", e))?;
    Ok(())
}

/// Reads a file produced by [`write_dataset_csv`] against a known schema.
pub fn read_dataset_csv<R: Read>(reader: R, label: &str, schema: &AttributeSchema) -> Result<Dataset> {
    let mut rdr = reader_for(reader);
    let headers = rdr.headers()?.clone();
    let mut required = vec![ID_COLUMN];
    required.extend(schema.attributes().iter().map(|a| a.name.as_str()));
    let map = header_map(label, &headers, &required, &[CLASS_COLUMN, SCORE_COLUMN])?;
    let has_class = map.contains_key(CLASS_COLUMN);
    let has_score = map.contains_key(SCORE_COLUMN);

    let (mut ids, mut rows, mut labels, mut scores) = (vec![], vec![], vec![], vec![]);
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        ids.push(record.get(map[ID_COLUMN]).unwrap_or("").to_string());
        let mut row = Vec::with_capacity(schema.len());
        for attr in schema.attributes() {
            let cell = record.get(map[attr.name.as_str()]).unwrap_or("");
            row.push(parse_cell(label, row_no, attr, cell)?);
        }
        rows.push(row);
        if has_class {
            let cell = record.get(map[CLASS_COLUMN]).unwrap_or("");
            labels.push(schema.class_index(cell).ok_or_else(|| Error::Cell {
                path: label.to_string(),
                row: row_no,
                column: CLASS_COLUMN.into(),
                value: cell.to_string(),
            })?);
        }
        if has_score {
            let cell = record.get(map[SCORE_COLUMN]).unwrap_or("");
            scores.push(cell.parse::<f64>().map_err(|_| Error::Cell {
                path: label.to_string(),
                row: row_no,
                column: SCORE_COLUMN.into(),
                value: cell.to_string(),
            })?);
        }
    }
    Dataset::new(
        schema.clone(),
        ids,
        rows,
        has_class.then_some(labels),
        has_score.then_some(scores),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::schema::LOG_ATTRIBUTES;

    fn logs_fragment() -> Vec<Attribute> {
        LOG_ATTRIBUTES
            .iter()
            .map(|n| Attribute::numeric(*n, Source::Logs))
            .collect()
    }

    fn read(text: &str) -> Result<Dataset> {
        read_source_csv(text.as_bytes(), "logs.csv", Source::Logs, &logs_fragment(), CsvOptions::default())
    }

    #[test]
    fn forty_row_logs_file() {
        let mut text = String::from("id,SummAll,COIStotalFreq,PKAtotalFreq\n");
        for i in 0..40 {
            text.push_str(&format!("s{i:02},{i},{},{}.5\n", i % 7, i % 3));
        }
        let d = read(&text).unwrap();
        assert_eq!(d.len(), 40);
        assert_eq!(d.n_attributes(), 3);
        assert_eq!(d.row(5)[2], Value::Num(2.5));
    }

    #[test]
    fn header_only_is_an_empty_dataset() {
        let d = read("id,SummAll,COIStotalFreq,PKAtotalFreq\n").unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let text = "id,SummAll,COIStotalFreq,PKAtotalFreq\na,1,2,3\nb,1,2,3\nc,abc,2,3\n";
        let err = read(text).unwrap_err();
        match &err {
            Error::Cell { row, column, .. } => {
                assert_eq!(*row, 3);
                assert_eq!(column, "SummAll");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("row 3, column `SummAll`"));
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            read("id,SummAll,COIStotalFreq\n"),
            Err(Error::Header { .. })
        ));
        assert!(matches!(
            read("id,SummAll,COIStotalFreq,PKAtotalFreq,extra\n"),
            Err(Error::Header { .. })
        ));
        assert!(matches!(
            read("id,SummAll,SummAll,COIStotalFreq,PKAtotalFreq\n"),
            Err(Error::Header { .. })
        ));
        assert!(matches!(
            read("id,SummAll,COIStotalFreq,PKAtotalFreq\na,1,2,3\na,1,2,3\n"),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn missing_cells_rejected_unless_allowed() {
        let text = "id,SummAll,COIStotalFreq,PKAtotalFreq\na,1,,3\nb,3,4,?\nc,5,6,5\n";
        assert!(matches!(read(text), Err(Error::Missing { row: 1, .. })));
        let d = read_source_csv(
            text.as_bytes(),
            "logs.csv",
            Source::Logs,
            &logs_fragment(),
            CsvOptions { allow_missing: true },
        )
        .unwrap();
        assert_eq!(d.row(0)[1], Value::Num(5.0));
        assert_eq!(d.row(1)[2], Value::Num(4.0));
    }

    #[test]
    fn scores_file() {
        let s = read_scores_csv("id,score\na,5\nb,4.99\n".as_bytes(), "scores.csv").unwrap();
        assert_eq!(s, vec![("a".into(), 5.0), ("b".into(), 4.99)]);
        assert!(matches!(
            read_scores_csv("id,score\na,11\n".as_bytes(), "scores.csv"),
            Err(Error::MarkOutOfRange(_))
        ));
    }
}

//! Schema, dataset model, CSV ingestion, joining and anonymization.

mod io;
mod join;
mod schema;
mod table;

pub use io::{
    format_num, load_scores_csv, load_source_csv, read_dataset_csv, read_scores_csv,
    read_source_csv, write_dataset_csv, write_scores_csv, write_source_csv, CsvOptions,
    CLASS_COLUMN, ID_COLUMN, SCORE_COLUMN,
};
pub use join::{anonymize, join_sources, IdMap};
pub use schema::{
    Attribute, AttributeKind, AttributeSchema, Source, EMOTION_ATTRIBUTES, FAIL, GAZE_ATTRIBUTES,
    LOG_ATTRIBUTES, PASS,
};
pub use table::{check_row, Dataset, Value};

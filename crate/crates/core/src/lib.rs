pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod learners;
pub mod preprocess;
pub mod selection;

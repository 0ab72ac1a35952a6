//! Dataset ingestion, CSV result files and the experiment harness behind
//! the `otbench` command.

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod idx;
pub mod records;

pub use error::{BenchError, Result};
pub use records::{write_results_csv, ExperimentRecord};

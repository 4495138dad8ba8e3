//! Command-line front end: declare studies as JSON, run every estimator,
//! report reciprocal moments, and ingest measurement CSVs. The binary is
//! a thin shell over this library so integration tests and the
//! acceptance suite drive the same code paths.

pub mod csvio;
pub mod error;
pub mod report;
pub mod spec;
pub mod study;

pub use error::CliError;
pub use spec::{load_spec, OutputFormat, StudySpec};
pub use study::{run_study, StudyRow, StudyTable};

//! Reciprocal-moment reports and measurement ingestion.

use std::path::Path;

use serde::Serialize;

use recfosm::distributions::DistributionConfig;
use recfosm::propagation::RandomInput;
use recfosm::reciprocal::{auto_moments, empirical_reciprocal_moments, ReciprocalMoments};

use crate::csvio::read_numeric_csv;
use crate::error::CliError;

/// Reciprocal moments of a declared distribution: the exact pair where
/// one exists, quadrature otherwise (the result names the route taken).
pub fn reciprocal_report_record(record: &str) -> Result<ReciprocalMoments, CliError> {
    let config: DistributionConfig =
        serde_json::from_str(record).map_err(|e| CliError::Json {
            context: "--dist record".into(),
            source: e,
        })?;
    let dist = config.build()?;
    Ok(auto_moments(&dist)?)
}

/// Reciprocal moments estimated from measured realizations.
pub fn reciprocal_report_csv(path: &Path) -> Result<ReciprocalMoments, CliError> {
    let table = read_numeric_csv(path)?;
    Ok(empirical_reciprocal_moments(&table.data)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub rows: u64,
    pub columns: Vec<ColumnSummary>,
}

/// Load a measurement CSV as a data-backed input and summarize it.
pub fn ingest(path: &Path) -> Result<(RandomInput, IngestSummary), CliError> {
    let table = read_numeric_csv(path)?;
    let rows = table.data.nrows() as u64;
    let input = RandomInput::from_samples(table.headers, table.data)?;
    let columns = input
        .names()
        .iter()
        .enumerate()
        .map(|(i, name)| ColumnSummary {
            name: name.clone(),
            mean: input.mean_vector()[i],
            sd: input.covariance()[(i, i)].sqrt(),
        })
        .collect();
    Ok((input, IngestSummary { rows, columns }))
}

//! Running a study: build the model and inputs, run every requested
//! estimator, and shape the results as a table keyed by (spread, method).

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use recfosm::beam::tip_deflection_model;
use recfosm::distributions::{weibull_from_mean_cov, Distribution};
use recfosm::propagation::{
    fosm, monte_carlo, rec_fosm, sofm, EstimateMeta, InputBacking, Method, ObjectiveModel,
    RandomInput,
};
use recfosm::reciprocal::{
    empirical_reciprocal_moments, independent_moments, sampled_reciprocal_moments,
    ReciprocalMoments,
};

use crate::csvio::read_numeric_csv;
use crate::error::CliError;
use crate::spec::{InputsSpec, StudySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov: Option<f64>,
    pub method: Method,
    pub mean: f64,
    pub sd: f64,
    pub meta: EstimateMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// The row for (cov, method); sweep rows match on cov within
    /// floating-point identity since they were produced from the same
    /// literal values.
    pub fn row(&self, cov: Option<f64>, method: Method) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.cov == cov && r.method == method)
    }
}

pub fn run_study(spec: &StudySpec) -> Result<StudyTable, CliError> {
    spec.validate()?;
    let model = tip_deflection_model(&spec.model.nominal, &spec.model.random)?;
    let labels: Vec<String> = spec
        .model
        .random
        .iter()
        .map(|p| p.label().to_string())
        .collect();
    let mut rows = Vec::new();
    match &spec.cov_sweep {
        Some(covs) => {
            for (index, &cov) in covs.iter().enumerate() {
                let marginals = spec
                    .model
                    .random
                    .iter()
                    .map(|p| weibull_from_mean_cov(spec.model.nominal.get(*p), cov))
                    .collect::<recfosm::Result<Vec<Distribution>>>()?;
                let input = RandomInput::independent(marginals)?.with_names(labels.clone())?;
                // Each sweep block gets its own stream so inserting or
                // removing a spread value leaves other blocks unchanged.
                let seed = spec.seed + index as u64;
                run_methods(&mut rows, Some(cov), &model, &input, spec, seed)?;
            }
        }
        None => {
            let input = build_inputs(spec, &labels)?;
            run_methods(&mut rows, None, &model, &input, spec, spec.seed)?;
        }
    }
    Ok(StudyTable { rows })
}

fn build_inputs(spec: &StudySpec, labels: &[String]) -> Result<RandomInput, CliError> {
    match spec.inputs.as_ref().expect("validated") {
        InputsSpec::Records(records) => {
            let marginals = labels
                .iter()
                .map(|label| records[label].build())
                .collect::<recfosm::Result<Vec<Distribution>>>()?;
            Ok(RandomInput::independent(marginals)?.with_names(labels.to_vec())?)
        }
        InputsSpec::Csv(c) => {
            let table = read_numeric_csv(Path::new(&c.csv))?;
            if table.headers != labels {
                return Err(CliError::Invalid(format!(
                    "{}: columns {:?} do not match the random parameters {:?}",
                    c.csv, table.headers, labels
                )));
            }
            Ok(RandomInput::from_samples(table.headers, table.data)?)
        }
    }
}

fn reciprocal_input_moments(
    input: &RandomInput,
    spec: &StudySpec,
    seed: u64,
) -> Result<ReciprocalMoments, CliError> {
    if let Some(marginals) = input.independent_marginals() {
        return Ok(independent_moments(marginals)?);
    }
    match input.backing() {
        InputBacking::Samples { data } => Ok(empirical_reciprocal_moments(data)?),
        // Correlated marginals: push the dependence through joint draws.
        InputBacking::Distributions { .. } => {
            Ok(sampled_reciprocal_moments(input, spec.mc_count, seed)?)
        }
    }
}

fn run_methods(
    rows: &mut Vec<StudyRow>,
    cov: Option<f64>,
    model: &ObjectiveModel,
    input: &RandomInput,
    spec: &StudySpec,
    seed: u64,
) -> Result<(), CliError> {
    for method in &spec.methods {
        let estimate = match method {
            Method::Fosm => fosm(model, input)?,
            Method::Sofm => sofm(model, input)?,
            Method::RecFosm => {
                let recip = reciprocal_input_moments(input, spec, seed)?;
                rec_fosm(model, &recip)?
            }
            Method::MonteCarlo => monte_carlo(model, input, spec.mc_count, seed)?,
        };
        rows.push(StudyRow {
            cov,
            method: *method,
            mean: estimate.mean,
            sd: estimate.sd,
            meta: estimate.meta,
        });
    }
    Ok(())
}

pub fn to_json(table: &StudyTable) -> String {
    let mut text = serde_json::to_string_pretty(table).expect("table serializes");
    text.push('\n');
    text
}

pub const CSV_HEADER: &str =
    "cov,method,mean,sd,mean_standard_error,sd_standard_error,sample_count,seed";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// The same table as CSV. Numbers are printed in shortest-round-trip
/// form, so re-parsing reproduces every f64 bit-exactly.
pub fn to_csv(table: &StudyTable) -> String {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            opt(r.cov),
            r.method,
            r.mean,
            r.sd,
            opt(r.meta.mean_standard_error),
            opt(r.meta.sd_standard_error),
            opt(r.meta.sample_count),
            opt(r.meta.seed),
        );
    }
    text
}

/// Inverse of [`to_csv`].
pub fn parse_csv(text: &str) -> Result<StudyTable, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => {
            return Err(CliError::Invalid(format!(
                "study CSV must start with the header {CSV_HEADER:?}"
            )));
        }
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CliError::Invalid(format!(
                "line {}: expected 8 fields, found {}",
                index + 1,
                fields.len()
            )));
        }
        let num = |field: &str, name: &str| -> Result<f64, CliError> {
            field.parse().map_err(|_| {
                CliError::Invalid(format!(
                    "line {}: {name}: not a number: {field:?}",
                    index + 1
                ))
            })
        };
        let opt_num = |field: &str, name: &str| -> Result<Option<f64>, CliError> {
            if field.is_empty() {
                Ok(None)
            } else {
                num(field, name).map(Some)
            }
        };
        let method: Method = fields[1].parse().map_err(|e: recfosm::Error| {
            CliError::Invalid(format!("line {}: {e}", index + 1))
        })?;
        rows.push(StudyRow {
            cov: opt_num(fields[0], "cov")?,
            method,
            mean: num(fields[2], "mean")?,
            sd: num(fields[3], "sd")?,
            meta: EstimateMeta {
                mean_standard_error: opt_num(fields[4], "mean_standard_error")?,
                sd_standard_error: opt_num(fields[5], "sd_standard_error")?,
                sample_count: if fields[6].is_empty() {
                    None
                } else {
                    Some(fields[6].parse().map_err(|_| {
                        CliError::Invalid(format!(
                            "line {}: sample_count: not an integer: {:?}",
                            index + 1,
                            fields[6]
                        ))
                    })?)
                },
                seed: if fields[7].is_empty() {
                    None
                } else {
                    Some(fields[7].parse().map_err(|_| {
                        CliError::Invalid(format!(
                            "line {}: seed: not an integer: {:?}",
                            index + 1,
                            fields[7]
                        ))
                    })?)
                },
            },
        });
    }
    Ok(StudyTable { rows })
}

/// Fixed-width summary for the terminal; full precision stays in the
/// serialized output.
pub fn human_summary(table: &StudyTable) -> String {
    let mut text = format!(
        "{:>8}  {:<8}{:>14}{:>14}{:>13}{:>13}\n",
        "cov", "method", "mean", "sd", "mean_se", "sd_se"
    );
    for r in &table.rows {
        let cov = r.cov.map(|c| format!("{c}")).unwrap_or_else(|| "-".into());
        let se = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            text,
            "{cov:>8}  {:<8}{:>14.6}{:>14.6}{:>13}{:>13}",
            r.method.key(),
            r.mean,
            r.sd,
            se(r.meta.mean_standard_error),
            se(r.meta.sd_standard_error),
        );
    }
    text
}

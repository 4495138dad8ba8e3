//! Study declarations: which beam, which parameters are random, what
//! backs them, which estimators to run, and where results go.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use recfosm::beam::{BeamParameter, BeamParams};
use recfosm::distributions::DistributionConfig;
use recfosm::propagation::Method;

use crate::error::CliError;

pub const DEFAULT_MC_COUNT: usize = 100_000;

fn default_mc_count() -> usize {
    DEFAULT_MC_COUNT
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub model: ModelSpec,
    /// Distribution records keyed by parameter label, or a CSV of joint
    /// realizations. Omitted exactly when `cov_sweep` generates inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputsSpec>,
    pub methods: Vec<Method>,
    #[serde(default = "default_mc_count")]
    pub mc_count: usize,
    /// Spread sweep: each value fits a matched-mean distribution to every
    /// random parameter and produces one block of result rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov_sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub nominal: BeamParams,
    pub random: Vec<BeamParameter>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputsSpec {
    Csv(CsvInputs),
    Records(BTreeMap<String, DistributionConfig>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvInputs {
    pub csv: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: String,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl StudySpec {
    pub fn validate(&self) -> Result<(), CliError> {
        self.model.nominal.validate().map_err(CliError::Core)?;
        if self.model.random.is_empty() {
            return Err(CliError::Invalid(
                "model.random must select at least one parameter".into(),
            ));
        }
        for (k, p) in self.model.random.iter().enumerate() {
            if self.model.random[..k].contains(p) {
                return Err(CliError::Invalid(format!(
                    "model.random lists {p} twice"
                )));
            }
        }
        if self.methods.is_empty() {
            return Err(CliError::Invalid("methods must not be empty".into()));
        }
        for (k, m) in self.methods.iter().enumerate() {
            if self.methods[..k].contains(m) {
                return Err(CliError::Invalid(format!("methods lists {m} twice")));
            }
        }
        match (&self.cov_sweep, &self.inputs) {
            (Some(_), Some(_)) => {
                return Err(CliError::Invalid(
                    "cov_sweep generates its own inputs; remove the inputs field".into(),
                ));
            }
            (Some(covs), None) => {
                if covs.is_empty() {
                    return Err(CliError::Invalid("cov_sweep must not be empty".into()));
                }
                for &c in covs {
                    if !(c > 0.0 && c < 1.0) {
                        return Err(CliError::Invalid(format!(
                            "cov_sweep values must lie in (0, 1); got {c}"
                        )));
                    }
                }
            }
            (None, None) => {
                return Err(CliError::Invalid(
                    "either inputs or cov_sweep is required".into(),
                ));
            }
            (None, Some(InputsSpec::Records(records))) => {
                let labels: Vec<&str> =
                    self.model.random.iter().map(BeamParameter::label).collect();
                for label in &labels {
                    if !records.contains_key(*label) {
                        return Err(CliError::Invalid(format!(
                            "inputs is missing a record for random parameter {label}"
                        )));
                    }
                }
                for key in records.keys() {
                    if !labels.contains(&key.as_str()) {
                        return Err(CliError::Invalid(format!(
                            "inputs names {key:?}, which is not a random parameter"
                        )));
                    }
                }
            }
            (None, Some(InputsSpec::Csv(_))) => {}
        }
        Ok(())
    }
}

/// Parse a spec file; a CSV input path inside it is resolved relative to
/// the spec's own directory so bundled studies run from anywhere.
pub fn load_spec(path: &Path) -> Result<StudySpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut spec: StudySpec = serde_json::from_str(&text).map_err(|e| CliError::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    if let Some(InputsSpec::Csv(c)) = &mut spec.inputs {
        let csv_path = Path::new(&c.csv);
        if csv_path.is_relative() {
            if let Some(dir) = path.parent() {
                c.csv = dir.join(csv_path).display().to_string();
            }
        }
    }
    Ok(spec)
}

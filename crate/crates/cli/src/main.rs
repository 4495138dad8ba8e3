use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use recfosm_cli::error::CliError;
use recfosm_cli::spec::{load_spec, OutputFormat, OutputSpec};
use recfosm_cli::{report, study};

#[derive(Parser)]
#[command(
    name = "recfosm",
    version,
    about = "Moment-propagation studies for the cantilever benchmark: \
             plain, second-order, reciprocal, and Monte Carlo estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Declared studies: estimator tables over distributions or sweeps
    #[command(subcommand)]
    Study(StudyCommand),
    /// Moments of reciprocal variables
    #[command(subcommand)]
    Recip(RecipCommand),
    /// Load a measurement CSV and summarize it as a study input
    Ingest { path: PathBuf },
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Run a study spec and write its result table
    Run {
        spec: PathBuf,
        #[command(flatten)]
        overrides: StudyOverrides,
    },
}

#[derive(Args)]
struct StudyOverrides {
    /// Replace the spec's base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the spec's Monte Carlo sample count
    #[arg(long)]
    mc_count: Option<usize>,
    /// Write the result table here instead of the spec's output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result format (json or csv)
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum RecipCommand {
    /// Report mean and covariance of Z = 1/X
    Report {
        /// Distribution record, e.g. '{"family":"weibull","params":{"a":3,"b":5}}'
        #[arg(long, conflicts_with = "csv")]
        dist: Option<String>,
        /// Measurement CSV of realizations of X (one column per variable)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the report as JSON to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}

fn run_study_command(spec_path: &Path, overrides: StudyOverrides) -> Result<(), CliError> {
    let mut spec = load_spec(spec_path)?;
    if let Some(seed) = overrides.seed {
        spec.seed = seed;
    }
    if let Some(mc_count) = overrides.mc_count {
        spec.mc_count = mc_count;
    }
    if let Some(out) = overrides.out {
        let format = overrides
            .format
            .or(spec.output.as_ref().map(|o| o.format))
            .unwrap_or(OutputFormat::Json);
        spec.output = Some(OutputSpec {
            path: out.display().to_string(),
            format,
        });
    } else if let (Some(format), Some(output)) = (overrides.format, spec.output.as_mut()) {
        output.format = format;
    } else if overrides.format.is_some() {
        return Err(CliError::Invalid(
            "--format needs --out or an output path in the spec".into(),
        ));
    }

    let table = study::run_study(&spec)?;
    print!("{}", study::human_summary(&table));
    if let Some(output) = &spec.output {
        let content = match output.format {
            OutputFormat::Json => study::to_json(&table),
            OutputFormat::Csv => study::to_csv(&table),
        };
        write_file(Path::new(&output.path), &content)?;
        println!("wrote {}", output.path);
    }
    Ok(())
}

fn run_recip_report(
    dist: Option<String>,
    csv: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let moments = match (dist, csv) {
        (Some(record), None) => report::reciprocal_report_record(&record)?,
        (None, Some(path)) => report::reciprocal_report_csv(&path)?,
        _ => {
            return Err(CliError::Invalid(
                "pass exactly one of --dist or --csv".into(),
            ));
        }
    };
    let json = serde_json::to_string_pretty(&moments).expect("moments serialize");
    println!("{json}");
    if let Some(path) = out {
        write_file(&path, &(json + "\n"))?;
    }
    Ok(())
}

fn run_ingest(path: &Path) -> Result<(), CliError> {
    let (_, summary) = report::ingest(path)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Study(StudyCommand::Run { spec, overrides }) => {
            run_study_command(&spec, overrides)
        }
        Command::Recip(RecipCommand::Report { dist, csv, out }) => {
            run_recip_report(dist, csv, out)
        }
        Command::Ingest { path } => run_ingest(&path),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("{}", error.diagnostic());
        std::process::exit(error.exit_code());
    }
}

//! `wgm`: spectra, tuning curves, synthetic scans and their analysis.
//!
//! Exit codes: 0 success, 2 bad configuration or input (nothing written),
//! 3 an analysis step did not converge or was rejected (partial report written).

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use wgm_core::config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "wgm", version, about = "Whispering-gallery mode simulator and analysis toolkit")]
struct Cli {
    /// JSON run configuration, merged over the preset.
    #[arg(long, global = true, env = "WGM_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// device1 or device2; overrides the config's `preset`.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Any config field by dotted path, e.g. `--set scan.points=4001`.
    /// The value is read as JSON, or as a string if that fails.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mode lines in the configured window -> spectrum.csv
    Spectrum {
        /// Window bounds in THz.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
    },
    /// Shift of the reference TE/TM lines versus voltage -> tuning.csv, tuning_plot.json
    TuneCurve {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        voltages: Option<Vec<f64>>,
    },
    /// One synthetic trace per voltage -> trace_NNN.csv, scan.json
    Scan {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        voltages: Option<Vec<f64>>,
        /// Transmission noise rms.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Detect and fit every dip of each trace -> fit_report.json
    Fit {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        prominence: Option<f64>,
    },
    /// Label dips with (q, l, m, pol) -> assign_report.json
    ///
    /// Input is a trace CSV (dips are fitted first), a spectrum CSV, or
    /// `--centers`.
    Assign {
        #[arg(required_unless_present = "centers", conflicts_with = "centers")]
        file: Option<PathBuf>,
        /// Dip centres in THz.
        #[arg(long, value_delimiter = ',')]
        centers: Option<Vec<f64>>,
    },
    /// Strain per volt from a voltage sweep of traces -> calibration_report.json
    Calibrate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Characteristic intervals, tuning slopes and elastic budget -> summary.json
    Summary,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Input(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config: {e}"),
            CliError::Input(s) => f.write_str(s),
        }
    }
}

/// How a command that produced output finished.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Complete,
    Partial,
}

fn overrides(cli: &Cli) -> Result<Vec<(String, Value)>, CliError> {
    let mut o = Vec::new();
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        o.push((k.trim().to_string(), v));
    }
    if let Some(s) = cli.seed {
        o.push(("seed".into(), json!(s)));
    }
    if let Some(d) = &cli.out {
        o.push(("out_dir".into(), json!(d)));
    }
    match &cli.command {
        Command::Spectrum { window: Some(w) } => o.push(("window".into(), json!(w))),
        Command::TuneCurve { voltages: Some(v) } => o.push(("voltages".into(), json!(v))),
        Command::Scan { voltages, noise } => {
            if let Some(v) = voltages {
                o.push(("voltages".into(), json!(v)));
            }
            if let Some(n) = noise {
                o.push(("conditions.noise_rms".into(), json!(n)));
            }
        }
        Command::Fit { prominence: Some(p), .. } => o.push(("analysis.prominence".into(), json!(p))),
        _ => {}
    }
    Ok(o)
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    RunConfig::load(text.as_deref(), cli.preset.as_deref(), &overrides(cli)?).map_err(|e| match (e, &cli.config) {
        (ConfigError::Syntax { line, column, message }, Some(p)) => {
            CliError::Input(format!("config {}: line {line}, column {column}: {message}", p.display()))
        }
        (e, _) => CliError::Config(e),
    })
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Spectrum { .. } => commands::spectrum(&cfg),
        Command::TuneCurve { .. } => commands::tune_curve(&cfg),
        Command::Scan { .. } => commands::scan(&cfg),
        Command::Fit { files, .. } => commands::fit(&cfg, files),
        Command::Assign { file, centers } => commands::assign(&cfg, file.as_deref(), centers.as_deref()),
        Command::Calibrate { files } => commands::calibrate(&cfg, files),
        Command::Summary => commands::summary(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(3),
        Err(e) => {
            eprintln!("wgm: {e}");
            ExitCode::from(2)
        }
    }
}

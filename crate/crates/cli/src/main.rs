//! `affect`: command-line front end for the multimodal affect pipeline.
//!
//! Commands: `synth`, `extract`, `train`, `eval`, `report`. Every run is
//! driven by a TOML config plus `--set key=value` overrides and writes
//! its outputs to a fresh per-run directory.

mod artifacts;
mod config;
mod ingest;

use affect_core::error::CoreError;
use affect_core::experiments::{
    generate_synthetic, run_cross_modal, run_multimodal_facilitation, run_unimodal_enhancement,
    ExperimentReport, TaskArtifacts,
};
use affect_core::features::FeatureMatrix;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use artifacts::{CONFIG_FILE, REPORT_CSV_FILE, REPORT_FILE};
use config::RunConfig;

/// Error carrying the process exit code: 1 usage/config, 2 data,
/// 3 internal invariant violation.
#[derive(Debug)]
pub struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        CliError { code: 1, message }
    }
    pub fn data(message: String) -> Self {
        CliError { code: 2, message }
    }
    pub fn internal(message: String) -> Self {
        CliError { code: 3, message }
    }

    /// For errors raised while reading or transforming data files:
    /// everything is the data's fault.
    pub fn from_core_data(e: CoreError) -> Self {
        CliError::data(e.to_string())
    }

    /// For errors raised by training/evaluation: bad arguments point at
    /// the config, shape/content problems at the data, the rest at us.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(_) | CoreError::TooLarge(_) => {
                CliError::usage(e.to_string())
            }
            CoreError::Data(_)
            | CoreError::Parse(_)
            | CoreError::ShapeMismatch(_)
            | CoreError::Io(_) => CliError::data(e.to_string()),
            CoreError::NonFinite(_) => CliError::internal(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "affect",
    version,
    about = "Multimodal affect recognition: shared-representation training and the three evaluation protocols"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate paired synthetic EEG/eye feature CSVs
    #[command(after_help = config::config_help())]
    Synth(RunArgs),
    /// Turn raw recordings into feature CSVs (PSD + DE per channel band;
    /// eye movement statistics)
    #[command(after_help = config::config_help())]
    Extract(RunArgs),
    /// Train the networks and classifiers for one task and save all
    /// artifacts
    #[command(after_help = config::config_help())]
    Train(RunArgs),
    /// Evaluate saved artifacts on feature CSVs and write the report
    #[command(after_help = config::config_help())]
    Eval(RunArgs),
    /// Print a run directory's report and verify its manifest hashes
    Report {
        /// run directory written by a previous command
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; every key is optional (see CONFIG KEYS below)
    #[arg(long)]
    config: Option<String>,
    /// override one config key, e.g. --set rbm.epochs=50 (wins over the file)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// output directory (default: runs/<command>-<timestamp>-seed<seed>)
    #[arg(long)]
    out_dir: Option<String>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = config::load_config(self.config.as_deref(), &self.set)?;
        if let Some(dir) = &self.out_dir {
            cfg.paths.out_dir = dir.clone();
        }
        Ok(cfg)
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth(a) => a.load().and_then(|c| cmd_synth(&c)),
        Cmd::Extract(a) => a.load().and_then(|c| cmd_extract(&c)),
        Cmd::Train(a) => a.load().and_then(|c| cmd_train(&c)),
        Cmd::Eval(a) => a.load().and_then(|c| cmd_eval(&c)),
        Cmd::Report { dir } => cmd_report(&dir),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn read_features(path: &str) -> Result<(FeatureMatrix, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read '{path}': {e}")))?;
    let fm = FeatureMatrix::from_csv(&text).map_err(CliError::from_core_data)?;
    Ok((fm, text))
}

fn require_path<'a>(value: &'a str, key: &str) -> Result<&'a str, CliError> {
    if value.is_empty() {
        return Err(CliError::usage(format!("paths.{key} must be set")));
    }
    Ok(value)
}

fn write_output(dir: &Path, name: &str, text: &str) -> Result<(String, String), CliError> {
    std::fs::write(dir.join(name), text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", dir.join(name).display())))?;
    Ok((name.to_string(), artifacts::sha256_hex(text.as_bytes())))
}

fn snapshot_config(cfg: &RunConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::internal(format!("config snapshot: {e}")))
}

fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.synth.to_spec(cfg.seed);
    let (eeg, eye) = generate_synthetic(&spec).map_err(CliError::from_core)?;
    let dir = artifacts::make_run_dir(&cfg.paths.out_dir, "synth", cfg.seed)?;
    let mut outputs = vec![
        write_output(&dir, "eeg.csv", &eeg.to_csv())?,
        write_output(&dir, "eye.csv", &eye.to_csv())?,
        write_output(&dir, CONFIG_FILE, &snapshot_config(cfg)?)?,
    ];
    outputs.sort();
    artifacts::write_manifest(&dir, cfg.seed, &[], &outputs)?;
    println!(
        "wrote {} paired rows per modality to {}",
        eeg.rows(),
        dir.display()
    );
    Ok(())
}

fn cmd_extract(cfg: &RunConfig) -> Result<(), CliError> {
    let eeg_path = require_path(&cfg.paths.eeg, "eeg")?;
    let eeg_text = std::fs::read_to_string(eeg_path)
        .map_err(|e| CliError::data(format!("cannot read '{eeg_path}': {e}")))?;
    let eeg = ingest::extract_eeg(&eeg_text).map_err(CliError::from_core_data)?;

    let dir = artifacts::make_run_dir(&cfg.paths.out_dir, "extract", cfg.seed)?;
    let mut inputs = vec![(eeg_path, eeg_text.as_str())];
    let mut outputs = vec![write_output(&dir, "eeg_features.csv", &eeg.to_csv())?];

    let eye_text;
    if cfg.paths.eye.is_empty() {
        eprintln!("warning: no eye stream given (paths.eye); writing EEG features only");
    } else {
        let eye_path = cfg.paths.eye.as_str();
        eye_text = std::fs::read_to_string(eye_path)
            .map_err(|e| CliError::data(format!("cannot read '{eye_path}': {e}")))?;
        let eye = ingest::extract_eye(&eye_text).map_err(CliError::from_core_data)?;
        inputs.push((eye_path, eye_text.as_str()));
        outputs.push(write_output(&dir, "eye_features.csv", &eye.to_csv())?);
    }
    outputs.push(write_output(&dir, CONFIG_FILE, &snapshot_config(cfg)?)?);
    outputs.sort();
    artifacts::write_manifest(&dir, cfg.seed, &inputs, &outputs)?;
    println!("wrote {} feature rows to {}", eeg.rows(), dir.display());
    Ok(())
}

fn run_task(
    cfg: &RunConfig,
    eeg: &FeatureMatrix,
    eye: &FeatureMatrix,
) -> Result<(ExperimentReport, TaskArtifacts), CliError> {
    let split = cfg.split_rule()?;
    let cfgs = cfg.task_cfgs()?;
    match cfg.task.as_str() {
        "facilitation" => run_multimodal_facilitation(eeg, eye, &split, &cfgs, cfg.seed)
            .map_err(CliError::from_core),
        "enhancement" => {
            if cfg.modality != "eeg" && cfg.modality != "eye" {
                return Err(CliError::usage(format!(
                    "modality must be 'eeg' or 'eye' for the enhancement task, got '{}'",
                    cfg.modality
                )));
            }
            run_unimodal_enhancement(eeg, eye, &cfg.modality, &split, &cfgs, cfg.seed)
                .map_err(CliError::from_core)
        }
        "crossmodal" => {
            run_cross_modal(eeg, eye, &split, &cfgs, cfg.seed).map_err(CliError::from_core)
        }
        other => Err(CliError::usage(format!(
            "task must be 'facilitation', 'enhancement', or 'crossmodal', got '{other}'"
        ))),
    }
}

fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let eeg_path = require_path(&cfg.paths.eeg, "eeg")?;
    let eye_path = require_path(&cfg.paths.eye, "eye")?;
    let (eeg, eeg_text) = read_features(eeg_path)?;
    let (eye, eye_text) = read_features(eye_path)?;

    let (report, trained) = run_task(cfg, &eeg, &eye)?;

    let dir = artifacts::make_run_dir(&cfg.paths.out_dir, "train", cfg.seed)?;
    let mut outputs = artifacts::save_artifacts(&dir, &trained)?;
    outputs.push(write_output(&dir, REPORT_FILE, &report.render())?);
    outputs.push(write_output(&dir, REPORT_CSV_FILE, &report.to_csv())?);
    outputs.push(write_output(&dir, CONFIG_FILE, &snapshot_config(cfg)?)?);
    outputs.sort();
    artifacts::write_manifest(
        &dir,
        cfg.seed,
        &[(eeg_path, &eeg_text), (eye_path, &eye_text)],
        &outputs,
    )?;
    print!("{}", report.render());
    println!("outputs written to {}", dir.display());
    Ok(())
}

fn cmd_eval(cfg: &RunConfig) -> Result<(), CliError> {
    let model_dir = PathBuf::from(require_path(&cfg.paths.model_dir, "model_dir")?);
    // The saved config pins everything that must match training (seed,
    // split, network/classifier settings); the caller may only redirect
    // the data paths and the output directory.
    let saved = config::load_config(Some(&model_dir.join(CONFIG_FILE).to_string_lossy()), &[])?;
    if !cfg.task.is_empty()
        && !["facilitation", "enhancement", "crossmodal"].contains(&cfg.task.as_str())
    {
        return Err(CliError::usage(format!(
            "task must be 'facilitation', 'enhancement', or 'crossmodal', got '{}'",
            cfg.task
        )));
    }
    let eeg_path = if cfg.paths.eeg.is_empty() {
        require_path(&saved.paths.eeg, "eeg")?
    } else {
        &cfg.paths.eeg
    };
    let eye_path = if cfg.paths.eye.is_empty() {
        require_path(&saved.paths.eye, "eye")?
    } else {
        &cfg.paths.eye
    };
    let (eeg, eeg_text) = read_features(eeg_path)?;
    let (eye, eye_text) = read_features(eye_path)?;

    let trained = artifacts::load_artifacts(&model_dir)?;
    let split = saved.split_rule()?;
    let cfgs = saved.task_cfgs()?;
    let report =
        affect_core::experiments::eval_task(&trained, &eeg, &eye, &split, &cfgs, saved.seed)
            .map_err(CliError::from_core)?;

    let dir = artifacts::make_run_dir(&cfg.paths.out_dir, "eval", saved.seed)?;
    let mut effective = saved.clone();
    effective.paths.eeg = eeg_path.to_string();
    effective.paths.eye = eye_path.to_string();
    effective.paths.model_dir = model_dir.to_string_lossy().into_owned();
    effective.paths.out_dir = String::new();
    let mut outputs = vec![
        write_output(&dir, REPORT_FILE, &report.render())?,
        write_output(&dir, REPORT_CSV_FILE, &report.to_csv())?,
        write_output(&dir, CONFIG_FILE, &snapshot_config(&effective)?)?,
    ];
    outputs.sort();
    artifacts::write_manifest(
        &dir,
        saved.seed,
        &[(eeg_path, &eeg_text), (eye_path, &eye_text)],
        &outputs,
    )?;
    print!("{}", report.render());
    println!("outputs written to {}", dir.display());
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<(), CliError> {
    let report_path = dir.join(REPORT_FILE);
    if report_path.exists() {
        let text = std::fs::read_to_string(&report_path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", report_path.display())))?;
        print!("{text}");
    } else {
        println!("(no report in {})", dir.display());
    }
    let bad = artifacts::verify_manifest(dir)?;
    if bad.is_empty() {
        println!("manifest: all recorded outputs verify");
        Ok(())
    } else {
        Err(CliError::data(format!(
            "manifest mismatch for: {}",
            bad.join(", ")
        )))
    }
}

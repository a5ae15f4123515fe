//! Run configuration: one TOML file per run plus `--set key=value`
//! overrides. Every key has a default except input paths; unknown keys
//! are a hard error.

use affect_core::autoencoder::{FineTuneConfig, LossKind};
use affect_core::classifier::SvmConfig;
use affect_core::experiments::{SplitRule, SynthSpec, TaskCfgs};
use affect_core::rbm::CdConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// facilitation | enhancement | crossmodal
    pub task: String,
    /// enhancement only: modality available at test time (eeg | eye)
    pub modality: String,
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub rbm: RbmConfig,
    pub fine_tune: FtConfig,
    pub net: NetConfig,
    pub svm: SvmSection,
    pub split: SplitConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// EEG feature CSV (train/eval) or raw EEG signal CSV (extract)
    pub eeg: String,
    /// eye feature CSV (train/eval) or raw eye-tracker CSV (extract)
    pub eye: String,
    /// run directory of a previous `train` (eval only)
    pub model_dir: String,
    /// output directory; empty means runs/<command>-<timestamp>-seed<seed>
    pub out_dir: String,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            eeg: String::new(),
            eye: String::new(),
            model_dir: String::new(),
            out_dir: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub latent_dim: usize,
    pub eeg_dim: usize,
    pub eye_dim: usize,
    pub noise: f64,
    pub rows_per_class: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = SynthSpec::default();
        SynthConfig {
            n_classes: s.n_classes,
            latent_dim: s.latent_dim,
            eeg_dim: s.eeg_dim,
            eye_dim: s.eye_dim,
            noise: s.noise,
            rows_per_class: s.rows_per_class,
        }
    }
}

impl SynthConfig {
    pub fn to_spec(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            n_classes: self.n_classes,
            latent_dim: self.latent_dim,
            eeg_dim: self.eeg_dim,
            eye_dim: self.eye_dim,
            noise: self.noise,
            rows_per_class: self.rows_per_class,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbmConfig {
    pub k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub persistent: bool,
    pub n_persistent_chains: usize,
}

impl Default for RbmConfig {
    fn default() -> Self {
        let c = CdConfig {
            epochs: 30,
            ..CdConfig::default()
        };
        RbmConfig {
            k: c.k,
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            minibatch_size: c.minibatch_size,
            momentum: c.momentum,
            weight_decay: c.weight_decay,
            persistent: c.persistent,
            n_persistent_chains: c.n_persistent_chains,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FtConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    /// cross-entropy | squared-error
    pub loss: String,
}

impl Default for FtConfig {
    fn default() -> Self {
        FtConfig {
            learning_rate: 0.5,
            epochs: 500,
            minibatch_size: 32,
            loss: "cross-entropy".into(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    /// hidden units for the EEG pathway; omit for an automatic choice
    pub hidden_eeg: Option<usize>,
    pub hidden_eye: Option<usize>,
    /// shared-layer width; omit for an automatic choice
    pub shared: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmSection {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmSection {
    fn default() -> Self {
        let s = SvmConfig::default();
        SvmSection {
            c: s.c,
            epochs: s.epochs,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// seed-style (clips 1-9 train) | deap-style (random 90/10)
    pub kind: String,
    /// deap-style only: ratings above this are the high class
    pub threshold: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            kind: "seed-style".into(),
            threshold: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// crossmodal only: also report a shuffled-label chance control
    pub permutation_null: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            permutation_null: false,
        }
    }
}

impl RunConfig {
    pub fn split_rule(&self) -> Result<SplitRule, CliError> {
        match self.split.kind.as_str() {
            "seed-style" => Ok(SplitRule::SeedStyle),
            "deap-style" => Ok(SplitRule::DeapStyle {
                threshold: self.split.threshold,
            }),
            other => Err(CliError::usage(format!(
                "split.kind must be 'seed-style' or 'deap-style', got '{other}'"
            ))),
        }
    }

    pub fn task_cfgs(&self) -> Result<TaskCfgs, CliError> {
        let loss = match self.fine_tune.loss.as_str() {
            "cross-entropy" => LossKind::CrossEntropy,
            "squared-error" => LossKind::SquaredError,
            other => {
                return Err(CliError::usage(format!(
                    "fine_tune.loss must be 'cross-entropy' or 'squared-error', got '{other}'"
                )))
            }
        };
        Ok(TaskCfgs {
            cd: CdConfig {
                k: self.rbm.k,
                learning_rate: self.rbm.learning_rate,
                epochs: self.rbm.epochs,
                minibatch_size: self.rbm.minibatch_size,
                momentum: self.rbm.momentum,
                weight_decay: self.rbm.weight_decay,
                persistent: self.rbm.persistent,
                n_persistent_chains: self.rbm.n_persistent_chains,
            },
            fine_tune: FineTuneConfig {
                learning_rate: self.fine_tune.learning_rate,
                epochs: self.fine_tune.epochs,
                minibatch_size: self.fine_tune.minibatch_size,
                loss,
                freeze_decoder: false,
            },
            svm: SvmConfig {
                c: self.svm.c,
                epochs: self.svm.epochs,
            },
            hidden_eeg: self.net.hidden_eeg,
            hidden_eye: self.net.hidden_eye,
            shared: self.net.shared,
            permutation_null: self.eval.permutation_null,
        })
    }
}

/// Load the config file (if any), apply `--set key=value` overrides,
/// and deserialize. Flag overrides win over file values.
pub fn load_config(file: Option<&str>, sets: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config '{path}': {e}")))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::usage(format!("config '{path}': {e}")))?
        }
        None => toml::Table::new(),
    };
    for s in sets {
        apply_set(&mut table, s)?;
    }
    RunConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::usage(format!("config: {e}")))
}

fn apply_set(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--set '{spec}': expected key=value")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::usage(format!(
            "--set '{spec}': empty key segment"
        )));
    }
    // Parse the value with TOML's own grammar; fall back to a string so
    // `--set paths.eeg=data/eeg.csv` works without quoting.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::usage(format!("--set '{spec}': '{p}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Full key listing with defaults, shown under `--help`.
pub fn config_help() -> String {
    let defaults = toml::to_string(&RunConfig::default()).expect("default config serializes");
    format!(
        "CONFIG KEYS (TOML file via --config, overridden by --set key=value):\n\
         every key below is optional and shown with its default; input paths\n\
         default to empty and must be supplied where the command needs them.\n\n{defaults}"
    )
}

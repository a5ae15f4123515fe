//! Saving and loading the per-run artifact directory: scalers, trained
//! networks, classifiers, an index, and a manifest of input hashes.

use affect_core::autoencoder::{deserialize_model, serialize_model};
use affect_core::classifier::{deserialize_classifier, serialize_classifier};
use affect_core::experiments::{TaskArtifacts, TaskKind};
use affect_core::features::Scaler;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::CliError;

pub const INDEX_FILE: &str = "artifacts.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.toml";
pub const REPORT_FILE: &str = "report.txt";
pub const REPORT_CSV_FILE: &str = "report.csv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn task_kind_from_str(s: &str) -> Result<TaskKind, CliError> {
    match s {
        "multimodal-facilitation" => Ok(TaskKind::MultimodalFacilitation),
        "unimodal-enhancement" => Ok(TaskKind::UnimodalEnhancement),
        "cross-modal" => Ok(TaskKind::CrossModal),
        other => Err(CliError::data(format!("unknown task kind '{other}'"))),
    }
}

/// Write every artifact and an index file listing them. Returns the
/// (name, contents-hash) pairs for the manifest.
pub fn save_artifacts(
    dir: &Path,
    artifacts: &TaskArtifacts,
) -> Result<Vec<(String, String)>, CliError> {
    let mut index = String::from("affect-artifacts v1\n");
    index.push_str(&format!("task {}\n", artifacts.task.as_str()));
    index.push_str(&format!(
        "test_modality {}\n",
        artifacts.test_modality.as_deref().unwrap_or("-")
    ));
    let mut files: Vec<(String, String)> = vec![
        ("scaler_eeg.txt".into(), artifacts.scaler_eeg.to_text()),
        ("scaler_eye.txt".into(), artifacts.scaler_eye.to_text()),
    ];
    for (name, net) in &artifacts.nets {
        let file = format!("net_{name}.txt");
        index.push_str(&format!("net {name} {file}\n"));
        files.push((file, serialize_model(net)));
    }
    for (name, clf) in &artifacts.classifiers {
        let file = format!("classifier_{name}.txt");
        index.push_str(&format!("classifier {name} {file}\n"));
        files.push((file, serialize_classifier(clf)));
    }
    files.push((INDEX_FILE.into(), index));

    let mut hashed = Vec::with_capacity(files.len());
    for (name, text) in &files {
        write_file(dir, name, text)?;
        hashed.push((name.clone(), sha256_hex(text.as_bytes())));
    }
    Ok(hashed)
}

pub fn load_artifacts(dir: &Path) -> Result<TaskArtifacts, CliError> {
    let index = read_file(&dir.join(INDEX_FILE))?;
    let mut lines = index.lines();
    if lines.next() != Some("affect-artifacts v1") {
        return Err(CliError::data(format!(
            "{}: not an artifact index",
            dir.join(INDEX_FILE).display()
        )));
    }
    let mut task = None;
    let mut test_modality = None;
    let mut nets = Vec::new();
    let mut classifiers = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match (fields[0], fields.len()) {
            ("task", 2) => task = Some(task_kind_from_str(fields[1])?),
            ("test_modality", 2) => {
                test_modality = (fields[1] != "-").then(|| fields[1].to_string());
            }
            ("net", 3) => {
                let text = read_file(&dir.join(fields[2]))?;
                let net = deserialize_model(&text).map_err(CliError::from_core_data)?;
                nets.push((fields[1].to_string(), net));
            }
            ("classifier", 3) => {
                let text = read_file(&dir.join(fields[2]))?;
                let clf = deserialize_classifier(&text).map_err(CliError::from_core_data)?;
                classifiers.push((fields[1].to_string(), clf));
            }
            _ => {
                return Err(CliError::data(format!(
                    "artifact index: unreadable line '{line}'"
                )))
            }
        }
    }
    let task = task.ok_or_else(|| CliError::data("artifact index is missing the task".into()))?;
    let scaler_eeg = Scaler::from_text(&read_file(&dir.join("scaler_eeg.txt"))?)
        .map_err(CliError::from_core_data)?;
    let scaler_eye = Scaler::from_text(&read_file(&dir.join("scaler_eye.txt"))?)
        .map_err(CliError::from_core_data)?;
    Ok(TaskArtifacts {
        task,
        scaler_eeg,
        scaler_eye,
        nets,
        classifiers,
        test_modality,
    })
}

/// Manifest: the seed plus one hash line per input file and per written
/// artifact, so a run can be audited byte for byte.
pub fn write_manifest(
    dir: &Path,
    seed: u64,
    inputs: &[(&str, &str)],
    outputs: &[(String, String)],
) -> Result<(), CliError> {
    let mut s = String::from("affect-manifest v1\n");
    s.push_str(&format!("seed {seed}\n"));
    for (path, text) in inputs {
        s.push_str(&format!("input {} {path}\n", sha256_hex(text.as_bytes())));
    }
    for (name, hash) in outputs {
        s.push_str(&format!("output {hash} {name}\n"));
    }
    write_file(dir, MANIFEST_FILE, &s)
}

/// Re-hash every `output` line of a manifest against the files now in
/// the directory; returns the mismatching file names.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let text = read_file(&dir.join(MANIFEST_FILE))?;
    let mut bad = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() == 3 && fields[0] == "output" {
            let now = sha256_hex(read_file(&dir.join(fields[2]))?.as_bytes());
            if now != fields[1] {
                bad.push(fields[2].to_string());
            }
        }
    }
    Ok(bad)
}

/// Pick the run directory: an explicit `--out-dir`/paths.out_dir wins
/// (and must not already contain files); otherwise a fresh
/// runs/<command>-<timestamp>-seed<seed> directory is created.
pub fn make_run_dir(explicit: &str, command: &str, seed: u64) -> Result<PathBuf, CliError> {
    if !explicit.is_empty() {
        let dir = PathBuf::from(explicit);
        if dir.exists()
            && dir
                .read_dir()
                .map(|mut d| d.next().is_some())
                .unwrap_or(false)
        {
            return Err(CliError::usage(format!(
                "output directory '{}' already contains files; refusing to overwrite",
                dir.display()
            )));
        }
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::data(format!("cannot create '{}': {e}", dir.display())))?;
        return Ok(dir);
    }
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    for attempt in 0.. {
        let name = if attempt == 0 {
            format!("runs/{command}-{stamp}-seed{seed}")
        } else {
            format!("runs/{command}-{stamp}-seed{seed}-{attempt}")
        };
        let dir = PathBuf::from(&name);
        if dir.exists() {
            continue;
        }
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::data(format!("cannot create '{name}': {e}")))?;
        return Ok(dir);
    }
    unreachable!("an unused run directory name always exists");
}

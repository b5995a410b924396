//! Plain-text kinematics files, the trial manifest and corpus loading.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trial::{LabelRecord, LabeledTrial, SkillLevel, Task, TrialId, TrialRecording, CHANNELS};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MANIFEST_HEADER: [&str; 6] = [
    "task",
    "subject_id",
    "trial_index",
    "kinematics_path",
    "grs_score",
    "self_proclaimed",
];

/// One manifest row. `kinematics_path` is relative to the manifest's directory
/// unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub task: Task,
    pub subject_id: String,
    pub trial_index: u32,
    pub kinematics_path: String,
    pub grs_score: u32,
    pub self_proclaimed: SkillLevel,
}

impl ManifestEntry {
    pub fn trial_id(&self) -> TrialId {
        TrialId {
            task: self.task,
            subject: self.subject_id.clone(),
            trial: self.trial_index,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawEntry {
    task: String,
    subject_id: String,
    trial_index: u32,
    kinematics_path: String,
    grs_score: u32,
    self_proclaimed: String,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

pub fn parse_manifest(text: &str, origin: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(parse_err(
            header.position().map_or(1, |p| p.line() as usize),
            format!("header must be '{}'", MANIFEST_HEADER.join(",")),
        ));
    }
    let mut entries = Vec::new();
    for row in reader.deserialize::<RawEntry>() {
        let raw = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let entry = ManifestEntry {
            task: raw.task.parse()?,
            subject_id: raw.subject_id,
            trial_index: raw.trial_index,
            kinematics_path: raw.kinematics_path,
            grs_score: raw.grs_score,
            self_proclaimed: raw.self_proclaimed.parse()?,
        };
        LabelRecord::new(entry.self_proclaimed, entry.grs_score)?;
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&MANIFEST_HEADER.join(","));
    out.push('\n');
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.task.code(),
            e.subject_id,
            e.trial_index,
            e.kinematics_path,
            e.grs_score,
            e.self_proclaimed.code()
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses one frame per line of exactly 76 whitespace-separated reals. Blank
/// lines are skipped.
pub fn parse_kinematics(text: &str, origin: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("'{token}' is not a number"),
            })?;
            values.push(v);
        }
        let n = values.len() - before;
        if n != CHANNELS {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected {CHANNELS} columns, found {n}"),
            });
        }
    }
    Ok(values)
}

pub fn read_kinematics(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kinematics(&text, path)
}

pub fn format_kinematics(frames: &[f64]) -> String {
    let mut out = String::with_capacity(frames.len() * 10);
    for frame in frames.chunks(CHANNELS) {
        let line: Vec<String> = frame.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Loads the recording and labels a manifest row refers to.
pub fn parse_trial(entry: &ManifestEntry, base_dir: &Path) -> Result<LabeledTrial> {
    let rel = Path::new(&entry.kinematics_path);
    let path: PathBuf = if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        base_dir.join(rel)
    };
    if !path.is_file() {
        return Err(Error::Input(format!(
            "manifest entry {} points to missing kinematics file {}",
            entry.trial_id(),
            path.display()
        )));
    }
    let frames = read_kinematics(&path)?;
    if frames.is_empty() {
        return Err(Error::Input(format!("kinematics file {} has no frames", path.display())));
    }
    Ok(LabeledTrial {
        recording: TrialRecording::new(entry.trial_id(), frames)?,
        labels: LabelRecord::new(entry.self_proclaimed, entry.grs_score)?,
    })
}

/// A set of labeled trials, kept in manifest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub trials: Vec<LabeledTrial>,
}

impl Corpus {
    pub fn new(trials: Vec<LabeledTrial>) -> Self {
        Self { trials }
    }

    pub fn tasks(&self) -> Vec<Task> {
        let mut tasks: Vec<Task> = self.trials.iter().map(|t| t.recording.id.task).collect();
        tasks.sort();
        tasks.dedup();
        tasks
    }

    pub fn for_task(&self, task: Task) -> Corpus {
        Corpus {
            trials: self
                .trials
                .iter()
                .filter(|t| t.recording.id.task == task)
                .cloned()
                .collect(),
        }
    }

    pub fn ids(&self) -> Vec<TrialId> {
        self.trials.iter().map(|t| t.recording.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Loads `root/manifest.csv`, or converts a dataset release laid out as
    /// `<Task>/meta_file_<Task>.txt` when no manifest is present.
    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let manifest = root.join(MANIFEST_FILE);
        let entries = if manifest.is_file() {
            read_manifest(&manifest)?
        } else if super::jigsaws::looks_like_release(root) {
            super::jigsaws::manifest_from_release(root)?
        } else {
            return Err(Error::Input(format!(
                "no {MANIFEST_FILE} (or dataset meta files) under {}",
                root.display()
            )));
        };
        let trials = entries
            .iter()
            .map(|e| parse_trial(e, root))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trials })
    }
}

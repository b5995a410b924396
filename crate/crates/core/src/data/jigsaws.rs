//! Adapter for the public dataset's native layout:
//! `<root>/<Task>/meta_file_<Task>.txt` plus
//! `<root>/<Task>/kinematics/AllGestures/<Task>_<Subject><NNN>.txt`.
//!
//! Meta-file rows are whitespace separated: trial name, self-proclaimed level
//! (N/I/E), total GRS, then the six GRS components (ignored).

use std::fs;
use std::path::Path;

use super::manifest::ManifestEntry;
use super::trial::Task;
use crate::error::{Error, Result};

fn meta_path(root: &Path, task: Task) -> std::path::PathBuf {
    let name = task.dataset_name();
    root.join(name).join(format!("meta_file_{name}.txt"))
}

pub fn looks_like_release(root: &Path) -> bool {
    Task::ALL.iter().any(|&t| meta_path(root, t).is_file())
}

/// Splits a trial name such as `Knot_Tying_B001` into subject and repetition.
pub fn parse_trial_name(name: &str, task: Task) -> Option<(String, u32)> {
    let rest = name.strip_prefix(task.dataset_name())?.strip_prefix('_')?;
    if rest.len() < 4 {
        return None;
    }
    let (subject, digits) = rest.split_at(rest.len() - 3);
    let trial = digits.parse().ok()?;
    (!subject.is_empty()).then(|| (subject.to_string(), trial))
}

pub fn parse_meta_file(text: &str, task: Task, origin: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        if fields.len() < 3 {
            return Err(err(format!("expected at least 3 fields, found {}", fields.len())));
        }
        let (subject, trial) =
            parse_trial_name(fields[0], task).ok_or_else(|| err(format!("unrecognized trial name '{}'", fields[0])))?;
        let self_proclaimed = fields[1].parse()?;
        let grs_score = fields[2]
            .parse()
            .map_err(|_| err(format!("GRS '{}' is not an integer", fields[2])))?;
        entries.push(ManifestEntry {
            task,
            subject_id: subject,
            trial_index: trial,
            kinematics_path: format!("{}/kinematics/AllGestures/{}.txt", task.dataset_name(), fields[0]),
            grs_score,
            self_proclaimed,
        });
    }
    Ok(entries)
}

/// Builds manifest rows for every task whose meta file exists.
pub fn manifest_from_release(root: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for task in Task::ALL {
        let path = meta_path(root, task);
        if !path.is_file() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        entries.extend(parse_meta_file(&text, task, &path)?);
    }
    Ok(entries)
}

//! Run configuration: defaults, TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skillnet::data::{BoundaryRule, GrsThresholds, LabelMode, LabelingPolicy, SynthSpec, Task, WindowConfig};
use skillnet::eval::{Coverage, ExperimentConfig, Scheme};
use skillnet::network::ArchitectureSpec;
use skillnet::optim::{OptimizerConfig, ValidationSplit};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Batches of 600 for 300 epochs.
    Paper,
    /// Batches of 64 for 50 epochs.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    #[value(name = "self")]
    #[serde(rename = "self")]
    SelfProclaimed,
    Grs,
}

impl From<Labeling> for LabelMode {
    fn from(l: Labeling) -> Self {
        match l {
            Labeling::SelfProclaimed => LabelMode::SelfProclaimed,
            Labeling::Grs => LabelMode::GrsThreshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub task: Task,
    pub scheme: Scheme,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            task: Task::Suturing,
            scheme: Scheme::Loso,
            seed: 0,
            jobs: 1,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub root: PathBuf,
    pub labeling: Labeling,
    pub boundary: BoundaryRule,
    /// GRS `[low, high]` thresholds per task.
    pub grs_suturing: [u32; 2],
    pub grs_needle_passing: [u32; 2],
    pub grs_knot_tying: [u32; 2],
    pub window: usize,
    pub step: usize,
    /// Tolerate subjects with missing repetitions.
    pub allow_gaps: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        let policy = LabelingPolicy::self_proclaimed();
        let pair = |t: GrsThresholds| [t.low, t.high];
        let window = WindowConfig::default();
        Self {
            root: PathBuf::from("data"),
            labeling: Labeling::SelfProclaimed,
            boundary: policy.boundary,
            grs_suturing: pair(policy.suturing),
            grs_needle_passing: pair(policy.needle_passing),
            grs_knot_tying: pair(policy.knot_tying),
            window: window.width,
            step: window.step,
            allow_gaps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_widths: [usize; 2],
    pub maxpool_dropout: f64,
    pub fc_dropout: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let spec = ArchitectureSpec::default();
        Self {
            hidden_widths: spec.hidden_widths,
            maxpool_dropout: spec.maxpool_dropout_rate,
            fc_dropout: spec.fc_dropout_rate,
        }
    }
}

/// A preset plus optional per-field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    pub validation_fraction: f64,
    pub validation_split: ValidationSplit,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let paper = OptimizerConfig::paper();
        Self {
            preset: Preset::Paper,
            learning_rate: None,
            batch_size: None,
            epochs: None,
            validation_fraction: paper.validation_fraction,
            validation_split: paper.validation_split,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub timing_repeats: usize,
    /// Report a per-trial majority vote next to the per-window scores.
    pub trial_vote: bool,
    /// Window widths swept by `benchmark`.
    pub benchmark_windows: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            timing_repeats: 3,
            trial_vote: false,
            benchmark_windows: vec![30, 60, 90],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub subjects: usize,
    pub trials_per_subject: usize,
    pub length_min: usize,
    pub length_max: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        let spec = SynthSpec::default();
        Self {
            subjects: spec.subjects,
            trials_per_subject: spec.trials_per_subject,
            length_min: spec.length_range.0,
            length_max: spec.length_range.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub model: ModelSection,
    pub optimizer: OptimizerSection,
    pub eval: EvalSection,
    pub synth: SynthSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub task: Option<Task>,
    pub scheme: Option<Scheme>,
    pub window: Option<usize>,
    pub labeling: Option<Labeling>,
    pub preset: Option<Preset>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults, then `file` if given, then `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.run.seed = v;
        }
        if let Some(v) = o.task {
            self.run.task = v;
        }
        if let Some(v) = o.scheme {
            self.run.scheme = v;
        }
        if let Some(v) = o.window {
            self.data.window = v;
        }
        if let Some(v) = o.labeling {
            self.data.labeling = v;
        }
        if let Some(v) = o.preset {
            self.optimizer.preset = v;
        }
        if let Some(v) = o.jobs {
            self.run.jobs = v;
        }
        if let Some(v) = &o.out {
            self.run.out = v.clone();
        }
        if let Some(v) = &o.data {
            self.data.root = v.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.labeling().validate()?;
        self.window()?;
        self.architecture(self.data.window).validate()?;
        self.optimizer().validate()?;
        if self.run.jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        if self.eval.timing_repeats == 0 {
            return Err(CliError::Config("timing_repeats must be at least 1".into()));
        }
        Ok(())
    }

    pub fn labeling(&self) -> LabelingPolicy {
        let pair = |p: [u32; 2]| GrsThresholds { low: p[0], high: p[1] };
        LabelingPolicy {
            mode: self.data.labeling.into(),
            suturing: pair(self.data.grs_suturing),
            needle_passing: pair(self.data.grs_needle_passing),
            knot_tying: pair(self.data.grs_knot_tying),
            boundary: self.data.boundary,
        }
    }

    pub fn window(&self) -> Result<WindowConfig, CliError> {
        Ok(WindowConfig::new(self.data.window, self.data.step)?)
    }

    pub fn architecture(&self, width: usize) -> ArchitectureSpec {
        ArchitectureSpec {
            hidden_widths: self.model.hidden_widths,
            maxpool_dropout_rate: self.model.maxpool_dropout,
            fc_dropout_rate: self.model.fc_dropout,
            ..ArchitectureSpec::for_window(width)
        }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        let base = match o.preset {
            Preset::Paper => OptimizerConfig::paper(),
            Preset::Desk => OptimizerConfig::desk(),
        };
        OptimizerConfig {
            learning_rate: o.learning_rate.unwrap_or(base.learning_rate),
            batch_size: o.batch_size.unwrap_or(base.batch_size),
            epochs: o.epochs.unwrap_or(base.epochs),
            seed: self.run.seed,
            validation_fraction: o.validation_fraction,
            validation_split: o.validation_split,
            ..base
        }
    }

    /// Experiment settings at window width `width` (the configured step is kept).
    pub fn experiment(&self, width: usize) -> ExperimentConfig {
        let mut e = ExperimentConfig::new(self.architecture(width), self.optimizer(), self.labeling());
        e.window = WindowConfig {
            width,
            step: self.data.step,
        };
        e.timing_repeats = self.eval.timing_repeats;
        e.trial_vote = self.eval.trial_vote;
        e.jobs = self.run.jobs;
        e
    }

    pub fn coverage(&self) -> Coverage {
        if self.data.allow_gaps {
            Coverage::AllowGaps
        } else {
            Coverage::Complete
        }
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            subjects: self.synth.subjects,
            trials_per_subject: self.synth.trials_per_subject,
            length_range: (self.synth.length_min, self.synth.length_max),
            seed: self.run.seed,
            ..SynthSpec::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_full_length_settings() {
        let c = RunConfig::default();
        let o = c.optimizer();
        assert_eq!((o.learning_rate, o.batch_size, o.epochs), (1e-4, 600, 300));
        assert_eq!((c.data.window, c.data.step), (60, 30));
        assert_eq!((c.model.maxpool_dropout, c.model.fc_dropout), (0.2, 0.5));
        assert_eq!(c.model.hidden_widths, [256, 128]);
        c.validate().unwrap();
    }

    #[test]
    fn emit_parse_round_trip() {
        let mut c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        c.optimizer.learning_rate = Some(3e-4);
        c.optimizer.preset = Preset::Desk;
        c.data.labeling = Labeling::Grs;
        c.run.scheme = Scheme::HoldOut;
        c.run.task = Task::KnotTying;
        c.eval.benchmark_windows = vec![30];
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[run]\nseed = 7\njobs = 2\n[data]\nwindow = 90\n").unwrap();
        let flags = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(Some(&path), &flags).unwrap();
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.run.jobs, 2);
        assert_eq!(c.data.window, 90);
        assert_eq!(c.data.step, 30);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::from_toml("[run]\nsed = 1\n").is_err());
        assert!(RunConfig::from_toml("[run]\ntask = \"XX\"\n").is_err());
        let mut c = RunConfig::default();
        c.data.window = 10;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.model.fc_dropout = 1.0;
        assert!(c.validate().is_err());
    }
}

//! Manipulator splitting and label-preserving sliding-window cropping.

use serde::{Deserialize, Serialize};

use super::label::{assign_label, LabelingPolicy};
use super::normalize::z_normalize;
use super::trial::{LabeledTrial, Side, SkillLevel, TrialId, TrialRecording, CHANNELS, PAIR_CHANNELS};
use crate::error::{Error, Result};

/// One manipulator pair of a trial, `length x 38`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorInstance {
    pub trial: TrialId,
    pub side: Side,
    pub label: SkillLevel,
    values: Vec<f64>,
}

impl ManipulatorInstance {
    pub fn new(trial: TrialId, side: Side, label: SkillLevel, values: Vec<f64>) -> Result<Self> {
        if values.len() % PAIR_CHANNELS != 0 {
            return Err(Error::Input(format!(
                "{} values do not form whole {PAIR_CHANNELS}-channel frames",
                values.len()
            )));
        }
        Ok(Self {
            trial,
            side,
            label,
            values,
        })
    }

    pub fn length(&self) -> usize {
        self.values.len() / PAIR_CHANNELS
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Columns 1-38 become the MTM instance and 39-76 the PSM instance; both keep
/// the trial's identity and label.
pub fn split_manipulators(trial: &TrialRecording, label: SkillLevel) -> [ManipulatorInstance; 2] {
    [Side::Mtm, Side::Psm].map(|side| {
        let offset = side.column_offset();
        let mut values = Vec::with_capacity(trial.length() * PAIR_CHANNELS);
        for frame in trial.frames().chunks_exact(CHANNELS) {
            values.extend_from_slice(&frame[offset..offset + PAIR_CHANNELS]);
        }
        ManipulatorInstance {
            trial: trial.id.clone(),
            side,
            label,
            values,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub width: usize,
    pub step: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { width: 60, step: 30 }
    }
}

impl WindowConfig {
    pub fn new(width: usize, step: usize) -> Result<Self> {
        if width == 0 || step == 0 {
            return Err(Error::Input(format!(
                "window width and step must be positive (got W={width}, L={step})"
            )));
        }
        Ok(Self { width, step })
    }
}

/// Number of crops a length-`length` series yields.
pub fn crop_count(length: usize, config: WindowConfig) -> usize {
    if length < config.width {
        0
    } else {
        (length - config.width) / config.step + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CropSource {
    pub trial: TrialId,
    pub side: Side,
    /// Zero-based first frame of the window.
    pub start: usize,
}

/// A `width x 38` window with the label of its parent trial.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCrop {
    pub source: CropSource,
    pub label: SkillLevel,
    width: usize,
    values: Vec<f64>,
}

impl WindowCrop {
    pub fn new(source: CropSource, label: SkillLevel, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * PAIR_CHANNELS {
            return Err(Error::Input(format!(
                "crop of width {width} needs {} values, got {}",
                width * PAIR_CHANNELS,
                values.len()
            )));
        }
        Ok(Self {
            source,
            label,
            width,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Windows start at `0, L, 2L, ...` while `start + W <= length`.
pub fn sliding_window_crop(instance: &ManipulatorInstance, config: WindowConfig) -> Vec<WindowCrop> {
    let n = crop_count(instance.length(), config);
    let span = config.width * PAIR_CHANNELS;
    (0..n)
        .map(|i| {
            let start = i * config.step;
            let from = start * PAIR_CHANNELS;
            WindowCrop {
                source: CropSource {
                    trial: instance.trial.clone(),
                    side: instance.side,
                    start,
                },
                label: instance.label,
                width: config.width,
                values: instance.values[from..from + span].to_vec(),
            }
        })
        .collect()
}

/// Normalize, split and crop every trial, in input order.
pub fn build_crops<'a, I>(trials: I, policy: &LabelingPolicy, config: WindowConfig) -> Result<Vec<WindowCrop>>
where
    I: IntoIterator<Item = &'a LabeledTrial>,
{
    let mut crops = Vec::new();
    for trial in trials {
        let label = assign_label(&trial.labels, policy, trial.recording.id.task)?;
        let (normalized, _) = z_normalize(&trial.recording)?;
        for instance in split_manipulators(&normalized, label) {
            crops.extend(sliding_window_crop(&instance, config));
        }
    }
    Ok(crops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::trial::Task;
    use proptest::prelude::*;

    fn id() -> TrialId {
        TrialId {
            task: Task::NeedlePassing,
            subject: "D".into(),
            trial: 3,
        }
    }

    fn instance(length: usize) -> ManipulatorInstance {
        let values = (0..length * PAIR_CHANNELS).map(|v| v as f64).collect();
        ManipulatorInstance::new(id(), Side::Psm, SkillLevel::Expert, values).unwrap()
    }

    #[test]
    fn default_window_and_step() {
        let crops = sliding_window_crop(&instance(150), WindowConfig::default());
        let starts: Vec<usize> = crops.iter().map(|c| c.source.start).collect();
        assert_eq!(starts, vec![0, 30, 60, 90]);
        assert!(crops.iter().all(|c| c.label == SkillLevel::Expert && c.width() == 60));
    }

    #[test]
    fn too_short_gives_no_crops() {
        assert!(sliding_window_crop(&instance(59), WindowConfig::default()).is_empty());
        assert_eq!(sliding_window_crop(&instance(60), WindowConfig::default()).len(), 1);
    }

    #[test]
    fn split_is_a_column_partition() {
        let frames: Vec<f64> = (0..3 * CHANNELS).map(|v| v as f64).collect();
        let trial = TrialRecording::new(id(), frames.clone()).unwrap();
        let [mtm, psm] = split_manipulators(&trial, SkillLevel::Novice);
        assert_eq!((mtm.side, psm.side), (Side::Mtm, Side::Psm));
        assert_eq!(mtm.label, SkillLevel::Novice);
        assert_eq!(psm.label, SkillLevel::Novice);
        assert_eq!(mtm.trial, trial.id);
        let mut rebuilt = Vec::new();
        for t in 0..3 {
            rebuilt.extend_from_slice(&mtm.values()[t * 38..(t + 1) * 38]);
            rebuilt.extend_from_slice(&psm.values()[t * 38..(t + 1) * 38]);
        }
        assert_eq!(rebuilt, frames);
    }

    #[test]
    fn zero_window_parameters_rejected() {
        assert!(WindowConfig::new(0, 1).is_err());
        assert!(WindowConfig::new(1, 0).is_err());
    }

    proptest! {
        #[test]
        fn count_formula_and_slices(length in 1usize..200, width in 1usize..80, step in 1usize..50) {
            let config = WindowConfig { width, step };
            let inst = instance(length);
            let crops = sliding_window_crop(&inst, config);
            let mut expected = 0;
            let mut m = 0;
            while m + width <= length {
                expected += 1;
                m += step;
            }
            prop_assert_eq!(crops.len(), expected);
            prop_assert_eq!(crop_count(length, config), expected);
            for c in &crops {
                prop_assert!(c.source.start + width <= length);
                let from = c.source.start * PAIR_CHANNELS;
                prop_assert_eq!(c.values(), &inst.values()[from..from + width * PAIR_CHANNELS]);
            }
        }
    }
}

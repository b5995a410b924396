use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinematic channels per recording: four manipulators of 19 variables each.
pub const CHANNELS: usize = 76;
pub const CHANNELS_PER_MANIPULATOR: usize = 19;
/// Channels of one manipulator pair (two MTMs or two PSMs).
pub const PAIR_CHANNELS: usize = 38;
pub const SAMPLE_RATE_HZ: f64 = 30.0;
/// Offset of the row-major 3x3 rotation block inside a manipulator's 19 channels.
pub const ROTATION_OFFSET: usize = 3;

const VARIABLE_NAMES: [&str; CHANNELS_PER_MANIPULATOR] = [
    "pos_x", "pos_y", "pos_z", "rot_11", "rot_12", "rot_13", "rot_21", "rot_22", "rot_23", "rot_31", "rot_32",
    "rot_33", "lin_vel_x", "lin_vel_y", "lin_vel_z", "ang_vel_x", "ang_vel_y", "ang_vel_z", "gripper_angle",
];
const MANIPULATOR_NAMES: [&str; 4] = ["mtm1", "mtm2", "psm1", "psm2"];

/// Human-readable name of a zero-based column, e.g. `psm1.rot_22`.
pub fn channel_name(column: usize) -> Option<String> {
    (column < CHANNELS).then(|| {
        format!(
            "{}.{}",
            MANIPULATOR_NAMES[column / CHANNELS_PER_MANIPULATOR],
            VARIABLE_NAMES[column % CHANNELS_PER_MANIPULATOR]
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "SU")]
    Suturing,
    #[serde(rename = "NP")]
    NeedlePassing,
    #[serde(rename = "KT")]
    KnotTying,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Suturing, Task::NeedlePassing, Task::KnotTying];

    pub fn code(self) -> &'static str {
        match self {
            Task::Suturing => "SU",
            Task::NeedlePassing => "NP",
            Task::KnotTying => "KT",
        }
    }

    /// Directory and file prefix used by the public dataset release.
    pub fn dataset_name(self) -> &'static str {
        match self {
            Task::Suturing => "Suturing",
            Task::NeedlePassing => "Needle_Passing",
            Task::KnotTying => "Knot_Tying",
        }
    }

    pub(crate) fn ordinal(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_ordinal(v: u8) -> Option<Self> {
        Task::ALL.get(v as usize).copied()
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "su" | "suturing" => Ok(Task::Suturing),
            "np" | "needle_passing" | "needlepassing" => Ok(Task::NeedlePassing),
            "kt" | "knot_tying" | "knottying" => Ok(Task::KnotTying),
            other => Err(Error::Input(format!("unknown task '{other}'"))),
        }
    }
}

/// Skill class; the discriminant is the network's class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkillLevel {
    Novice = 0,
    Intermediate = 1,
    Expert = 2,
}

impl SkillLevel {
    pub const ALL: [SkillLevel; 3] = [SkillLevel::Novice, SkillLevel::Intermediate, SkillLevel::Expert];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            SkillLevel::Novice => "N",
            SkillLevel::Intermediate => "I",
            SkillLevel::Expert => "E",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SkillLevel::Novice => "novice",
            SkillLevel::Intermediate => "intermediate",
            SkillLevel::Expert => "expert",
        }
    }
}

impl fmt::Display for SkillLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SkillLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n" | "novice" => Ok(SkillLevel::Novice),
            "i" | "intermediate" => Ok(SkillLevel::Intermediate),
            "e" | "expert" => Ok(SkillLevel::Expert),
            other => Err(Error::Input(format!("unknown skill level '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    /// Master tool manipulators, columns 1-38.
    Mtm,
    /// Patient-side manipulators, columns 39-76.
    Psm,
}

impl Side {
    pub fn column_offset(self) -> usize {
        match self {
            Side::Mtm => 0,
            Side::Psm => PAIR_CHANNELS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialId {
    pub task: Task,
    pub subject: String,
    /// One-based repetition index.
    pub trial: u32,
}

impl fmt::Display for TrialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}{:03}", self.task, self.subject, self.trial)
    }
}

/// One task execution: `length x 76` frames sampled at 30 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecording {
    pub id: TrialId,
    frames: Vec<f64>,
}

impl TrialRecording {
    pub fn new(id: TrialId, frames: Vec<f64>) -> Result<Self> {
        if frames.is_empty() || frames.len() % CHANNELS != 0 {
            return Err(Error::Input(format!(
                "trial {id}: {} values do not form whole 76-channel frames",
                frames.len()
            )));
        }
        if let Some(pos) = frames.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "trial {id}: non-finite value at frame {}, column {}",
                pos / CHANNELS + 1,
                pos % CHANNELS + 1
            )));
        }
        Ok(Self { id, frames })
    }

    pub fn length(&self) -> usize {
        self.frames.len() / CHANNELS
    }

    pub fn frames(&self) -> &[f64] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.frames[t * CHANNELS..(t + 1) * CHANNELS]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().skip(c).step_by(CHANNELS).copied()
    }

    /// Checks that every stored rotation block has determinant within `tolerance` of 1.
    pub fn validate_rotations(&self, tolerance: f64) -> Result<()> {
        for t in 0..self.length() {
            let frame = self.frame(t);
            for m in 0..4 {
                let r = &frame[m * CHANNELS_PER_MANIPULATOR + ROTATION_OFFSET..][..9];
                let det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6])
                    + r[2] * (r[3] * r[7] - r[4] * r[6]);
                if (det - 1.0).abs() >= tolerance {
                    return Err(Error::Input(format!(
                        "trial {}: frame {} {} rotation determinant {det:.4}",
                        self.id,
                        t + 1,
                        MANIPULATOR_NAMES[m]
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn with_frames(&self, frames: Vec<f64>) -> Self {
        debug_assert_eq!(frames.len(), self.frames.len());
        Self {
            id: self.id.clone(),
            frames,
        }
    }
}

pub const GRS_MIN: u32 = 6;
pub const GRS_MAX: u32 = 30;

/// Both skill annotations available for a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub self_proclaimed: SkillLevel,
    pub grs_score: u32,
}

impl LabelRecord {
    pub fn new(self_proclaimed: SkillLevel, grs_score: u32) -> Result<Self> {
        if !(GRS_MIN..=GRS_MAX).contains(&grs_score) {
            return Err(Error::Input(format!(
                "GRS score {grs_score} outside {GRS_MIN}..={GRS_MAX}"
            )));
        }
        Ok(Self {
            self_proclaimed,
            grs_score,
        })
    }
}

/// A recording with its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrial {
    pub recording: TrialRecording,
    pub labels: LabelRecord,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id() -> TrialId {
        TrialId {
            task: Task::Suturing,
            subject: "B".into(),
            trial: 1,
        }
    }

    #[test]
    fn channel_names_follow_layout() {
        assert_eq!(channel_name(0).unwrap(), "mtm1.pos_x");
        assert_eq!(channel_name(18).unwrap(), "mtm1.gripper_angle");
        assert_eq!(channel_name(38).unwrap(), "psm1.pos_x");
        assert_eq!(channel_name(75).unwrap(), "psm2.gripper_angle");
        assert!(channel_name(76).is_none());
    }

    #[test]
    fn recording_rejects_partial_frames_and_nan() {
        assert!(TrialRecording::new(id(), vec![0.0; 75]).is_err());
        assert!(TrialRecording::new(id(), vec![]).is_err());
        let mut v = vec![0.0; 152];
        v[80] = f64::NAN;
        let err = TrialRecording::new(id(), v).unwrap_err().to_string();
        assert!(err.contains("frame 2, column 5"), "{err}");
    }

    #[test]
    fn rotation_validation() {
        let mut frame = vec![0.0; CHANNELS];
        for m in 0..4 {
            let base = m * CHANNELS_PER_MANIPULATOR + ROTATION_OFFSET;
            frame[base] = 1.0;
            frame[base + 4] = 1.0;
            frame[base + 8] = 1.0;
        }
        let rec = TrialRecording::new(id(), frame.clone()).unwrap();
        assert!(rec.validate_rotations(0.05).is_ok());
        frame[ROTATION_OFFSET + 8] = 1.1;
        let rec = TrialRecording::new(id(), frame).unwrap();
        assert!(rec.validate_rotations(0.05).is_err());
    }

    #[test]
    fn grs_range() {
        assert!(LabelRecord::new(SkillLevel::Novice, 5).is_err());
        assert!(LabelRecord::new(SkillLevel::Novice, 6).is_ok());
        assert!(LabelRecord::new(SkillLevel::Expert, 30).is_ok());
        assert!(LabelRecord::new(SkillLevel::Expert, 31).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("kt".parse::<Task>().unwrap(), Task::KnotTying);
        assert_eq!("Needle_Passing".parse::<Task>().unwrap(), Task::NeedlePassing);
        assert_eq!("E".parse::<SkillLevel>().unwrap(), SkillLevel::Expert);
        assert!("x".parse::<SkillLevel>().is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::trial::{LabelRecord, SkillLevel, Task, GRS_MAX, GRS_MIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Experience-based level reported by the surgeon.
    SelfProclaimed,
    /// Global rating score split by two per-task thresholds.
    GrsThreshold,
}

/// Which class a score exactly at a threshold falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    /// `score >= threshold` belongs to the higher class.
    Upper,
    /// `score <= threshold` belongs to the lower class.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrsThresholds {
    pub low: u32,
    pub high: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingPolicy {
    pub mode: LabelMode,
    pub suturing: GrsThresholds,
    pub needle_passing: GrsThresholds,
    pub knot_tying: GrsThresholds,
    pub boundary: BoundaryRule,
}

impl LabelingPolicy {
    pub fn new(mode: LabelMode) -> Self {
        Self {
            mode,
            suturing: GrsThresholds { low: 19, high: 24 },
            needle_passing: GrsThresholds { low: 15, high: 20 },
            knot_tying: GrsThresholds { low: 15, high: 20 },
            boundary: BoundaryRule::Upper,
        }
    }

    pub fn self_proclaimed() -> Self {
        Self::new(LabelMode::SelfProclaimed)
    }

    pub fn grs() -> Self {
        Self::new(LabelMode::GrsThreshold)
    }

    pub fn thresholds(&self, task: Task) -> GrsThresholds {
        match task {
            Task::Suturing => self.suturing,
            Task::NeedlePassing => self.needle_passing,
            Task::KnotTying => self.knot_tying,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for task in Task::ALL {
            let t = self.thresholds(task);
            if t.low >= t.high {
                return Err(Error::Input(format!(
                    "{task}: lower GRS threshold {} must be below upper {}",
                    t.low, t.high
                )));
            }
        }
        Ok(())
    }

    /// Class for a GRS score under this policy's thresholds and boundary rule.
    pub fn grs_class(&self, task: Task, score: u32) -> Result<SkillLevel> {
        if !(GRS_MIN..=GRS_MAX).contains(&score) {
            return Err(Error::Input(format!("GRS score {score} outside {GRS_MIN}..={GRS_MAX}")));
        }
        let GrsThresholds { low, high } = self.thresholds(task);
        let above = |t: u32| match self.boundary {
            BoundaryRule::Upper => score >= t,
            BoundaryRule::Lower => score > t,
        };
        Ok(if above(high) {
            SkillLevel::Expert
        } else if above(low) {
            SkillLevel::Intermediate
        } else {
            SkillLevel::Novice
        })
    }

    /// Inclusive GRS score range mapping to `level`.
    pub fn grs_band(&self, task: Task, level: SkillLevel) -> (u32, u32) {
        let GrsThresholds { low, high } = self.thresholds(task);
        let shift = match self.boundary {
            BoundaryRule::Upper => 0,
            BoundaryRule::Lower => 1,
        };
        match level {
            SkillLevel::Novice => (GRS_MIN, low - 1 + shift),
            SkillLevel::Intermediate => (low + shift, high - 1 + shift),
            SkillLevel::Expert => (high + shift, GRS_MAX),
        }
    }
}

impl Default for LabelingPolicy {
    fn default() -> Self {
        Self::self_proclaimed()
    }
}

pub fn assign_label(record: &LabelRecord, policy: &LabelingPolicy, task: Task) -> Result<SkillLevel> {
    match policy.mode {
        LabelMode::SelfProclaimed => {
            if !(GRS_MIN..=GRS_MAX).contains(&record.grs_score) {
                return Err(Error::Input(format!("GRS score {} outside {GRS_MIN}..={GRS_MAX}", record.grs_score)));
            }
            Ok(record.self_proclaimed)
        }
        LabelMode::GrsThreshold => policy.grs_class(task, record.grs_score),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(score: u32) -> LabelRecord {
        LabelRecord {
            self_proclaimed: SkillLevel::Intermediate,
            grs_score: score,
        }
    }

    #[test]
    fn threshold_examples() {
        let p = LabelingPolicy::grs();
        assert_eq!(assign_label(&rec(14), &p, Task::KnotTying).unwrap(), SkillLevel::Novice);
        assert_eq!(assign_label(&rec(24), &p, Task::Suturing).unwrap(), SkillLevel::Expert);
        assert_eq!(assign_label(&rec(17), &p, Task::NeedlePassing).unwrap(), SkillLevel::Intermediate);
        assert_eq!(assign_label(&rec(23), &p, Task::Suturing).unwrap(), SkillLevel::Intermediate);
        assert_eq!(assign_label(&rec(15), &p, Task::KnotTying).unwrap(), SkillLevel::Intermediate);
    }

    #[test]
    fn lower_boundary_rule_moves_ties_down() {
        let mut p = LabelingPolicy::grs();
        p.boundary = BoundaryRule::Lower;
        assert_eq!(assign_label(&rec(24), &p, Task::Suturing).unwrap(), SkillLevel::Intermediate);
        assert_eq!(assign_label(&rec(15), &p, Task::KnotTying).unwrap(), SkillLevel::Novice);
    }

    #[test]
    fn self_proclaimed_passes_through() {
        let p = LabelingPolicy::self_proclaimed();
        assert_eq!(assign_label(&rec(30), &p, Task::KnotTying).unwrap(), SkillLevel::Intermediate);
    }

    #[test]
    fn out_of_range_score_is_input_error() {
        for p in [LabelingPolicy::grs(), LabelingPolicy::self_proclaimed()] {
            assert!(matches!(assign_label(&rec(31), &p, Task::Suturing), Err(Error::Input(_))));
            assert!(matches!(assign_label(&rec(5), &p, Task::Suturing), Err(Error::Input(_))));
        }
    }

    #[test]
    fn bands_invert_the_threshold_rule() {
        for boundary in [BoundaryRule::Upper, BoundaryRule::Lower] {
            let mut p = LabelingPolicy::grs();
            p.boundary = boundary;
            for task in Task::ALL {
                for level in SkillLevel::ALL {
                    let (lo, hi) = p.grs_band(task, level);
                    for s in lo..=hi {
                        assert_eq!(p.grs_class(task, s).unwrap(), level);
                    }
                }
            }
        }
        assert_eq!(LabelingPolicy::grs().grs_band(Task::KnotTying, SkillLevel::Novice), (6, 14));
    }

    #[test]
    fn thresholds_must_be_ordered() {
        let mut p = LabelingPolicy::grs();
        assert!(p.validate().is_ok());
        p.knot_tying = GrsThresholds { low: 20, high: 20 };
        assert!(p.validate().is_err());
    }
}

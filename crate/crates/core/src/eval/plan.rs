//! Trial-level fold plans for leave-one-supertrial-out and hold-out evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Task, TrialId};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, STREAM_HOLDOUT};

/// Repetitions per subject; also the number of supertrials.
pub const SUPERTRIALS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Loso,
    #[serde(rename = "holdout")]
    HoldOut,
}

impl Scheme {
    pub fn code(self) -> &'static str {
        match self {
            Scheme::Loso => "loso",
            Scheme::HoldOut => "holdout",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "loso" => Ok(Scheme::Loso),
            "holdout" => Ok(Scheme::HoldOut),
            other => Err(Error::Input(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Zero-based position in the plan.
    pub index: usize,
    pub train: Vec<TrialId>,
    pub test: Vec<TrialId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub scheme: Scheme,
    pub folds: Vec<Fold>,
    /// Selection seed; hold-out plans only.
    pub seed: Option<u64>,
}

/// How strictly the trial grid is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coverage {
    /// Every subject must have every repetition `1..=5`.
    #[default]
    Complete,
    /// Missing repetitions are tolerated (the public release lacks a few).
    AllowGaps,
}

/// Subject name to its sorted repetition indices.
fn grid(ids: &[TrialId], coverage: Coverage) -> Result<(Task, BTreeMap<&str, Vec<u32>>)> {
    let Some(first) = ids.first() else {
        return Err(Error::Input("fold plan needs at least one trial".into()));
    };
    let mut by_subject: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for id in ids {
        if id.task != first.task {
            return Err(Error::Input(format!(
                "fold plan mixes tasks {} and {}",
                first.task, id.task
            )));
        }
        if !(1..=SUPERTRIALS).contains(&id.trial) {
            return Err(Error::Input(format!(
                "trial {id}: repetition index must be within 1..={SUPERTRIALS}"
            )));
        }
        if !seen.insert(id) {
            return Err(Error::Input(format!("trial {id} listed twice")));
        }
        by_subject.entry(id.subject.as_str()).or_default().push(id.trial);
    }
    for reps in by_subject.values_mut() {
        reps.sort_unstable();
    }
    if coverage == Coverage::Complete {
        let gaps: Vec<String> = by_subject
            .iter()
            .flat_map(|(subject, reps)| {
                (1..=SUPERTRIALS)
                    .filter(|r| !reps.contains(r))
                    .map(move |r| format!("{subject}{r:03}"))
            })
            .collect();
        if !gaps.is_empty() {
            return Err(Error::Input(format!(
                "{} missing trials: {}",
                first.task,
                gaps.join(", ")
            )));
        }
    }
    Ok((first.task, by_subject))
}

fn trial_id(task: Task, subject: &str, trial: u32) -> TrialId {
    TrialId {
        task,
        subject: subject.to_string(),
        trial,
    }
}

/// Five folds; fold `i` tests on repetition `i + 1` of every subject.
pub fn make_loso_plan(ids: &[TrialId], coverage: Coverage) -> Result<FoldPlan> {
    let (task, subjects) = grid(ids, coverage)?;
    let mut folds = Vec::with_capacity(SUPERTRIALS as usize);
    for rep in 1..=SUPERTRIALS {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (subject, reps) in &subjects {
            for &r in reps {
                let id = trial_id(task, subject, r);
                if r == rep {
                    test.push(id);
                } else {
                    train.push(id);
                }
            }
        }
        if test.is_empty() {
            return Err(Error::Input(format!("{task}: no subject has repetition {rep}")));
        }
        folds.push(Fold {
            index: folds.len(),
            train,
            test,
        });
    }
    Ok(FoldPlan {
        scheme: Scheme::Loso,
        folds,
        seed: None,
    })
}

/// One fold holding out a uniformly drawn repetition of every subject.
pub fn make_holdout_plan(ids: &[TrialId], seed: u64, coverage: Coverage) -> Result<FoldPlan> {
    let (task, subjects) = grid(ids, coverage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[STREAM_HOLDOUT]));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (subject, reps) in &subjects {
        let held = *reps.choose(&mut rng).expect("subjects have at least one trial");
        for &r in reps {
            let id = trial_id(task, subject, r);
            if r == held {
                test.push(id);
            } else {
                train.push(id);
            }
        }
    }
    Ok(FoldPlan {
        scheme: Scheme::HoldOut,
        folds: vec![Fold { index: 0, train, test }],
        seed: Some(seed),
    })
}

impl FoldPlan {
    /// Checks that every fold keeps train and test disjoint and that each fold
    /// together covers exactly `ids`.
    pub fn verify(&self, ids: &[TrialId]) -> Result<()> {
        let all: BTreeSet<&TrialId> = ids.iter().collect();
        for fold in &self.folds {
            let train: BTreeSet<&TrialId> = fold.train.iter().collect();
            let test: BTreeSet<&TrialId> = fold.test.iter().collect();
            if let Some(id) = train.intersection(&test).next() {
                return Err(Error::InternalState(format!(
                    "fold {}: trial {id} on both sides",
                    fold.index + 1
                )));
            }
            let union: BTreeSet<&TrialId> = train.union(&test).copied().collect();
            if union != all {
                return Err(Error::InternalState(format!(
                    "fold {} does not cover the corpus",
                    fold.index + 1
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(subjects: &[&str], reps: std::ops::RangeInclusive<u32>) -> Vec<TrialId> {
        subjects
            .iter()
            .flat_map(|s| reps.clone().map(move |r| trial_id(Task::Suturing, s, r)))
            .collect()
    }

    const EIGHT: [&str; 8] = ["B", "C", "D", "E", "F", "G", "H", "I"];

    #[test]
    fn loso_fold_sizes() {
        let all = ids(&EIGHT, 1..=5);
        let plan = make_loso_plan(&all, Coverage::Complete).unwrap();
        assert_eq!(plan.folds.len(), 5);
        for (i, fold) in plan.folds.iter().enumerate() {
            assert_eq!((fold.train.len(), fold.test.len()), (32, 8));
            assert!(fold.test.iter().all(|id| id.trial == i as u32 + 1));
        }
        plan.verify(&all).unwrap();
    }

    #[test]
    fn loso_test_sets_partition_the_corpus() {
        let all = ids(&EIGHT, 1..=5);
        let plan = make_loso_plan(&all, Coverage::Complete).unwrap();
        let mut tested: Vec<TrialId> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
        tested.sort();
        let mut expected = all.clone();
        expected.sort();
        assert_eq!(tested, expected);
    }

    #[test]
    fn gaps_are_listed() {
        let mut all = ids(&["B", "C"], 1..=5);
        all.retain(|id| !(id.subject == "C" && (id.trial == 2 || id.trial == 4)));
        let err = make_loso_plan(&all, Coverage::Complete).unwrap_err().to_string();
        assert!(err.contains("C002") && err.contains("C004"), "{err}");
        let plan = make_loso_plan(&all, Coverage::AllowGaps).unwrap();
        assert_eq!(plan.folds[1].test.len(), 1);
        plan.verify(&all).unwrap();
    }

    #[test]
    fn holdout_one_per_subject() {
        let all = ids(&EIGHT, 1..=5);
        let plan = make_holdout_plan(&all, 3, Coverage::Complete).unwrap();
        let fold = &plan.folds[0];
        assert_eq!((fold.train.len(), fold.test.len()), (32, 8));
        let subjects: BTreeSet<&str> = fold.test.iter().map(|id| id.subject.as_str()).collect();
        assert_eq!(subjects.len(), 8);
        plan.verify(&all).unwrap();
        assert_eq!(plan, make_holdout_plan(&all, 3, Coverage::Complete).unwrap());
        let differs = (4..20).any(|s| make_holdout_plan(&all, s, Coverage::Complete).unwrap() != plan);
        assert!(differs);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_loso_plan(&[], Coverage::Complete).is_err());
        let mut dup = ids(&["B"], 1..=5);
        dup.push(dup[0].clone());
        assert!(make_loso_plan(&dup, Coverage::Complete).is_err());
        let mut mixed = ids(&["B"], 1..=5);
        mixed[0].task = Task::KnotTying;
        assert!(make_loso_plan(&mixed, Coverage::Complete).is_err());
        let six = ids(&["B"], 1..=6);
        assert!(make_holdout_plan(&six, 0, Coverage::Complete).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Loso, Scheme::HoldOut] {
            assert_eq!(s.code().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("Hold-Out".parse::<Scheme>().unwrap(), Scheme::HoldOut);
    }
}

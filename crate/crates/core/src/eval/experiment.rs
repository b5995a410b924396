//! Fold execution: crop, train, classify, score, aggregate.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, ClassMetrics, ConfusionMatrix, Metrics, CLASS_COUNT};
use super::plan::{Fold, FoldPlan, Scheme};
use crate::data::{build_crops, Corpus, LabelMode, LabeledTrial, LabelingPolicy, SkillLevel, Task, TrialId, WindowConfig, WindowCrop};
use crate::error::{Error, Result};
use crate::network::{predict, ArchitectureSpec, ModelParams};
use crate::optim::{assemble_inputs, evaluate_crops, train, EpochRecord, OptimizerConfig};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;

/// Crops per classification call when timing.
const TIMING_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub architecture: ArchitectureSpec,
    pub optimizer: OptimizerConfig,
    pub labeling: LabelingPolicy,
    pub window: WindowConfig,
    /// Timed classification passes per fold.
    pub timing_repeats: usize,
    /// Also score a majority vote over each test trial's crops.
    pub trial_vote: bool,
    /// Folds trained concurrently.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(architecture: ArchitectureSpec, optimizer: OptimizerConfig, labeling: LabelingPolicy) -> Self {
        let window = WindowConfig {
            width: architecture.window_width,
            ..WindowConfig::default()
        };
        Self {
            architecture,
            optimizer,
            labeling,
            window,
            timing_repeats: 3,
            trial_vote: false,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        self.optimizer.validate()?;
        self.labeling.validate()?;
        if self.window.width != self.architecture.window_width {
            return Err(Error::config(
                "experiment",
                format!(
                    "window width {} differs from the network's {}",
                    self.window.width, self.architecture.window_width
                ),
            ));
        }
        if self.timing_repeats == 0 {
            return Err(Error::config("experiment", "timing needs at least one repeat"));
        }
        if self.jobs == 0 {
            return Err(Error::config("experiment", "jobs must be at least 1"));
        }
        Ok(())
    }
}

/// Wall-clock cost of classifying a fixed set of crops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub samples: usize,
    pub runs_ms: Vec<f64>,
    pub mean_ms: f64,
    /// Population standard deviation over runs.
    pub std_ms: f64,
    /// No crops were timed.
    pub empty: bool,
}

impl Timing {
    fn from_runs(samples: usize, runs_ms: Vec<f64>) -> Self {
        let n = runs_ms.len().max(1) as f64;
        let mean_ms = runs_ms.iter().sum::<f64>() / n;
        let var = runs_ms.iter().map(|r| (r - mean_ms).powi(2)).sum::<f64>() / n;
        Self {
            samples,
            runs_ms,
            mean_ms,
            std_ms: var.sqrt(),
            empty: samples == 0,
        }
    }
}

/// Times inference over `crops`. Inputs are stacked before the clock starts, so
/// only the network's forward passes and the argmax are measured.
pub fn measure_running_time<F: Scalar>(params: &ModelParams<F>, crops: &[WindowCrop], repeats: usize) -> Result<Timing> {
    let indices: Vec<usize> = (0..crops.len()).collect();
    let chunks = indices
        .chunks(TIMING_CHUNK)
        .map(|c| assemble_inputs::<F>(crops, c))
        .collect::<Result<Vec<Tensor3<F>>>>()?;
    let mut runs = Vec::with_capacity(repeats);
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let mut classified = 0;
        for chunk in &chunks {
            classified += predict(params, chunk)?.len();
        }
        runs.push(start.elapsed().as_secs_f64() * 1e3);
        debug_assert_eq!(classified, crops.len());
    }
    Ok(Timing::from_runs(crops.len(), runs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FoldStatus {
    Completed,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    /// One-based.
    pub fold: usize,
    pub seed: u64,
    pub train_trials: Vec<String>,
    pub test_trials: Vec<String>,
    pub train_crops: usize,
    pub validation_crops: usize,
    pub test_crops: usize,
    pub status: FoldStatus,
    pub best_epoch: Option<usize>,
    pub metrics: Option<Metrics>,
    pub trial_vote: Option<Metrics>,
    pub warnings: Vec<String>,
    /// Kept out of the serialized report so reruns stay byte-identical.
    #[serde(skip)]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub completed_folds: usize,
    /// Unweighted mean of fold accuracies.
    pub accuracy: f64,
    /// Per-class means of fold precision, recall and F1.
    pub classes: [ClassMetrics; CLASS_COUNT],
    /// Fold confusion counts summed.
    pub confusion: ConfusionMatrix,
    pub normalized_confusion: [[f64; CLASS_COUNT]; CLASS_COUNT],
}

impl AggregateMetrics {
    /// `None` when `folds` is empty.
    pub fn from_folds<'a>(folds: impl IntoIterator<Item = &'a Metrics>) -> Option<Self> {
        let folds: Vec<&Metrics> = folds.into_iter().collect();
        if folds.is_empty() {
            return None;
        }
        let n = folds.len() as f64;
        let mean = |f: &dyn Fn(&Metrics) -> f64| folds.iter().map(|m| f(m)).sum::<f64>() / n;
        let mut confusion = ConfusionMatrix::default();
        for m in &folds {
            confusion.add(&m.confusion);
        }
        let classes = std::array::from_fn(|k| ClassMetrics {
            precision: mean(&|m| m.classes[k].precision),
            recall: mean(&|m| m.classes[k].recall),
            f1: mean(&|m| m.classes[k].f1),
            support: confusion.support(k),
            zero_support: confusion.support(k) == 0,
        });
        Some(Self {
            completed_folds: folds.len(),
            accuracy: mean(&|m| m.accuracy),
            classes,
            normalized_confusion: confusion.normalized(),
            confusion,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub scheme: Scheme,
    pub window_width: usize,
    pub window_step: usize,
    pub labeling: LabelMode,
    pub seed: u64,
    pub plan_seed: Option<u64>,
    pub config: ExperimentConfig,
    pub folds: Vec<FoldReport>,
    pub aggregate: Option<AggregateMetrics>,
    /// Per-trial majority vote; present only when requested.
    pub trial_vote_aggregate: Option<AggregateMetrics>,
}

impl EvalReport {
    pub fn failed_folds(&self) -> impl Iterator<Item = &FoldReport> {
        self.folds.iter().filter(|f| matches!(f.status, FoldStatus::Failed { .. }))
    }

    /// Mean over folds of each fold's mean classification time.
    pub fn mean_running_time(&self) -> Option<Timing> {
        let per_fold: Vec<&Timing> = self.folds.iter().filter_map(|f| f.timing.as_ref()).collect();
        if per_fold.is_empty() {
            return None;
        }
        let samples = per_fold.iter().map(|t| t.samples).sum::<usize>() / per_fold.len();
        Some(Timing::from_runs(samples, per_fold.iter().map(|t| t.mean_ms).collect()))
    }
}

/// Per-fold training products that do not belong in the report.
#[derive(Debug, Clone)]
pub struct FoldArtifacts<F> {
    /// Best snapshot; `None` when the fold failed.
    pub model: Option<ModelParams<F>>,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct Experiment<F> {
    pub report: EvalReport,
    pub artifacts: Vec<FoldArtifacts<F>>,
}

fn class_presence(crops: &[WindowCrop]) -> [bool; CLASS_COUNT] {
    let mut present = [false; CLASS_COUNT];
    for c in crops {
        present[c.label.index()] = true;
    }
    present
}

/// Majority vote over each test trial's crop predictions; ties go to the lower class.
fn trial_votes(crops: &[WindowCrop], predictions: &[usize]) -> Result<Metrics> {
    let mut tallies: BTreeMap<&TrialId, (usize, [usize; CLASS_COUNT])> = BTreeMap::new();
    for (crop, &p) in crops.iter().zip(predictions) {
        let entry = tallies.entry(&crop.source.trial).or_insert((crop.label.index(), [0; CLASS_COUNT]));
        entry.1[p] += 1;
    }
    let (truth, votes): (Vec<usize>, Vec<usize>) = tallies
        .values()
        .map(|(label, counts)| {
            let best = (0..CLASS_COUNT).fold(0, |b, k| if counts[k] > counts[b] { k } else { b });
            (*label, best)
        })
        .unzip();
    compute_metrics(&truth, &votes)
}

fn run_fold<F: Scalar>(
    trials: &BTreeMap<&TrialId, &LabeledTrial>,
    fold: &Fold,
    config: &ExperimentConfig,
) -> Result<(FoldReport, FoldArtifacts<F>)> {
    let pick = |ids: &[TrialId]| -> Result<Vec<&LabeledTrial>> {
        ids.iter()
            .map(|id| {
                trials
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Input(format!("fold plan names trial {id}, which is not in the corpus")))
            })
            .collect()
    };
    let train_crops = build_crops(pick(&fold.train)?, &config.labeling, config.window)?;
    let test_crops = build_crops(pick(&fold.test)?, &config.labeling, config.window)?;
    let seed = config.optimizer.seed.wrapping_add(fold.index as u64);
    let optimizer = OptimizerConfig {
        seed,
        ..config.optimizer.clone()
    };

    let mut warnings = Vec::new();
    let (train_present, test_present) = (class_presence(&train_crops), class_presence(&test_crops));
    for k in 0..CLASS_COUNT {
        let name = SkillLevel::from_index(k).map_or("?", |l| l.name());
        if !train_present[k] {
            warnings.push(format!("class {name} absent from training crops"));
        }
        if !test_present[k] {
            warnings.push(format!("class {name} absent from test crops"));
        }
    }

    let mut report = FoldReport {
        fold: fold.index + 1,
        seed,
        train_trials: fold.train.iter().map(ToString::to_string).collect(),
        test_trials: fold.test.iter().map(ToString::to_string).collect(),
        train_crops: 0,
        validation_crops: 0,
        test_crops: test_crops.len(),
        status: FoldStatus::Completed,
        best_epoch: None,
        metrics: None,
        trial_vote: None,
        warnings,
        timing: None,
    };

    let outcome = match train::<F>(&train_crops, &config.architecture, &optimizer) {
        Ok(o) => o,
        Err(e @ Error::Divergence { .. }) => {
            report.train_crops = train_crops.len();
            report.status = FoldStatus::Failed { reason: e.to_string() };
            return Ok((
                report,
                FoldArtifacts {
                    model: None,
                    history: Vec::new(),
                },
            ));
        }
        Err(e) => return Err(e),
    };
    report.train_crops = outcome.train_indices.len();
    report.validation_crops = outcome.validation_indices.len();
    report.best_epoch = Some(outcome.state.best_epoch);
    let model = outcome.model();

    if test_crops.is_empty() {
        report.warnings.push("no test crops; fold not scored".into());
    } else {
        let all: Vec<usize> = (0..test_crops.len()).collect();
        let (_, _, predictions) = evaluate_crops(model, &test_crops, &all)?;
        let truth: Vec<usize> = test_crops.iter().map(|c| c.label.index()).collect();
        report.metrics = Some(compute_metrics(&truth, &predictions)?);
        if config.trial_vote {
            report.trial_vote = Some(trial_votes(&test_crops, &predictions)?);
        }
    }
    report.timing = Some(measure_running_time(model, &test_crops, config.timing_repeats)?);

    Ok((
        report,
        FoldArtifacts {
            model: Some(outcome.state.best.clone()),
            history: outcome.state.history,
        },
    ))
}

/// Runs every fold of `plan` on `corpus`.
pub fn run_experiment<F: Scalar>(corpus: &Corpus, plan: &FoldPlan, config: &ExperimentConfig) -> Result<Experiment<F>> {
    run_experiment_with_progress(corpus, plan, config, &|_| {})
}

/// As [`run_experiment`], calling `progress` as each fold finishes. With more
/// than one job, folds finish out of order, but the report is always assembled
/// in fold order and does not depend on `jobs`.
pub fn run_experiment_with_progress<F: Scalar>(
    corpus: &Corpus,
    plan: &FoldPlan,
    config: &ExperimentConfig,
    progress: &(dyn Fn(&FoldReport) + Sync),
) -> Result<Experiment<F>> {
    config.validate()?;
    let ids = corpus.ids();
    plan.verify(&ids)?;
    let tasks: BTreeSet<Task> = ids.iter().map(|id| id.task).collect();
    let task = match tasks.len() {
        1 => *tasks.iter().next().expect("one task"),
        0 => return Err(Error::Input("corpus is empty".into())),
        _ => return Err(Error::Input("experiments run on a single task".into())),
    };
    let trials: BTreeMap<&TrialId, &LabeledTrial> = corpus.trials.iter().map(|t| (&t.recording.id, t)).collect();

    let slots: Vec<Mutex<Option<Result<(FoldReport, FoldArtifacts<F>)>>>> =
        plan.folds.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(fold) = plan.folds.get(i) else { break };
        let result = run_fold::<F>(&trials, fold, config);
        if let Ok((report, _)) = &result {
            progress(report);
        }
        *slots[i].lock().expect("fold slot") = Some(result);
    };
    let jobs = config.jobs.min(plan.folds.len()).max(1);
    if jobs == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(worker);
            }
        });
    }

    let mut folds = Vec::with_capacity(plan.folds.len());
    let mut artifacts = Vec::with_capacity(plan.folds.len());
    for slot in slots {
        let (report, art) = slot
            .into_inner()
            .expect("fold slot")
            .ok_or_else(|| Error::InternalState("fold did not run".into()))??;
        folds.push(report);
        artifacts.push(art);
    }
    let aggregate = AggregateMetrics::from_folds(folds.iter().filter_map(|f| f.metrics.as_ref()));
    let trial_vote_aggregate = if config.trial_vote {
        AggregateMetrics::from_folds(folds.iter().filter_map(|f| f.trial_vote.as_ref()))
    } else {
        None
    };
    Ok(Experiment {
        report: EvalReport {
            task,
            scheme: plan.scheme,
            window_width: config.window.width,
            window_step: config.window.step,
            labeling: config.labeling.mode,
            seed: config.optimizer.seed,
            plan_seed: plan.seed,
            config: config.clone(),
            folds,
            aggregate,
            trial_vote_aggregate,
        },
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_corpus, SynthSpec};
    use crate::eval::{make_holdout_plan, make_loso_plan, write_report, Coverage};

    fn corpus() -> Corpus {
        let spec = SynthSpec {
            subjects: 3,
            trials_per_subject: 5,
            length_range: (70, 80),
            tasks: vec![Task::Suturing],
            ..SynthSpec::default()
        };
        generate_synthetic_corpus(&spec).unwrap().corpus
    }

    fn config() -> ExperimentConfig {
        let optimizer = OptimizerConfig {
            batch_size: 16,
            epochs: 2,
            seed: 11,
            ..OptimizerConfig::desk()
        };
        let mut c = ExperimentConfig::new(ArchitectureSpec::for_window(30), optimizer, LabelingPolicy::self_proclaimed());
        c.window.step = 15;
        c.timing_repeats = 1;
        c
    }

    #[test]
    fn loso_aggregate_is_mean_of_folds() {
        let corpus = corpus();
        let plan = make_loso_plan(&corpus.ids(), Coverage::Complete).unwrap();
        let exp = run_experiment::<f64>(&corpus, &plan, &config()).unwrap();
        let r = &exp.report;
        assert_eq!(r.folds.len(), 5);
        let accs: Vec<f64> = r.folds.iter().map(|f| f.metrics.as_ref().unwrap().accuracy).collect();
        let agg = r.aggregate.as_ref().unwrap();
        assert!((agg.accuracy - accs.iter().sum::<f64>() / 5.0).abs() < 1e-12);
        let crops: usize = r.folds.iter().map(|f| f.test_crops).sum();
        assert_eq!(agg.confusion.total(), crops as u64);
        for (i, f) in r.folds.iter().enumerate() {
            assert_eq!(f.seed, 11 + i as u64);
            assert_eq!(f.test_trials.len(), 3);
            assert!(f.timing.as_ref().unwrap().samples == f.test_crops);
        }
        assert!(exp.artifacts.iter().all(|a| a.model.is_some() && a.history.len() == 2));
    }

    #[test]
    fn parallel_folds_match_sequential() {
        let corpus = corpus();
        let plan = make_holdout_plan(&corpus.ids(), 4, Coverage::Complete).unwrap();
        let mut cfg = config();
        cfg.trial_vote = true;
        let a = run_experiment::<f64>(&corpus, &plan, &cfg).unwrap();
        let loso = make_loso_plan(&corpus.ids(), Coverage::Complete).unwrap();
        let seq = run_experiment::<f64>(&corpus, &loso, &cfg).unwrap();
        cfg.jobs = 3;
        let par = run_experiment::<f64>(&corpus, &loso, &cfg).unwrap();
        let json = |r: &EvalReport| {
            let mut r = r.clone();
            r.config.jobs = 1;
            serde_json::to_string(&r).unwrap()
        };
        assert_eq!(json(&seq.report), json(&par.report));
        assert!(a.report.trial_vote_aggregate.is_some());
        assert_eq!(a.report.folds[0].trial_vote.as_ref().unwrap().confusion.total(), 3);
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let corpus = corpus();
        let plan = make_holdout_plan(&corpus.ids(), 0, Coverage::Complete).unwrap();
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut names = Vec::new();
        for d in &dirs {
            let exp = run_experiment::<f64>(&corpus, &plan, &config()).unwrap();
            names = write_report(d.path(), &exp.report).unwrap();
        }
        for p in names.iter().filter(|p| !p.to_string_lossy().ends_with("_timing.json")) {
            let name = p.file_name().unwrap();
            let a = std::fs::read(dirs[0].path().join(name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(name)).unwrap();
            assert_eq!(a, b, "{name:?}");
        }
        assert!(names.iter().any(|p| p.ends_with("su_holdout_w30_self_seed11.json")));
    }

    #[test]
    fn divergence_marks_fold_failed() {
        let corpus = corpus();
        let plan = make_holdout_plan(&corpus.ids(), 0, Coverage::Complete).unwrap();
        let mut cfg = config();
        cfg.optimizer.learning_rate = 1e300;
        cfg.optimizer.epochs = 3;
        let exp = run_experiment::<f64>(&corpus, &plan, &cfg).unwrap();
        assert!(matches!(exp.report.folds[0].status, FoldStatus::Failed { .. }));
        assert!(exp.report.aggregate.is_none());
        assert_eq!(exp.report.failed_folds().count(), 1);
    }

    #[test]
    fn missing_class_is_warned() {
        let mut corpus = corpus();
        corpus.trials.retain(|t| t.labels.self_proclaimed != SkillLevel::Expert);
        let plan = make_holdout_plan(&corpus.ids(), 0, Coverage::Complete).unwrap();
        let exp = run_experiment::<f64>(&corpus, &plan, &config()).unwrap();
        let w = &exp.report.folds[0].warnings;
        assert!(w.iter().any(|m| m.contains("expert absent from training")), "{w:?}");
        assert!(exp.report.folds[0].metrics.as_ref().unwrap().classes[2].zero_support);
    }

    #[test]
    fn empty_timing_is_flagged() {
        let params = crate::network::init_params::<f64>(&ArchitectureSpec::for_window(30), 0).unwrap();
        let t = measure_running_time(&params, &[], 2).unwrap();
        assert!(t.empty);
        assert_eq!(t.samples, 0);
        assert_eq!(t.runs_ms.len(), 2);
    }

    #[test]
    fn plan_must_match_corpus() {
        let corpus = corpus();
        let plan = make_holdout_plan(&corpus.ids(), 0, Coverage::Complete).unwrap();
        let mut smaller = corpus.clone();
        smaller.trials.pop();
        assert!(run_experiment::<f64>(&smaller, &plan, &config()).is_err());
        let mut bad = config();
        bad.window.width = 60;
        assert!(matches!(run_experiment::<f64>(&corpus, &plan, &bad), Err(Error::Config { .. })));
    }
}

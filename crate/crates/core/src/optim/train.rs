//! Mini-batch training with per-epoch validation and best-model snapshots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, OptimizerConfig, ValidationSplit};
use crate::data::{TrialId, WindowCrop, PAIR_CHANNELS};
use crate::error::{Error, Result};
use crate::network::{argmax, backward, cross_entropy_loss, forward, init_params, ArchitectureSpec, ModelParams, Mode};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, STREAM_DROPOUT, STREAM_INIT, STREAM_SHUFFLE, STREAM_SPLIT};
use crate::tensor::Tensor3;

/// Crops evaluated per forward call outside training.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// One-based epoch number.
    pub epoch: usize,
    /// Mean per-crop cross-entropy over the epoch's training batches (dropout active).
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<F> {
    /// Parameters after the last epoch.
    pub params: ModelParams<F>,
    /// Snapshot from the epoch with the best validation accuracy (earliest on ties),
    /// or the last epoch when there is no validation split.
    pub best: ModelParams<F>,
    pub best_validation_accuracy: Option<f64>,
    pub best_epoch: usize,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<F> {
    pub state: TrainState<F>,
    /// Indices into the input crops used for training.
    pub train_indices: Vec<usize>,
    /// Indices into the input crops held out for validation.
    pub validation_indices: Vec<usize>,
}

impl<F: Scalar> TrainOutcome<F> {
    /// The model to use downstream: the best snapshot.
    pub fn model(&self) -> &ModelParams<F> {
        &self.state.best
    }
}

/// Stacks the selected crops into a `len x width x 38` batch.
pub fn assemble_inputs<F: Scalar>(crops: &[WindowCrop], indices: &[usize]) -> Result<Tensor3<F>> {
    let width = indices.first().map_or(0, |&i| crops[i].width());
    let mut values = Vec::with_capacity(indices.len() * width * PAIR_CHANNELS);
    for &i in indices {
        let crop = &crops[i];
        if crop.width() != width {
            return Err(Error::Input(format!(
                "mixed window widths in one batch ({} and {width})",
                crop.width()
            )));
        }
        values.extend(crop.values().iter().map(|&v| F::of(v)));
    }
    Tensor3::from_vec(indices.len(), width, PAIR_CHANNELS, values)
}

/// Allocates `round(fraction * n)` items across groups by largest remainder.
fn proportional_counts(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).expect("finite").then(a.cmp(&b))
    });
    let mut assigned: usize = counts.iter().sum();
    for &g in order.iter().cycle().take(sizes.len() * 2) {
        if assigned >= target {
            break;
        }
        if counts[g] < sizes[g] {
            counts[g] += 1;
            assigned += 1;
        }
    }
    counts
}

/// Splits crop indices into `(train, validation)`, stratified by class and seeded.
pub fn validation_split(
    crops: &[WindowCrop],
    fraction: f64,
    mode: ValidationSplit,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    if fraction <= 0.0 || crops.is_empty() {
        return ((0..crops.len()).collect(), Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[STREAM_SPLIT]));
    let mut held = vec![false; crops.len()];
    match mode {
        ValidationSplit::Crop => {
            let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, c) in crops.iter().enumerate() {
                by_class.entry(c.label.index()).or_default().push(i);
            }
            let sizes: Vec<usize> = by_class.values().map(Vec::len).collect();
            let counts = proportional_counts(&sizes, fraction);
            for (members, n) in by_class.values_mut().zip(counts) {
                members.shuffle(&mut rng);
                for &i in &members[..n] {
                    held[i] = true;
                }
            }
        }
        ValidationSplit::Trial => {
            let mut trials: BTreeMap<&TrialId, (usize, Vec<usize>)> = BTreeMap::new();
            for (i, c) in crops.iter().enumerate() {
                trials
                    .entry(&c.source.trial)
                    .or_insert_with(|| (c.label.index(), Vec::new()))
                    .1
                    .push(i);
            }
            let mut by_class: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
            for (_, (label, members)) in trials {
                by_class.entry(label).or_default().push(members);
            }
            let sizes: Vec<usize> = by_class.values().map(Vec::len).collect();
            let counts = proportional_counts(&sizes, fraction);
            for (groups, n) in by_class.values_mut().zip(counts) {
                groups.shuffle(&mut rng);
                for members in &groups[..n] {
                    for &i in members {
                        held[i] = true;
                    }
                }
            }
        }
    }
    let train = (0..crops.len()).filter(|&i| !held[i]).collect();
    let validation = (0..crops.len()).filter(|&i| held[i]).collect();
    (train, validation)
}

/// Inference-mode mean loss, accuracy and predictions over the selected crops.
pub fn evaluate_crops<F: Scalar>(
    params: &ModelParams<F>,
    crops: &[WindowCrop],
    indices: &[usize],
) -> Result<(f64, f64, Vec<usize>)> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let mut predictions = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_CHUNK) {
        let inputs = assemble_inputs::<F>(crops, chunk)?;
        let labels: Vec<usize> = chunk.iter().map(|&i| crops[i].label.index()).collect();
        let (probs, _) = forward(params, &inputs, Mode::Inference, 0)?;
        loss_sum += cross_entropy_loss(&probs, &labels)?.sum;
        for (r, &label) in labels.iter().enumerate() {
            let p = argmax(probs.row(r));
            correct += (p == label) as usize;
            predictions.push(p);
        }
    }
    let n = indices.len().max(1) as f64;
    Ok((loss_sum / n, correct as f64 / n, predictions))
}

/// Trains a freshly initialized network on `crops`.
///
/// Each epoch reshuffles the training indices under the seeded generator,
/// processes every batch (including a final partial one) with forward,
/// backward and one Adam step, then scores the validation split.
pub fn train<F: Scalar>(crops: &[WindowCrop], spec: &ArchitectureSpec, config: &OptimizerConfig) -> Result<TrainOutcome<F>> {
    config.validate()?;
    spec.validate()?;
    if crops.is_empty() {
        return Err(Error::Input("no training crops".into()));
    }
    if let Some(c) = crops.iter().find(|c| c.width() != spec.window_width) {
        return Err(Error::Input(format!(
            "crop from {} has width {}, network expects {}",
            c.source.trial,
            c.width(),
            spec.window_width
        )));
    }
    let (train_idx, val_idx) = validation_split(crops, config.validation_fraction, config.validation_split, config.seed);
    if train_idx.is_empty() {
        return Err(Error::Input("validation split left no training crops".into()));
    }
    let mut params = init_params::<F>(spec, derive_seed(config.seed, &[STREAM_INIT]))?;
    let mut best = params.clone();
    let mut best_acc: Option<f64> = None;
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order = train_idx.clone();

    for epoch in 1..=config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_SHUFFLE, epoch as u64]));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let inputs = assemble_inputs::<F>(crops, batch)?;
            let labels: Vec<usize> = batch.iter().map(|&i| crops[i].label.index()).collect();
            let dropout_seed = derive_seed(config.seed, &[STREAM_DROPOUT, epoch as u64, b as u64]);
            let (probs, cache) = forward(&params, &inputs, Mode::Training, dropout_seed)?;
            let loss = cross_entropy_loss(&probs, &labels)?;
            if !loss.sum.is_finite() || !probs.as_slice().iter().all(|p| p.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: b + 1,
                    loss: loss.sum,
                });
            }
            loss_sum += loss.sum;
            let grads = backward(&params, &cache, &labels)?;
            adam_step(&mut params, &grads, config)?;
        }
        if !params.weights.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
                loss: f64::NAN,
            });
        }
        let train_loss = loss_sum / order.len() as f64;
        let (validation_loss, validation_accuracy) = if val_idx.is_empty() {
            best = params.clone();
            best_epoch = epoch;
            (None, None)
        } else {
            let (loss, acc, _) = evaluate_crops(&params, crops, &val_idx)?;
            if best_acc.is_none_or(|b| acc > b) {
                best_acc = Some(acc);
                best = params.clone();
                best_epoch = epoch;
            }
            (Some(loss), Some(acc))
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
            validation_accuracy,
        });
    }

    Ok(TrainOutcome {
        state: TrainState {
            params,
            best,
            best_validation_accuracy: best_acc,
            best_epoch,
            epoch: config.epochs,
            history,
        },
        train_indices: train_idx,
        validation_indices: val_idx,
    })
}

pub const LEARNING_CURVE_HEADER: &str = "epoch,train_loss,validation_loss,validation_accuracy";

/// One row per epoch; missing validation values are left empty.
pub fn format_learning_curve(history: &[EpochRecord]) -> String {
    let mut out = String::from(LEARNING_CURVE_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.8}"));
    for r in history {
        let _ = writeln!(
            out,
            "{},{:.8},{},{}",
            r.epoch,
            r.train_loss,
            opt(r.validation_loss),
            opt(r.validation_accuracy)
        );
    }
    out
}

pub fn write_learning_curve(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_learning_curve(history)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CropSource, Side, SkillLevel, Task};

    fn crop(i: usize, label: SkillLevel, trial: u32) -> WindowCrop {
        WindowCrop::new(
            CropSource {
                trial: TrialId {
                    task: Task::Suturing,
                    subject: "B".into(),
                    trial,
                },
                side: Side::Mtm,
                start: i,
            },
            label,
            1,
            vec![i as f64; PAIR_CHANNELS],
        )
        .unwrap()
    }

    #[test]
    fn thousand_crops_split_nine_hundred_to_one_hundred() {
        let crops: Vec<WindowCrop> = (0..1000)
            .map(|i| crop(i, SkillLevel::ALL[i % 3], (i % 10) as u32))
            .collect();
        let (train, val) = validation_split(&crops, 0.1, ValidationSplit::Crop, 3);
        assert_eq!((train.len(), val.len()), (900, 100));
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        // Stratified: 334/333/333 members give 33 or 34 each.
        for level in SkillLevel::ALL {
            let n = val.iter().filter(|&&i| crops[i].label == level).count();
            assert!((33..=34).contains(&n));
        }
        assert_eq!(validation_split(&crops, 0.1, ValidationSplit::Crop, 3).1, val);
    }

    #[test]
    fn trial_split_keeps_trials_whole() {
        let crops: Vec<WindowCrop> = (0..200)
            .map(|i| {
                let trial = (i % 20) as u32;
                crop(i, SkillLevel::ALL[(trial % 3) as usize], trial)
            })
            .collect();
        let (train, val) = validation_split(&crops, 0.1, ValidationSplit::Trial, 5);
        assert!(!val.is_empty());
        let val_trials: std::collections::BTreeSet<u32> = val.iter().map(|&i| crops[i].source.trial.trial).collect();
        assert!(train.iter().all(|&i| !val_trials.contains(&crops[i].source.trial.trial)));
    }

    #[test]
    fn proportional_counts_hit_target() {
        assert_eq!(proportional_counts(&[334, 333, 333], 0.1).iter().sum::<usize>(), 100);
        assert_eq!(proportional_counts(&[5, 0, 1], 0.5), vec![3, 0, 0]);
        assert_eq!(proportional_counts(&[2], 0.0), vec![0]);
    }

    #[test]
    fn empty_training_set_is_input_error() {
        let spec = ArchitectureSpec::for_window(30);
        assert!(matches!(
            train::<f64>(&[], &spec, &OptimizerConfig::desk()),
            Err(Error::Input(_))
        ));
        let wrong_width = vec![crop(0, SkillLevel::Novice, 1)];
        assert!(matches!(
            train::<f64>(&wrong_width, &spec, &OptimizerConfig::desk()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn learning_curve_rows() {
        let text = format_learning_curve(&[
            EpochRecord {
                epoch: 1,
                train_loss: 1.0,
                validation_loss: Some(0.5),
                validation_accuracy: Some(0.25),
            },
            EpochRecord {
                epoch: 2,
                train_loss: 0.5,
                validation_loss: None,
                validation_accuracy: None,
            },
        ]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], LEARNING_CURVE_HEADER);
        assert_eq!(lines[1], "1,1.00000000,0.50000000,0.25000000");
        assert_eq!(lines[2], "2,0.50000000,,");
    }
}

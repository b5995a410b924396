//! Forward and backward passes through the fixed architecture.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dropout::{DropoutMask, Mode};
use super::params::{ModelParams, Weights};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{
    conv1d_backward, conv1d_forward, dense_backward, dense_forward, maxpool_backward, maxpool_forward,
    relu_backward_slice, relu_slice, softmax_rows, Matrix, PoolSpec, Tensor3,
};

/// Network inputs with zero-based class labels (0 Novice, 1 Intermediate, 2 Expert).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch<F> {
    pub inputs: Tensor3<F>,
    pub labels: Vec<usize>,
}

impl<F: Scalar> TrainingBatch<F> {
    pub fn new(inputs: Tensor3<F>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if inputs.batch() != labels.len() {
            return Err(Error::Input(format!(
                "{} inputs but {} labels",
                inputs.batch(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Input(format!("label index {bad} outside {class_count} classes")));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
struct StageCache<F> {
    input: Tensor3<F>,
    pre_activation: Tensor3<F>,
    pool: PoolSpec,
    dropout: DropoutMask,
}

#[derive(Debug, Clone)]
struct HiddenCache<F> {
    input: Matrix<F>,
    pre_activation: Matrix<F>,
    dropout: DropoutMask,
}

/// Everything the backward pass needs from one forward call.
#[derive(Debug, Clone)]
pub struct ForwardCache<F> {
    mode: Mode,
    stages: Vec<StageCache<F>>,
    flatten_shape: (usize, usize),
    hidden: Vec<HiddenCache<F>>,
    output_input: Matrix<F>,
    probabilities: Matrix<F>,
}

impl<F: Scalar> ForwardCache<F> {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn probabilities(&self) -> &Matrix<F> {
        &self.probabilities
    }

    /// Signs of every rectifier input and every pooling argmax. Two forward calls
    /// with equal signatures lie on the same linear piece of the network, which
    /// is what finite-difference checks need.
    pub fn kink_signature(&self) -> Vec<u32> {
        let mut sig = Vec::new();
        for stage in &self.stages {
            sig.extend(stage.pre_activation.as_slice().iter().map(|&v| (v > F::zero()) as u32));
            if let Some(memo) = stage.pool.memo() {
                sig.extend_from_slice(memo.positions());
            }
        }
        for h in &self.hidden {
            sig.extend(h.pre_activation.as_slice().iter().map(|&v| (v > F::zero()) as u32));
        }
        sig
    }
}

/// Runs the network on `inputs`.
///
/// Per conv-pool stage: conv, ReLU, max-pool, then max-pool dropout in training
/// mode. Then flatten, two (dense, ReLU, dropout) blocks and a final affine map
/// into softmax. Dropout masks are drawn from `seed`; inference ignores it.
pub fn forward<F: Scalar>(
    params: &ModelParams<F>,
    inputs: &Tensor3<F>,
    mode: Mode,
    seed: u64,
) -> Result<(Matrix<F>, ForwardCache<F>)> {
    let spec = &params.spec;
    if inputs.length() != spec.window_width || inputs.channels() != spec.in_channels {
        return Err(Error::config(
            "input",
            format!(
                "batch samples are {}x{}, network expects {}x{}",
                inputs.length(),
                inputs.channels(),
                spec.window_width,
                spec.in_channels
            ),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = &params.weights;

    let mut stages = Vec::with_capacity(3);
    let mut current = inputs.clone();
    for conv in &w.conv {
        let pre_activation = conv1d_forward(&current, conv)?;
        let mut activated = pre_activation.clone();
        relu_slice(activated.as_mut_slice());
        let mut pool = PoolSpec::new();
        let mut pooled = maxpool_forward(&activated, &mut pool)?;
        let dropout = DropoutMask::sample(pooled.as_slice().len(), spec.maxpool_dropout_rate, mode, &mut rng);
        dropout.apply(pooled.as_mut_slice());
        stages.push(StageCache {
            input: std::mem::replace(&mut current, pooled),
            pre_activation,
            pool,
            dropout,
        });
    }

    let flatten_shape = (current.length(), current.channels());
    let mut features = current.flatten();
    let mut hidden = Vec::with_capacity(2);
    for layer in &w.hidden {
        let pre_activation = dense_forward(&features, layer)?;
        let mut activated = pre_activation.clone();
        relu_slice(activated.as_mut_slice());
        let dropout = DropoutMask::sample(activated.as_slice().len(), spec.fc_dropout_rate, mode, &mut rng);
        dropout.apply(activated.as_mut_slice());
        hidden.push(HiddenCache {
            input: std::mem::replace(&mut features, activated),
            pre_activation,
            dropout,
        });
    }

    let logits = dense_forward(&features, &w.output)?;
    let probabilities = softmax_rows(&logits);
    let cache = ForwardCache {
        mode,
        stages,
        flatten_shape,
        hidden,
        output_input: features,
        probabilities: probabilities.clone(),
    };
    Ok((probabilities, cache))
}

/// Gradient of the mean cross-entropy with respect to every parameter.
///
/// Softmax and cross-entropy are fused: the logit gradient is `(p - y) / m`.
pub fn backward<F: Scalar>(params: &ModelParams<F>, cache: &ForwardCache<F>, labels: &[usize]) -> Result<Weights<F>> {
    let probs = &cache.probabilities;
    let m = probs.rows();
    if labels.len() != m {
        return Err(Error::InternalState(format!(
            "cache holds {m} samples but {} labels were given",
            labels.len()
        )));
    }
    if cache.stages.len() != 3 || cache.hidden.len() != 2 {
        return Err(Error::InternalState("incomplete forward cache".into()));
    }
    let w = &params.weights;
    let mut grads = Weights::zeros(&params.spec);

    let inv_m = F::one() / F::of(m as f64);
    let mut grad_logits = probs.clone();
    for (r, &label) in labels.iter().enumerate() {
        if label >= probs.cols() {
            return Err(Error::InternalState(format!("label {label} outside {} classes", probs.cols())));
        }
        let row = grad_logits.row_mut(r);
        row[label] -= F::one();
        for v in row.iter_mut() {
            *v *= inv_m;
        }
    }

    let (mut grad, g_out) = dense_backward(&grad_logits, &cache.output_input, &w.output)?;
    grads.output = g_out;

    for (i, h) in cache.hidden.iter().enumerate().rev() {
        h.dropout.apply(grad.as_mut_slice());
        relu_backward_slice(grad.as_mut_slice(), h.pre_activation.as_slice());
        let (g_in, g_layer) = dense_backward(&grad, &h.input, &w.hidden[i])?;
        grads.hidden[i] = g_layer;
        grad = g_in;
    }

    let (len, ch) = cache.flatten_shape;
    let mut grad_maps = grad.unflatten(len, ch)?;
    for (i, s) in cache.stages.iter().enumerate().rev() {
        s.dropout.apply(grad_maps.as_mut_slice());
        let mut g_act = maxpool_backward(&grad_maps, &s.pool)?;
        relu_backward_slice(g_act.as_mut_slice(), s.pre_activation.as_slice());
        let (g_in, g_conv) = conv1d_backward(&g_act, &s.input, &w.conv[i])?;
        grads.conv[i] = g_conv;
        grad_maps = g_in;
    }
    Ok(grads)
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Inference-mode class predictions, one per batch element.
pub fn predict<F: Scalar>(params: &ModelParams<F>, inputs: &Tensor3<F>) -> Result<Vec<usize>> {
    let (probs, _) = forward(params, inputs, Mode::Inference, 0)?;
    Ok((0..probs.rows()).map(|r| argmax(probs.row(r))).collect())
}

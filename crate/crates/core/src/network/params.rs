use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::arch::ArchitectureSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{ConvLayerParams, DenseLayerParams};

pub(crate) const CONV_NAMES: [&str; 3] = ["conv1", "conv2", "conv3"];
pub(crate) const HIDDEN_NAMES: [&str; 2] = ["fc1", "fc2"];
pub(crate) const OUTPUT_NAME: &str = "output";

/// One value per trainable scalar, laid out like the network. Used for the weights
/// themselves, their gradients, and both Adam moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<F> {
    pub conv: [ConvLayerParams<F>; 3],
    pub hidden: [DenseLayerParams<F>; 2],
    /// Final affine map to the class logits.
    pub output: DenseLayerParams<F>,
}

impl<F: Scalar> Weights<F> {
    pub fn zeros(spec: &ArchitectureSpec) -> Self {
        let c = spec.conv_channels;
        let [h1, h2] = spec.hidden_widths;
        Self {
            conv: [
                ConvLayerParams::zeros(CONV_NAMES[0], spec.in_channels, c[0]),
                ConvLayerParams::zeros(CONV_NAMES[1], c[0], c[1]),
                ConvLayerParams::zeros(CONV_NAMES[2], c[1], c[2]),
            ],
            hidden: [
                DenseLayerParams::zeros(HIDDEN_NAMES[0], spec.flatten_width(), h1),
                DenseLayerParams::zeros(HIDDEN_NAMES[1], h1, h2),
            ],
            output: DenseLayerParams::zeros(OUTPUT_NAME, h2, spec.class_count),
        }
    }

    /// Every parameter array in a fixed order: per layer, weights then biases.
    pub fn slices(&self) -> Vec<&[F]> {
        let mut out: Vec<&[F]> = Vec::with_capacity(12);
        for c in &self.conv {
            out.push(&c.kernels);
            out.push(&c.biases);
        }
        for d in self.hidden.iter().chain(std::iter::once(&self.output)) {
            out.push(&d.weights);
            out.push(&d.biases);
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [F]> {
        let mut out: Vec<&mut [F]> = Vec::with_capacity(12);
        for c in &mut self.conv {
            out.push(&mut c.kernels);
            out.push(&mut c.biases);
        }
        for d in self.hidden.iter_mut().chain(std::iter::once(&mut self.output)) {
            out.push(&mut d.weights);
            out.push(&mut d.biases);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn shapes_match(&self, other: &Weights<F>) -> bool {
        let a = self.slices();
        let b = other.slices();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Network parameters together with the optimizer state that belongs to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    pub spec: ArchitectureSpec,
    pub weights: Weights<F>,
    pub first_moment: Weights<F>,
    pub second_moment: Weights<F>,
    /// Number of optimizer steps applied so far.
    pub step: u64,
    pub init_seed: u64,
}

impl<F: Scalar> ModelParams<F> {
    pub fn from_weights(spec: ArchitectureSpec, weights: Weights<F>, init_seed: u64) -> Result<Self> {
        spec.validate()?;
        let zeros = Weights::zeros(&spec);
        if !zeros.shapes_match(&weights) {
            return Err(Error::config("parameters", "weight shapes do not match the architecture"));
        }
        Ok(Self {
            spec,
            first_moment: zeros.clone(),
            second_moment: zeros,
            weights,
            step: 0,
            init_seed,
        })
    }
}

/// Zero biases and Gaussian(0, 1/fan_in) weights, deterministic in `seed`.
///
/// Fan-in is `kernel_width * in_channels` for convolutions and `in_features`
/// for dense layers. Draws are made at 64-bit and rounded to `F`, so `f32` and
/// `f64` models built from the same seed agree up to rounding.
pub fn init_params<F: Scalar>(spec: &ArchitectureSpec, seed: u64) -> Result<ModelParams<F>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Weights::<F>::zeros(spec);
    let mut fill = |values: &mut [F], fan_in: usize| {
        let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("positive variance");
        for v in values {
            *v = F::of(normal.sample(&mut rng));
        }
    };
    for conv in &mut weights.conv {
        let fan_in = conv.fan_in();
        fill(&mut conv.kernels, fan_in);
    }
    for dense in weights.hidden.iter_mut().chain(std::iter::once(&mut weights.output)) {
        let fan_in = dense.in_features();
        fill(&mut dense.weights, fan_in);
    }
    ModelParams::from_weights(spec.clone(), weights, seed)
}

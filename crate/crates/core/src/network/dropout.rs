use rand::Rng;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    Inference,
}

/// Inverted dropout: kept activations are scaled by `1 / keep_probability`, so
/// inference is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    keep: Vec<bool>,
    keep_probability: f64,
    mode: Mode,
}

impl DropoutMask {
    pub fn identity() -> Self {
        Self {
            keep: Vec::new(),
            keep_probability: 1.0,
            mode: Mode::Inference,
        }
    }

    /// Draws one keep flag per activation. A zero drop rate or inference mode
    /// yields the identity mask without consuming randomness.
    pub fn sample<R: Rng + ?Sized>(len: usize, drop_rate: f64, mode: Mode, rng: &mut R) -> Self {
        if mode == Mode::Inference || drop_rate == 0.0 {
            return Self::identity();
        }
        let keep_probability = 1.0 - drop_rate;
        let keep = (0..len).map(|_| rng.random::<f64>() < keep_probability).collect();
        Self {
            keep,
            keep_probability,
            mode: Mode::Training,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn keep_probability(&self) -> f64 {
        self.keep_probability
    }

    pub fn keep_flags(&self) -> &[bool] {
        &self.keep
    }

    pub fn is_identity(&self) -> bool {
        self.keep.is_empty()
    }

    /// Applies the mask in place. The same call implements the backward pass,
    /// since the map is diagonal.
    pub fn apply<F: Scalar>(&self, values: &mut [F]) {
        if self.is_identity() {
            return;
        }
        debug_assert_eq!(values.len(), self.keep.len());
        let scale = F::of(1.0 / self.keep_probability);
        for (v, &k) in values.iter_mut().zip(&self.keep) {
            *v = if k { *v * scale } else { F::zero() };
        }
    }
}

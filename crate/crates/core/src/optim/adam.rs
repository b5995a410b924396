use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ModelParams, Weights};
use crate::scalar::Scalar;

/// Where the validation split is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationSplit {
    /// Individual crops, stratified by class.
    Crop,
    /// Whole trials (all crops of a trial on one side), stratified by class.
    Trial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Stabilizer added to the root of the second-moment estimate.
    pub epsilon_hat: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    pub validation_split: ValidationSplit,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl OptimizerConfig {
    /// Full-length schedule: batches of 600 for 300 epochs.
    pub fn paper() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_hat: 1e-8,
            batch_size: 600,
            epochs: 300,
            seed: 0,
            validation_fraction: 0.1,
            validation_split: ValidationSplit::Crop,
        }
    }

    /// Short schedule for laptops and CI.
    pub fn desk() -> Self {
        Self {
            batch_size: 64,
            epochs: 50,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config("optimizer", m));
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail(format!("decay rates must lie in [0, 1), got {} and {}", self.beta1, self.beta2));
        }
        if !(self.epsilon_hat > 0.0) {
            return fail("epsilon_hat must be positive".into());
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return fail(format!("validation fraction {} outside [0, 1)", self.validation_fraction));
        }
        Ok(())
    }
}

/// One Adam update with bias-corrected moments:
///
/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`,
/// `w <- w - lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step<F: Scalar>(params: &mut ModelParams<F>, grads: &Weights<F>, config: &OptimizerConfig) -> Result<()> {
    if !params.weights.shapes_match(grads)
        || !params.weights.shapes_match(&params.first_moment)
        || !params.weights.shapes_match(&params.second_moment)
    {
        return Err(Error::InternalState(
            "gradient or moment shapes do not match the parameters".into(),
        ));
    }
    params.step += 1;
    let t = params.step as i32;
    let b1 = F::of(config.beta1);
    let b2 = F::of(config.beta2);
    let one = F::one();
    let correction1 = F::of(1.0 - config.beta1.powi(t));
    let correction2 = F::of(1.0 - config.beta2.powi(t));
    let lr = F::of(config.learning_rate);
    let eps = F::of(config.epsilon_hat);

    let ws = params.weights.slices_mut();
    let ms = params.first_moment.slices_mut();
    let vs = params.second_moment.slices_mut();
    for (((w, m), v), g) in ws.into_iter().zip(ms).zip(vs).zip(grads.slices()) {
        for i in 0..w.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (one - b1) * gi;
            v[i] = b2 * v[i] + (one - b2) * gi * gi;
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            w[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, ArchitectureSpec};

    fn params() -> ModelParams<f64> {
        init_params(&ArchitectureSpec::for_window(30), 2).unwrap()
    }

    fn filled(spec: &ArchitectureSpec, value: f64) -> Weights<f64> {
        let mut g = Weights::zeros(spec);
        for s in g.slices_mut() {
            s.fill(value);
        }
        g
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut p = params();
        let before = p.weights.clone();
        let g = Weights::zeros(&p.spec);
        for _ in 0..3 {
            adam_step(&mut p, &g, &OptimizerConfig::paper()).unwrap();
        }
        assert_eq!(p.weights, before);
        assert_eq!(p.step, 3);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = params();
        let before = p.weights.clone();
        let g = filled(&p.spec, 1.0);
        adam_step(&mut p, &g, &OptimizerConfig::paper()).unwrap();
        for (a, b) in p.weights.slices().iter().zip(before.slices()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!(((x - y) + 1e-4).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn constant_gradient_update_tends_to_learning_rate_independent_of_scale() {
        for scale in [1e-3, 1.0, 250.0] {
            let mut p = params();
            let g = filled(&p.spec, scale);
            let mut last = 0.0;
            for _ in 0..2000 {
                let before = p.weights.output.biases[0];
                adam_step(&mut p, &g, &OptimizerConfig::paper()).unwrap();
                last = before - p.weights.output.biases[0];
            }
            assert!((last - 1e-4).abs() < 1e-6, "scale {scale}: step {last}");
        }
    }

    #[test]
    fn shape_mismatch_is_internal_state_error() {
        let mut p = params();
        let g = Weights::zeros(&ArchitectureSpec::for_window(60));
        assert!(matches!(
            adam_step(&mut p, &g, &OptimizerConfig::paper()),
            Err(Error::InternalState(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::paper().validate().is_ok());
        assert!(OptimizerConfig { learning_rate: 0.0, ..OptimizerConfig::paper() }.validate().is_err());
        assert!(OptimizerConfig { beta2: 1.0, ..OptimizerConfig::paper() }.validate().is_err());
        assert!(OptimizerConfig { batch_size: 0, ..OptimizerConfig::paper() }.validate().is_err());
    }
}

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Floor applied to probabilities before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub sum: f64,
    pub mean: f64,
}

/// Multinomial cross-entropy `-sum_i log p(label_i | x_i)`.
pub fn cross_entropy_loss<F: Scalar>(probabilities: &Matrix<F>, labels: &[usize]) -> Result<LossValue> {
    if probabilities.rows() != labels.len() {
        return Err(Error::InternalState(format!(
            "{} probability rows for {} labels",
            probabilities.rows(),
            labels.len()
        )));
    }
    let mut sum = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        if label >= probabilities.cols() {
            return Err(Error::Input(format!("label {label} outside {} classes", probabilities.cols())));
        }
        sum -= probabilities.get(r, label).as_f64().max(LOG_CLAMP).ln();
    }
    let mean = if labels.is_empty() { 0.0 } else { sum / labels.len() as f64 };
    Ok(LossValue { sum, mean })
}

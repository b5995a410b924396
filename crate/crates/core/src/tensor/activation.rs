use super::array::{Matrix, Tensor3};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn relu_slice<F: Scalar>(values: &mut [F]) {
    for v in values {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

/// Passes `grad` through where `input > 0`; the subgradient at zero is zero.
pub fn relu_backward_slice<F: Scalar>(grad: &mut [F], input: &[F]) {
    for (g, &x) in grad.iter_mut().zip(input) {
        if x <= F::zero() {
            *g = F::zero();
        }
    }
}

pub fn relu<F: Scalar>(input: &Tensor3<F>) -> Tensor3<F> {
    let mut out = input.clone();
    relu_slice(out.as_mut_slice());
    out
}

pub fn relu_backward<F: Scalar>(grad_out: &Tensor3<F>, input: &Tensor3<F>) -> Result<Tensor3<F>> {
    if grad_out.shape() != input.shape() {
        return Err(Error::config(
            "relu",
            format!("gradient {:?} vs input {:?}", grad_out.shape(), input.shape()),
        ));
    }
    let mut grad = grad_out.clone();
    relu_backward_slice(grad.as_mut_slice(), input.as_slice());
    Ok(grad)
}

pub fn relu_matrix<F: Scalar>(input: &Matrix<F>) -> Matrix<F> {
    let mut out = input.clone();
    relu_slice(out.as_mut_slice());
    out
}

pub fn relu_matrix_backward<F: Scalar>(grad_out: &Matrix<F>, input: &Matrix<F>) -> Result<Matrix<F>> {
    if (grad_out.rows(), grad_out.cols()) != (input.rows(), input.cols()) {
        return Err(Error::config("relu", "gradient and input shapes differ"));
    }
    let mut grad = grad_out.clone();
    relu_backward_slice(grad.as_mut_slice(), input.as_slice());
    Ok(grad)
}

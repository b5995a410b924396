//! Fully-connected affine map `out = input * weights + biases`.

use super::array::{axpy, dot, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `weights` is row-major `in_features x out_features`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams<F> {
    name: &'static str,
    in_features: usize,
    out_features: usize,
    pub weights: Vec<F>,
    pub biases: Vec<F>,
}

impl<F: Scalar> DenseLayerParams<F> {
    pub fn zeros(name: &'static str, in_features: usize, out_features: usize) -> Self {
        Self {
            name,
            in_features,
            out_features,
            weights: vec![F::zero(); in_features * out_features],
            biases: vec![F::zero(); out_features],
        }
    }

    pub fn new(
        name: &'static str,
        in_features: usize,
        out_features: usize,
        weights: Vec<F>,
        biases: Vec<F>,
    ) -> Result<Self> {
        if in_features == 0 || out_features == 0 {
            return Err(Error::config(name, "feature counts must be positive"));
        }
        if weights.len() != in_features * out_features || biases.len() != out_features {
            return Err(Error::config(
                name,
                format!(
                    "expected {in_features}x{out_features} weights and {out_features} biases, got {} and {}",
                    weights.len(),
                    biases.len()
                ),
            ));
        }
        Ok(Self {
            name,
            in_features,
            out_features,
            weights,
            biases,
        })
    }

    #[inline]
    pub fn name(&self) -> &'static str {
        self.name
    }

    #[inline]
    pub fn in_features(&self) -> usize {
        self.in_features
    }

    #[inline]
    pub fn out_features(&self) -> usize {
        self.out_features
    }

    #[inline]
    fn weight_row(&self, i: usize) -> &[F] {
        &self.weights[i * self.out_features..(i + 1) * self.out_features]
    }
}

pub fn dense_forward<F: Scalar>(input: &Matrix<F>, params: &DenseLayerParams<F>) -> Result<Matrix<F>> {
    if input.cols() != params.in_features {
        return Err(Error::config(
            params.name,
            format!(
                "input width {} does not match {} in-features",
                input.cols(),
                params.in_features
            ),
        ));
    }
    let mut out = Matrix::zeros(input.rows(), params.out_features);
    for r in 0..input.rows() {
        let x = input.row(r);
        let y = out.row_mut(r);
        y.copy_from_slice(&params.biases);
        for (i, &xi) in x.iter().enumerate() {
            if xi != F::zero() {
                axpy(xi, params.weight_row(i), y);
            }
        }
    }
    Ok(out)
}

/// Returns `(grad_input, grad_params)` for upstream `grad_out`.
pub fn dense_backward<F: Scalar>(
    grad_out: &Matrix<F>,
    input: &Matrix<F>,
    params: &DenseLayerParams<F>,
) -> Result<(Matrix<F>, DenseLayerParams<F>)> {
    if input.cols() != params.in_features
        || grad_out.cols() != params.out_features
        || grad_out.rows() != input.rows()
    {
        return Err(Error::config(
            params.name,
            format!(
                "backward shapes: input {}x{}, gradient {}x{}, layer {}x{}",
                input.rows(),
                input.cols(),
                grad_out.rows(),
                grad_out.cols(),
                params.in_features,
                params.out_features
            ),
        ));
    }
    let out_f = params.out_features;
    let mut grad_input = Matrix::zeros(input.rows(), params.in_features);
    let mut grads = DenseLayerParams::zeros(params.name, params.in_features, out_f);
    for r in 0..input.rows() {
        let x = input.row(r);
        let g = grad_out.row(r);
        axpy(F::one(), g, &mut grads.biases);
        let gi = grad_input.row_mut(r);
        for (i, &xi) in x.iter().enumerate() {
            if xi != F::zero() {
                axpy(xi, g, &mut grads.weights[i * out_f..(i + 1) * out_f]);
            }
            gi[i] = dot(params.weight_row(i), g);
        }
    }
    Ok((grad_input, grads))
}

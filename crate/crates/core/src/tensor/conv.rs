//! Valid 1-D convolution over the time axis with kernel width 2 and stride 1.

use super::array::{axpy, dot, Tensor3};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const KERNEL_WIDTH: usize = 2;
pub const STRIDE: usize = 1;

/// Kernels are stored `out_channels x kernel_width x in_channels`, so the kernel for
/// one output channel is a contiguous `2 * in_channels` run that lines up with two
/// consecutive input frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerParams<F> {
    name: &'static str,
    in_channels: usize,
    out_channels: usize,
    pub kernels: Vec<F>,
    pub biases: Vec<F>,
}

impl<F: Scalar> ConvLayerParams<F> {
    pub fn zeros(name: &'static str, in_channels: usize, out_channels: usize) -> Self {
        Self {
            name,
            in_channels,
            out_channels,
            kernels: vec![F::zero(); out_channels * KERNEL_WIDTH * in_channels],
            biases: vec![F::zero(); out_channels],
        }
    }

    pub fn new(
        name: &'static str,
        in_channels: usize,
        out_channels: usize,
        kernels: Vec<F>,
        biases: Vec<F>,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::config(name, "channel counts must be positive"));
        }
        if kernels.len() != out_channels * KERNEL_WIDTH * in_channels {
            return Err(Error::config(
                name,
                format!(
                    "expected {} kernel weights, got {}",
                    out_channels * KERNEL_WIDTH * in_channels,
                    kernels.len()
                ),
            ));
        }
        if biases.len() != out_channels {
            return Err(Error::config(
                name,
                format!("expected {out_channels} biases, got {}", biases.len()),
            ));
        }
        Ok(Self {
            name,
            in_channels,
            out_channels,
            kernels,
            biases,
        })
    }

    #[inline]
    pub fn name(&self) -> &'static str {
        self.name
    }

    #[inline]
    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    #[inline]
    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    #[inline]
    pub fn kernel_width(&self) -> usize {
        KERNEL_WIDTH
    }

    #[inline]
    pub fn stride(&self) -> usize {
        STRIDE
    }

    /// Fan-in of one output unit: `kernel_width * in_channels`.
    pub fn fan_in(&self) -> usize {
        KERNEL_WIDTH * self.in_channels
    }

    pub fn kernel(&self, out: usize) -> &[F] {
        let span = KERNEL_WIDTH * self.in_channels;
        &self.kernels[out * span..(out + 1) * span]
    }

    pub fn output_length(input_length: usize) -> usize {
        input_length + 1 - KERNEL_WIDTH
    }
}

fn check_input<F: Scalar>(input: &Tensor3<F>, params: &ConvLayerParams<F>) -> Result<()> {
    if input.channels() != params.in_channels {
        return Err(Error::config(
            params.name,
            format!(
                "input has {} channels, layer expects {}",
                input.channels(),
                params.in_channels
            ),
        ));
    }
    if input.length() < KERNEL_WIDTH {
        return Err(Error::config(
            params.name,
            format!("input length {} shorter than kernel width", input.length()),
        ));
    }
    Ok(())
}

/// `out[b,t,o] = bias[o] + sum_{k,c} input[b,t+k,c] * kernel[o,k,c]`, no padding.
pub fn conv1d_forward<F: Scalar>(input: &Tensor3<F>, params: &ConvLayerParams<F>) -> Result<Tensor3<F>> {
    check_input(input, params)?;
    let out_len = ConvLayerParams::<F>::output_length(input.length());
    let (batch, _, cin) = input.shape();
    let span = KERNEL_WIDTH * cin;
    let mut out = Tensor3::zeros(batch, out_len, params.out_channels);
    let src = input.as_slice();
    let dst = out.as_mut_slice();
    for b in 0..batch {
        for t in 0..out_len {
            let start = input.index(b, t, 0);
            let window = &src[start..start + span];
            let row = &mut dst[(b * out_len + t) * params.out_channels..][..params.out_channels];
            for (o, cell) in row.iter_mut().enumerate() {
                *cell = params.biases[o] + dot(window, params.kernel(o));
            }
        }
    }
    Ok(out)
}

/// Reverse-mode pass of [`conv1d_forward`]. Returns the input gradient and a
/// parameter-shaped gradient.
pub fn conv1d_backward<F: Scalar>(
    grad_out: &Tensor3<F>,
    input: &Tensor3<F>,
    params: &ConvLayerParams<F>,
) -> Result<(Tensor3<F>, ConvLayerParams<F>)> {
    check_input(input, params)?;
    let out_len = ConvLayerParams::<F>::output_length(input.length());
    let expected = (input.batch(), out_len, params.out_channels);
    if grad_out.shape() != expected {
        return Err(Error::config(
            params.name,
            format!(
                "gradient shape {:?} does not match forward output {:?}",
                grad_out.shape(),
                expected
            ),
        ));
    }
    let cin = params.in_channels;
    let span = KERNEL_WIDTH * cin;
    let mut grad_input = Tensor3::zeros(input.batch(), input.length(), cin);
    let mut grads = ConvLayerParams::zeros(params.name, cin, params.out_channels);
    let src = input.as_slice();
    let g = grad_out.as_slice();
    for b in 0..input.batch() {
        for t in 0..out_len {
            let start = input.index(b, t, 0);
            let window = &src[start..start + span];
            let g_row = &g[(b * out_len + t) * params.out_channels..][..params.out_channels];
            let gi = &mut grad_input.as_mut_slice()[start..start + span];
            for (o, &go) in g_row.iter().enumerate() {
                if go == F::zero() {
                    continue;
                }
                grads.biases[o] += go;
                axpy(go, window, &mut grads.kernels[o * span..(o + 1) * span]);
                axpy(go, params.kernel(o), gi);
            }
        }
    }
    Ok((grad_input, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{central_difference, max_relative_error, random_vec};

    fn single(values: &[f64]) -> Tensor3<f64> {
        Tensor3::from_vec(1, values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn hand_convolution() {
        let params = ConvLayerParams::new("conv", 1, 1, vec![1.0, 1.0], vec![0.0]).unwrap();
        let out = conv1d_forward(&single(&[1.0, 2.0, 3.0]), &params).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 5.0]);
    }

    #[test]
    fn zero_kernel_gives_zero_output() {
        let params = ConvLayerParams::<f64>::zeros("conv", 3, 4);
        let input = Tensor3::from_vec(2, 7, 3, random_vec(42, 2 * 7 * 3)).unwrap();
        let out = conv1d_forward(&input, &params).unwrap();
        assert_eq!(out.shape(), (2, 6, 4));
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn window_sixty_shape() {
        let params = ConvLayerParams::<f64>::zeros("conv1", 38, 38);
        let input = Tensor3::zeros(1, 60, 38);
        assert_eq!(conv1d_forward(&input, &params).unwrap().shape(), (1, 59, 38));
    }

    #[test]
    fn channel_mismatch_names_layer() {
        let params = ConvLayerParams::<f64>::zeros("conv2", 38, 76);
        let err = conv1d_forward(&Tensor3::zeros(1, 10, 37), &params).unwrap_err();
        assert!(err.to_string().contains("conv2"), "{err}");
        assert!(conv1d_forward(&Tensor3::zeros(1, 1, 38), &params).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let params = ConvLayerParams::new("conv", 2, 3, random_vec(1, 12), random_vec(2, 3)).unwrap();
        let input = Tensor3::from_vec(2, 5, 2, random_vec(3, 20)).unwrap();
        let (gi, gp) = conv1d_backward(&Tensor3::zeros(2, 4, 3), &input, &params).unwrap();
        assert!(gi.as_slice().iter().all(|&v| v == 0.0));
        assert!(gp.kernels.iter().chain(&gp.biases).all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_kernel_derivatives() {
        let params = ConvLayerParams::new("conv", 1, 1, vec![0.3, -0.7], vec![0.0]).unwrap();
        let (_, gp) = conv1d_backward(&single(&[1.0]), &single(&[1.0, 2.0]), &params).unwrap();
        assert_eq!(gp.kernels, vec![1.0, 2.0]);
        assert_eq!(gp.biases, vec![1.0]);
    }

    #[test]
    fn backward_rejects_wrong_gradient_shape() {
        let params = ConvLayerParams::<f64>::zeros("conv", 1, 1);
        assert!(conv1d_backward(&single(&[1.0, 1.0]), &single(&[1.0, 2.0]), &params).is_err());
    }

    #[test]
    fn matches_finite_differences() {
        let (b, len, cin, cout) = (2, 6, 3, 4);
        let input = Tensor3::from_vec(b, len, cin, random_vec(10, b * len * cin)).unwrap();
        let params =
            ConvLayerParams::new("conv", cin, cout, random_vec(11, cout * 2 * cin), random_vec(12, cout)).unwrap();
        let upstream = Tensor3::from_vec(b, len - 1, cout, random_vec(13, b * (len - 1) * cout)).unwrap();
        // Scalar objective: <upstream, conv(input)>.
        let objective = |inp: &Tensor3<f64>, p: &ConvLayerParams<f64>| -> f64 {
            let out = conv1d_forward(inp, p).unwrap();
            out.as_slice().iter().zip(upstream.as_slice()).map(|(a, b)| a * b).sum()
        };
        let (gi, gp) = conv1d_backward(&upstream, &input, &params).unwrap();

        let numeric_input = central_difference(input.as_slice(), 1e-5, |x| {
            objective(&Tensor3::from_vec(b, len, cin, x.to_vec()).unwrap(), &params)
        });
        assert!(max_relative_error(gi.as_slice(), &numeric_input) < 1e-6);

        let numeric_kernels = central_difference(&params.kernels, 1e-5, |k| {
            let mut p = params.clone();
            p.kernels.copy_from_slice(k);
            objective(&input, &p)
        });
        assert!(max_relative_error(&gp.kernels, &numeric_kernels) < 1e-6);

        let numeric_biases = central_difference(&params.biases, 1e-5, |bias| {
            let mut p = params.clone();
            p.biases.copy_from_slice(bias);
            objective(&input, &p)
        });
        assert!(max_relative_error(&gp.biases, &numeric_biases) < 1e-6);
    }

    #[test]
    fn forward_is_linear_in_input() {
        let params = ConvLayerParams::new("conv", 2, 2, random_vec(5, 8), vec![0.0; 2]).unwrap();
        let a = Tensor3::from_vec(1, 4, 2, random_vec(6, 8)).unwrap();
        let bt = Tensor3::from_vec(1, 4, 2, random_vec(7, 8)).unwrap();
        let sum: Vec<f64> = a.as_slice().iter().zip(bt.as_slice()).map(|(x, y)| 2.0 * x + y).collect();
        let lhs = conv1d_forward(&Tensor3::from_vec(1, 4, 2, sum).unwrap(), &params).unwrap();
        let fa = conv1d_forward(&a, &params).unwrap();
        let fb = conv1d_forward(&bt, &params).unwrap();
        for ((l, x), y) in lhs.as_slice().iter().zip(fa.as_slice()).zip(fb.as_slice()) {
            assert!((l - (2.0 * x + y)).abs() < 1e-12);
        }
    }
}

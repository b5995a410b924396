//! Non-overlapping max-pooling (size 2, stride 2) along time.

use super::array::Tensor3;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const POOL_SIZE: usize = 2;
pub const POOL_STRIDE: usize = 2;

/// Argmax positions recorded by a forward pass.
///
/// `positions[(b * out_len + t) * channels + c]` is the input time index that won
/// the patch feeding output `(b, t, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolMemo {
    input_shape: (usize, usize, usize),
    positions: Vec<u32>,
}

impl PoolMemo {
    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn output_shape(&self) -> (usize, usize, usize) {
        let (b, len, c) = self.input_shape;
        (b, len / POOL_STRIDE, c)
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoolSpec {
    memo: Option<PoolMemo>,
}

impl PoolSpec {
    pub fn new() -> Self {
        Self { memo: None }
    }

    #[inline]
    pub fn size(&self) -> usize {
        POOL_SIZE
    }

    #[inline]
    pub fn stride(&self) -> usize {
        POOL_STRIDE
    }

    pub fn memo(&self) -> Option<&PoolMemo> {
        self.memo.as_ref()
    }

    pub fn clear(&mut self) {
        self.memo = None;
    }

    pub fn output_length(input_length: usize) -> usize {
        input_length / POOL_STRIDE
    }
}

/// Takes the maximum of each channel over consecutive frame pairs. A trailing odd
/// frame is dropped and ties go to the earlier frame.
pub fn maxpool_forward<F: Scalar>(input: &Tensor3<F>, spec: &mut PoolSpec) -> Result<Tensor3<F>> {
    let (batch, len, ch) = input.shape();
    if len < POOL_SIZE {
        return Err(Error::config(
            "max-pool",
            format!("input length {len} shorter than pool size"),
        ));
    }
    let out_len = PoolSpec::output_length(len);
    let mut out = Tensor3::zeros(batch, out_len, ch);
    let mut positions = vec![0u32; batch * out_len * ch];
    let src = input.as_slice();
    for b in 0..batch {
        for t in 0..out_len {
            let first = input.index(b, POOL_STRIDE * t, 0);
            let second = first + ch;
            let dst = (b * out_len + t) * ch;
            for c in 0..ch {
                let (x0, x1) = (src[first + c], src[second + c]);
                let (value, offset) = if x1 > x0 { (x1, 1) } else { (x0, 0) };
                out.as_mut_slice()[dst + c] = value;
                positions[dst + c] = (POOL_STRIDE * t + offset) as u32;
            }
        }
    }
    spec.memo = Some(PoolMemo {
        input_shape: (batch, len, ch),
        positions,
    });
    Ok(out)
}

/// Routes every upstream gradient to the position that won its patch.
pub fn maxpool_backward<F: Scalar>(grad_out: &Tensor3<F>, spec: &PoolSpec) -> Result<Tensor3<F>> {
    let memo = spec
        .memo
        .as_ref()
        .ok_or_else(|| Error::InternalState("max-pool backward called without a forward memo".into()))?;
    if grad_out.shape() != memo.output_shape() {
        return Err(Error::InternalState(format!(
            "max-pool memo is stale: gradient shape {:?}, memo expects {:?}",
            grad_out.shape(),
            memo.output_shape()
        )));
    }
    let (batch, len, ch) = memo.input_shape;
    let out_len = len / POOL_STRIDE;
    let mut grad_in = Tensor3::zeros(batch, len, ch);
    let g = grad_out.as_slice();
    for b in 0..batch {
        for t in 0..out_len {
            let row = (b * out_len + t) * ch;
            for c in 0..ch {
                let src_t = memo.positions[row + c] as usize;
                let i = grad_in.index(b, src_t, c);
                grad_in.as_mut_slice()[i] += g[row + c];
            }
        }
    }
    Ok(grad_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{central_difference, max_relative_error, random_vec};

    fn single(values: &[f64]) -> Tensor3<f64> {
        Tensor3::from_vec(1, values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn max_of_pairs() {
        let mut spec = PoolSpec::new();
        let out = maxpool_forward(&single(&[1.0, 3.0, 2.0, 5.0]), &mut spec).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 5.0]);
        assert_eq!(spec.memo().unwrap().positions(), &[1, 3]);
    }

    #[test]
    fn odd_length_drops_trailing_frame() {
        let mut spec = PoolSpec::new();
        let out = maxpool_forward(&Tensor3::<f64>::zeros(2, 59, 3), &mut spec).unwrap();
        assert_eq!(out.shape(), (2, 29, 3));
        let out = maxpool_forward(&single(&[0.0, 1.0, 9.0]), &mut spec).unwrap();
        assert_eq!(out.as_slice(), &[1.0]);
    }

    #[test]
    fn tie_goes_to_earlier_frame() {
        let mut spec = PoolSpec::new();
        let out = maxpool_forward(&single(&[2.0, 2.0]), &mut spec).unwrap();
        assert_eq!(out.as_slice(), &[2.0]);
        assert_eq!(spec.memo().unwrap().positions(), &[0]);
    }

    #[test]
    fn backward_routes_to_argmax() {
        let mut spec = PoolSpec::new();
        maxpool_forward(&single(&[2.0, 5.0]), &mut spec).unwrap();
        let g = maxpool_backward(&single(&[1.0]), &spec).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 1.0]);
        let g = maxpool_backward(&single(&[0.0]), &spec).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_without_or_with_stale_memo_fails() {
        let spec = PoolSpec::new();
        assert!(matches!(
            maxpool_backward(&single(&[1.0]), &spec),
            Err(Error::InternalState(_))
        ));
        let mut spec = PoolSpec::new();
        maxpool_forward(&single(&[1.0, 2.0, 3.0, 4.0]), &mut spec).unwrap();
        assert!(matches!(
            maxpool_backward(&single(&[1.0]), &spec),
            Err(Error::InternalState(_))
        ));
    }

    #[test]
    fn too_short_input_is_rejected() {
        assert!(maxpool_forward(&single(&[1.0]), &mut PoolSpec::new()).is_err());
    }

    #[test]
    fn matches_finite_differences_away_from_ties() {
        let (b, len, ch) = (2, 7, 3);
        // Random values are distinct with probability one; gaps exceed the step size.
        let input = random_vec(21, b * len * ch);
        let upstream = random_vec(22, b * (len / 2) * ch);
        let mut spec = PoolSpec::new();
        maxpool_forward(&Tensor3::from_vec(b, len, ch, input.clone()).unwrap(), &mut spec).unwrap();
        let g = maxpool_backward(
            &Tensor3::from_vec(b, len / 2, ch, upstream.clone()).unwrap(),
            &spec,
        )
        .unwrap();
        let numeric = central_difference(&input, 1e-6, |x| {
            let out = maxpool_forward(
                &Tensor3::from_vec(b, len, ch, x.to_vec()).unwrap(),
                &mut PoolSpec::new(),
            )
            .unwrap();
            out.as_slice().iter().zip(&upstream).map(|(a, u)| a * u).sum()
        });
        assert!(max_relative_error(g.as_slice(), &numeric) < 1e-6);
    }
}

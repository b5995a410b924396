use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Batch of multichannel sequences stored batch-major, then time, then channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<F> {
    batch: usize,
    length: usize,
    channels: usize,
    values: Vec<F>,
}

impl<F: Scalar> Tensor3<F> {
    pub fn zeros(batch: usize, length: usize, channels: usize) -> Self {
        Self {
            batch,
            length,
            channels,
            values: vec![F::zero(); batch * length * channels],
        }
    }

    pub fn from_vec(batch: usize, length: usize, channels: usize, values: Vec<F>) -> Result<Self> {
        if values.len() != batch * length * channels {
            return Err(Error::config(
                "tensor",
                format!(
                    "{} values cannot fill shape {batch}x{length}x{channels}",
                    values.len()
                ),
            ));
        }
        Ok(Self {
            batch,
            length,
            channels,
            values,
        })
    }

    #[inline]
    pub fn batch(&self) -> usize {
        self.batch
    }

    #[inline]
    pub fn length(&self) -> usize {
        self.length
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.length, self.channels)
    }

    #[inline]
    pub fn as_slice(&self) -> &[F] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<F> {
        self.values
    }

    #[inline]
    pub fn index(&self, b: usize, t: usize, c: usize) -> usize {
        (b * self.length + t) * self.channels + c
    }

    #[inline]
    pub fn get(&self, b: usize, t: usize, c: usize) -> F {
        self.values[self.index(b, t, c)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, t: usize, c: usize, value: F) {
        let i = self.index(b, t, c);
        self.values[i] = value;
    }

    /// One batch element as a `length x channels` row-major slice.
    pub fn sample(&self, b: usize) -> &[F] {
        let stride = self.length * self.channels;
        &self.values[b * stride..(b + 1) * stride]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Reinterprets each sample as one flat feature row (time-major, channel-minor).
    pub fn flatten(self) -> Matrix<F> {
        Matrix {
            rows: self.batch,
            cols: self.length * self.channels,
            values: self.values,
        }
    }
}

/// Row-major `rows x cols` matrix; rows are batch elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    values: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<F>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::config(
                "matrix",
                format!("{} values cannot fill shape {rows}x{cols}", values.len()),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[F] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<F> {
        self.values
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[F] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> F {
        self.values[r * self.cols + c]
    }

    /// Inverse of [`Tensor3::flatten`].
    pub fn unflatten(self, length: usize, channels: usize) -> Result<Tensor3<F>> {
        if length * channels != self.cols {
            return Err(Error::config(
                "flatten",
                format!(
                    "width {} does not factor as {length}x{channels}",
                    self.cols
                ),
            ));
        }
        Tensor3::from_vec(self.rows, length, channels, self.values)
    }
}

/// Inner product with eight independent partial sums (fixed summation order).
#[inline]
pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut lanes = [F::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            lanes[k] += x[k] * y[k];
        }
    }
    let mut tail = F::zero();
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += *x * *y;
    }
    ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7])) + tail
}

#[inline]
pub(crate) fn axpy<F: Scalar>(alpha: F, x: &[F], y: &mut [F]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

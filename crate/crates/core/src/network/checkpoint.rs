//! Versioned binary container for a model and its optimizer state.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "SKNTCKPT" | version u32 | scalar width u8
//! spec length u32 | spec JSON bytes
//! init seed u64 | train seed u64 | step u64
//! weights, first moment, second moment: per array, length u64 then values
//! ```

use std::path::Path;

use super::arch::ArchitectureSpec;
use super::params::{ModelParams, Weights};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"SKNTCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub params: ModelParams<F>,
    /// Seed that drove shuffling, validation splitting and dropout.
    pub train_seed: u64,
}

impl<F: Scalar> Checkpoint<F> {
    pub fn new(params: ModelParams<F>, train_seed: u64) -> Self {
        Self { params, train_seed }
    }

    pub fn encode(&self) -> Vec<u8> {
        let p = &self.params;
        let spec = serde_json::to_vec(&p.spec).expect("architecture spec serializes");
        let mut out = Vec::with_capacity(64 + spec.len() + 3 * F::BYTES * p.weights.param_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(F::WIDTH_TAG);
        out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
        out.extend_from_slice(&spec);
        for v in [p.init_seed, self.train_seed, p.step] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for set in [&p.weights, &p.first_moment, &p.second_moment] {
            for slice in set.slices() {
                out.extend_from_slice(&(slice.len() as u64).to_le_bytes());
                for &v in slice {
                    v.write_le(&mut out);
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(corrupt("missing checkpoint magic"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(corrupt(format!("unsupported checkpoint version {version}")));
        }
        let width = r.take(1)?[0];
        if width != F::WIDTH_TAG {
            return Err(corrupt(format!(
                "checkpoint holds {width}-bit scalars, expected {}",
                F::WIDTH_TAG
            )));
        }
        let spec_len = r.u32()? as usize;
        let spec: ArchitectureSpec = serde_json::from_slice(r.take(spec_len)?)
            .map_err(|e| corrupt(format!("architecture block: {e}")))?;
        spec.validate()?;
        let init_seed = r.u64()?;
        let train_seed = r.u64()?;
        let step = r.u64()?;
        let mut sets = [Weights::zeros(&spec), Weights::zeros(&spec), Weights::zeros(&spec)];
        for set in &mut sets {
            for slice in set.slices_mut() {
                let n = r.u64()? as usize;
                if n != slice.len() {
                    return Err(corrupt(format!("array of {n} values where {} expected", slice.len())));
                }
                let raw = r.take(n * F::BYTES)?;
                for (dst, chunk) in slice.iter_mut().zip(raw.chunks_exact(F::BYTES)) {
                    *dst = F::read_le(chunk);
                }
            }
        }
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes after checkpoint payload"));
        }
        let [weights, first_moment, second_moment] = sets;
        Ok(Self {
            params: ModelParams {
                spec,
                weights,
                first_moment,
                second_moment,
                step,
                init_seed,
            },
            train_seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn corrupt(message: impl Into<String>) -> Error {
    Error::Input(format!("checkpoint: {}", message.into()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(corrupt("truncated")),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    #[test]
    fn write_then_reload_is_bit_exact() {
        let spec = ArchitectureSpec::for_window(30);
        let mut params = init_params::<f64>(&spec, 4).unwrap();
        params.step = 17;
        params.first_moment.conv[1].kernels[3] = 1e-300;
        params.second_moment.output.biases[2] = -0.0;
        let ckpt = Checkpoint::new(params, 99);
        let bytes = ckpt.encode();
        let back = Checkpoint::<f64>::decode(&bytes).unwrap();
        assert_eq!(back.encode(), bytes);
        assert_eq!(back, ckpt);
    }

    #[test]
    fn rejects_width_mismatch_and_truncation() {
        let spec = ArchitectureSpec::for_window(30);
        let bytes = Checkpoint::new(init_params::<f32>(&spec, 1).unwrap(), 0).encode();
        assert!(Checkpoint::<f64>::decode(&bytes).is_err());
        assert!(Checkpoint::<f32>::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::<f32>::decode(&bad).is_err());
        assert!(Checkpoint::<f32>::decode(&bytes).is_ok());
    }
}

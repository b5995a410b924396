//! Scalar abstraction shared by every numeric kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point element type the network can be instantiated with.
///
/// Implemented for `f32` and `f64`. Training and gradient verification run at
/// 64-bit; the 32-bit instantiation exists for lighter inference.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tag written into binary containers so a checkpoint is only reloaded at its own width.
    const WIDTH_TAG: u8;
    const BYTES: usize;

    /// Lossy conversion from `f64`; used for data ingestion and constants.
    fn of(value: f64) -> Self;

    fn as_f64(self) -> f64;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `Self::BYTES` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f64 {
    const WIDTH_TAG: u8 = 64;
    const BYTES: usize = 8;

    #[inline]
    fn of(value: f64) -> Self {
        value
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(bytes);
        f64::from_le_bytes(raw)
    }
}

impl Scalar for f32 {
    const WIDTH_TAG: u8 = 32;
    const BYTES: usize = 4;

    #[inline]
    fn of(value: f64) -> Self {
        value as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut raw = [0u8; 4];
        raw.copy_from_slice(bytes);
        f32::from_le_bytes(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_round_trip() {
        let mut buf = Vec::new();
        (-0.1f64).write_le(&mut buf);
        1.5f32.write_le(&mut buf);
        assert_eq!(f64::read_le(&buf[..8]), -0.1);
        assert_eq!(f32::read_le(&buf[8..]), 1.5);
    }
}

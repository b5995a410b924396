//! Versioned binary container of window crops and their provenance.
//!
//! ```text
//! magic "SKNTCROP" | version u32 | width u32 | step u32 | count u64
//! per crop: task u8 | subject len u16 + UTF-8 | trial u32 | side u8 | start u32
//!           | label u8 | width*38 f64 values
//! ```

use std::path::Path;

use super::trial::{Side, SkillLevel, Task, TrialId, PAIR_CHANNELS};
use super::window::{CropSource, WindowConfig, WindowCrop};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SKNTCROP";
pub const CROP_CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CropCache {
    pub config: WindowConfig,
    pub crops: Vec<WindowCrop>,
}

impl CropCache {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CROP_CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.config.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.config.step as u32).to_le_bytes());
        out.extend_from_slice(&(self.crops.len() as u64).to_le_bytes());
        for crop in &self.crops {
            if crop.width() != self.config.width {
                return Err(Error::Input(format!(
                    "crop width {} differs from cache width {}",
                    crop.width(),
                    self.config.width
                )));
            }
            let src = &crop.source;
            out.push(src.trial.task.ordinal());
            let subject = src.trial.subject.as_bytes();
            out.extend_from_slice(&(subject.len() as u16).to_le_bytes());
            out.extend_from_slice(subject);
            out.extend_from_slice(&src.trial.trial.to_le_bytes());
            out.push(match src.side {
                Side::Mtm => 0,
                Side::Psm => 1,
            });
            out.extend_from_slice(&(src.start as u32).to_le_bytes());
            out.push(crop.label.index() as u8);
            for v in crop.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(corrupt("missing crop cache magic"));
        }
        let version = r.u32()?;
        if version != CROP_CACHE_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let config = WindowConfig::new(r.u32()? as usize, r.u32()? as usize)?;
        let count = r.u64()? as usize;
        let mut crops = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let task = Task::from_ordinal(r.u8()?).ok_or_else(|| corrupt("bad task tag"))?;
            let n = r.u16()? as usize;
            let subject = std::str::from_utf8(r.take(n)?)
                .map_err(|_| corrupt("subject is not UTF-8"))?
                .to_string();
            let trial = r.u32()?;
            let side = match r.u8()? {
                0 => Side::Mtm,
                1 => Side::Psm,
                _ => return Err(corrupt("bad side tag")),
            };
            let start = r.u32()? as usize;
            let label = SkillLevel::from_index(r.u8()? as usize).ok_or_else(|| corrupt("bad label tag"))?;
            let raw = r.take(config.width * PAIR_CHANNELS * 8)?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            crops.push(WindowCrop::new(
                CropSource {
                    trial: TrialId { task, subject, trial },
                    side,
                    start,
                },
                label,
                config.width,
                values,
            )?);
        }
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self { config, crops })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn corrupt(message: impl Into<String>) -> Error {
    Error::Input(format!("crop cache: {}", message.into()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        match self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()) {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(corrupt("truncated")),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

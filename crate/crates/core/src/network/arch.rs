use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ConvLayerParams, PoolSpec};

pub const INPUT_CHANNELS: usize = 38;
pub const CONV_CHANNELS: [usize; 3] = [38, 76, 152];
pub const CLASS_COUNT: usize = 3;
pub const DEFAULT_HIDDEN_WIDTHS: [usize; 2] = [256, 128];

/// The ten layers, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    MaxPool,
    Flatten,
    FullyConnected,
    Softmax,
}

pub const LAYER_SEQUENCE: [LayerKind; 10] = [
    LayerKind::Conv,
    LayerKind::MaxPool,
    LayerKind::Conv,
    LayerKind::MaxPool,
    LayerKind::Conv,
    LayerKind::MaxPool,
    LayerKind::Flatten,
    LayerKind::FullyConnected,
    LayerKind::FullyConnected,
    LayerKind::Softmax,
];

/// Hyperparameters of the fixed conv-pool x3 / dense x2 / softmax network.
///
/// Only the window width, hidden widths and dropout rates are free; channel counts
/// and class count are checked against the fixed topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub window_width: usize,
    pub in_channels: usize,
    pub conv_channels: [usize; 3],
    pub hidden_widths: [usize; 2],
    pub class_count: usize,
    pub maxpool_dropout_rate: f64,
    pub fc_dropout_rate: f64,
}

impl Default for ArchitectureSpec {
    fn default() -> Self {
        Self::for_window(60)
    }
}

impl ArchitectureSpec {
    pub fn for_window(window_width: usize) -> Self {
        Self {
            window_width,
            in_channels: INPUT_CHANNELS,
            conv_channels: CONV_CHANNELS,
            hidden_widths: DEFAULT_HIDDEN_WIDTHS,
            class_count: CLASS_COUNT,
            maxpool_dropout_rate: 0.2,
            fc_dropout_rate: 0.5,
        }
    }

    /// Builds a spec from an explicit layer list; anything but the canonical
    /// sequence is rejected.
    pub fn with_layers(window_width: usize, layers: &[LayerKind]) -> Result<Self> {
        if layers != LAYER_SEQUENCE {
            return Err(Error::config(
                "architecture",
                format!(
                    "layer sequence must be {LAYER_SEQUENCE:?}, got {} layers {layers:?}",
                    layers.len()
                ),
            ));
        }
        let spec = Self::for_window(window_width);
        spec.validate()?;
        Ok(spec)
    }

    pub fn layers(&self) -> &'static [LayerKind; 10] {
        &LAYER_SEQUENCE
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config("architecture", msg));
        if self.in_channels != INPUT_CHANNELS {
            return fail(format!("input must have {INPUT_CHANNELS} channels, got {}", self.in_channels));
        }
        if self.conv_channels != CONV_CHANNELS {
            return fail(format!(
                "conv channels must be {CONV_CHANNELS:?}, got {:?}",
                self.conv_channels
            ));
        }
        if self.class_count != CLASS_COUNT {
            return fail(format!("class count must be {CLASS_COUNT}, got {}", self.class_count));
        }
        if self.hidden_widths.contains(&0) {
            return fail("hidden widths must be positive".into());
        }
        for (name, rate) in [
            ("max-pool dropout", self.maxpool_dropout_rate),
            ("fully-connected dropout", self.fc_dropout_rate),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return fail(format!("{name} rate {rate} outside [0, 1)"));
            }
        }
        let mut len = self.window_width;
        for stage in 0..3 {
            if len < 2 {
                return fail(format!(
                    "window width {} too short: stage {} input length {len}",
                    self.window_width,
                    stage + 1
                ));
            }
            let conv = ConvLayerParams::<f64>::output_length(len);
            if conv < 2 {
                return fail(format!(
                    "window width {} too short: stage {} pool input length {conv}",
                    self.window_width,
                    stage + 1
                ));
            }
            len = PoolSpec::output_length(conv);
        }
        Ok(())
    }

    /// `(conv output length, pool output length)` for each stage.
    pub fn stage_lengths(&self) -> [(usize, usize); 3] {
        let mut len = self.window_width;
        let mut out = [(0, 0); 3];
        for slot in &mut out {
            let conv = ConvLayerParams::<f64>::output_length(len);
            len = PoolSpec::output_length(conv);
            *slot = (conv, len);
        }
        out
    }

    pub fn flatten_length(&self) -> usize {
        self.stage_lengths()[2].1
    }

    pub fn flatten_width(&self) -> usize {
        self.flatten_length() * self.conv_channels[2]
    }
}

//! Trial ingestion and augmentation: parsing, z-normalization, manipulator
//! splitting, sliding-window crops, skill labeling and synthetic corpora.

mod cache;
pub mod jigsaws;
mod label;
mod manifest;
mod normalize;
mod synth;
mod trial;
mod window;

pub use cache::{CropCache, CROP_CACHE_VERSION};
pub use label::{assign_label, BoundaryRule, GrsThresholds, LabelMode, LabelingPolicy};
pub use manifest::{
    format_kinematics, parse_kinematics, parse_manifest, parse_trial, read_kinematics, read_manifest, write_manifest,
    Corpus, ManifestEntry, MANIFEST_FILE, MANIFEST_HEADER,
};
pub use normalize::{z_normalize, ChannelStats, SIGMA_GUARD};
pub use synth::{
    generate_synthetic_corpus, subject_class, subject_name, write_corpus, SignalParams, SynthSpec, SyntheticCorpus,
};
pub use trial::{
    channel_name, LabelRecord, LabeledTrial, Side, SkillLevel, Task, TrialId, TrialRecording, CHANNELS,
    CHANNELS_PER_MANIPULATOR, GRS_MAX, GRS_MIN, PAIR_CHANNELS, ROTATION_OFFSET, SAMPLE_RATE_HZ,
};
pub use window::{
    build_crops, crop_count, sliding_window_crop, split_manipulators, CropSource, ManipulatorInstance, WindowConfig,
    WindowCrop,
};

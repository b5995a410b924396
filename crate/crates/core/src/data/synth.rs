//! Class-conditional synthetic kinematics.
//!
//! Each subject is assigned a skill class. Every manipulator follows smooth
//! oscillations whose frequency is set by the class (with per-subject and
//! per-trial jitter), overlaid with first-order autoregressive noise. Rotation
//! blocks are proper rotation matrices built from the oscillating angles and
//! velocities are the analytic derivatives, so recordings look like the real
//! 76-channel layout. GRS scores are drawn inside the class's threshold band so
//! both labeling policies agree.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::label::LabelingPolicy;
use super::manifest::{format_kinematics, write_manifest, Corpus, ManifestEntry, MANIFEST_FILE};
use super::trial::{
    LabelRecord, LabeledTrial, SkillLevel, Task, TrialId, TrialRecording, CHANNELS, CHANNELS_PER_MANIPULATOR,
    SAMPLE_RATE_HZ,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    /// Dominant motion frequency per class (Novice, Intermediate, Expert), in Hz.
    pub class_frequency_hz: [f64; 3],
    /// Relative spread of frequencies across subjects, trials and channels.
    pub frequency_jitter: f64,
    /// Noise standard deviation relative to each channel's oscillation amplitude.
    pub noise_std: f64,
    /// Lag-one coefficient of the autoregressive noise.
    pub noise_ar: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self {
            class_frequency_hz: [0.3, 0.9, 2.0],
            frequency_jitter: 0.1,
            noise_std: 0.2,
            noise_ar: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub subjects: usize,
    pub trials_per_subject: usize,
    /// Inclusive range of trial lengths in frames.
    pub length_range: (usize, usize),
    pub tasks: Vec<Task>,
    pub signal: SignalParams,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            subjects: 8,
            trials_per_subject: 5,
            // Long enough that a fold trains on well over a thousand crops.
            length_range: (800, 1000),
            tasks: Task::ALL.to_vec(),
            signal: SignalParams::default(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Input(format!("synthetic corpus: {m}")));
        if self.subjects < 2 {
            return fail(format!("need at least 2 subjects, got {}", self.subjects));
        }
        if self.trials_per_subject < 2 {
            return fail(format!("need at least 2 trials per subject, got {}", self.trials_per_subject));
        }
        let (lo, hi) = self.length_range;
        if lo < 2 || lo > hi {
            return fail(format!("invalid length range {lo}..={hi}"));
        }
        if self.tasks.is_empty() {
            return fail("no tasks requested".into());
        }
        let nyquist = SAMPLE_RATE_HZ / 2.0;
        let s = &self.signal;
        if s.class_frequency_hz.iter().any(|&f| !(f > 0.0 && f < nyquist)) {
            return fail(format!("class frequencies must lie in (0, {nyquist}) Hz"));
        }
        if !(0.0..1.0).contains(&s.frequency_jitter) || s.noise_std < 0.0 || !(0.0..1.0).contains(&s.noise_ar) {
            return fail("jitter and AR coefficient must lie in [0, 1), noise must be non-negative".into());
        }
        Ok(())
    }
}

/// Subject identifiers in the dataset's style: `B`, `C`, ... then `S26`, `S27`, ...
pub fn subject_name(index: usize) -> String {
    if index < 25 {
        char::from(b'B' + index as u8).to_string()
    } else {
        format!("S{index}")
    }
}

/// Skill class of the `index`-th synthetic subject (round-robin).
pub fn subject_class(index: usize) -> SkillLevel {
    SkillLevel::ALL[index % 3]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub manifest: Vec<ManifestEntry>,
}

fn quantize(v: f64) -> f64 {
    // Six decimals, matching the on-disk text format so a write/reload is exact.
    (v * 1e6).round() / 1e6
}

struct Ar1 {
    state: f64,
    coef: f64,
    innovation: f64,
}

impl Ar1 {
    fn new<R: Rng>(std: f64, coef: f64, rng: &mut R) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        Self {
            state: std * z,
            coef,
            innovation: std * (1.0 - coef * coef).sqrt(),
        }
    }

    fn next<R: Rng>(&mut self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.state = self.coef * self.state + self.innovation * z;
        self.state
    }
}

/// One sinusoid `amplitude * sin(omega t + phase)` with `omega` in rad/frame.
#[derive(Clone, Copy)]
struct Oscillator {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

impl Oscillator {
    fn new<R: Rng>(amplitude: f64, frequency_hz: f64, jitter: f64, rng: &mut R) -> Self {
        let f = frequency_hz * (1.0 + rng.random_range(-jitter..=jitter));
        Self {
            amplitude,
            omega: TAU * f / SAMPLE_RATE_HZ,
            phase: rng.random_range(0.0..TAU),
        }
    }

    fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t + self.phase).sin()
    }

    /// Time derivative per second.
    fn rate(&self, t: f64) -> f64 {
        self.amplitude * self.omega * SAMPLE_RATE_HZ * (self.omega * t + self.phase).cos()
    }
}

fn rotation_zyx(yaw: f64, pitch: f64, roll: f64) -> [f64; 9] {
    let (sa, ca) = yaw.sin_cos();
    let (sb, cb) = pitch.sin_cos();
    let (sc, cc) = roll.sin_cos();
    [
        ca * cb,
        ca * sb * sc - sa * cc,
        ca * sb * cc + sa * sc,
        sa * cb,
        sa * sb * sc + ca * cc,
        sa * sb * cc - ca * sc,
        -sb,
        cb * sc,
        cb * cc,
    ]
}

fn generate_manipulator<R: Rng>(frames: &mut [f64], column: usize, frequency: f64, signal: &SignalParams, rng: &mut R) {
    const POS_AMP: f64 = 0.02;
    const ANGLE_AMP: f64 = 0.4;
    const GRIP_AMP: f64 = 0.3;
    let jitter = signal.frequency_jitter;
    let length = frames.len() / CHANNELS;
    let centre: [f64; 3] = [
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
    ];
    let position: Vec<Oscillator> = (0..3).map(|_| Oscillator::new(POS_AMP, frequency, jitter, rng)).collect();
    let angles: Vec<Oscillator> = (0..3).map(|_| Oscillator::new(ANGLE_AMP, frequency, jitter, rng)).collect();
    let grip = Oscillator::new(GRIP_AMP, frequency, jitter, rng);
    let angle_offset: [f64; 3] = [
        rng.random_range(-1.0..1.0),
        rng.random_range(-0.5..0.5),
        rng.random_range(-1.0..1.0),
    ];
    let noise_amp = [
        POS_AMP, POS_AMP, POS_AMP, // position
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, // rotation (handled separately)
        POS_AMP, POS_AMP, POS_AMP, // linear velocity, scaled below
        ANGLE_AMP, ANGLE_AMP, ANGLE_AMP, // angular velocity, scaled below
        GRIP_AMP,
    ];
    let rate_scale = TAU * frequency;
    let mut noise: Vec<Ar1> = noise_amp
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let scale = if (12..18).contains(&k) { rate_scale } else { 1.0 };
            Ar1::new(signal.noise_std * a * scale, signal.noise_ar, rng)
        })
        .collect();
    for t in 0..length {
        let tf = t as f64;
        let mut v = [0.0; CHANNELS_PER_MANIPULATOR];
        for a in 0..3 {
            v[a] = centre[a] + position[a].value(tf);
            v[12 + a] = position[a].rate(tf);
            v[15 + a] = angles[a].rate(tf);
        }
        let r = rotation_zyx(
            angle_offset[0] + angles[0].value(tf),
            angle_offset[1] + angles[1].value(tf),
            angle_offset[2] + angles[2].value(tf),
        );
        v[3..12].copy_from_slice(&r);
        v[18] = 0.5 + grip.value(tf);
        for (k, n) in noise.iter_mut().enumerate() {
            let e = n.next(rng);
            if !(3..12).contains(&k) {
                v[k] += e;
            }
        }
        // Small sensor noise on the rotation entries keeps det(R) near 1.
        for x in &mut v[3..12] {
            let z: f64 = StandardNormal.sample(rng);
            *x += 1e-3 * z * signal.noise_std.min(1.0);
        }
        let dst = &mut frames[t * CHANNELS + column..][..CHANNELS_PER_MANIPULATOR];
        for (d, s) in dst.iter_mut().zip(v) {
            *d = quantize(s);
        }
    }
}

/// Generates the corpus, deterministic in `spec.seed`. Trials are ordered by
/// task, subject, then repetition.
pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let policy = LabelingPolicy::grs();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut trials = Vec::new();
    let mut manifest = Vec::new();
    for &task in &spec.tasks {
        for s in 0..spec.subjects {
            let class = subject_class(s);
            let subject = subject_name(s);
            let subject_freq = spec.signal.class_frequency_hz[class.index()]
                * (1.0 + rng.random_range(-spec.signal.frequency_jitter..=spec.signal.frequency_jitter));
            let (grs_lo, grs_hi) = policy.grs_band(task, class);
            for trial in 1..=spec.trials_per_subject as u32 {
                let length = rng.random_range(spec.length_range.0..=spec.length_range.1);
                let mut frames = vec![0.0; length * CHANNELS];
                for m in 0..4 {
                    generate_manipulator(&mut frames, m * CHANNELS_PER_MANIPULATOR, subject_freq, &spec.signal, &mut rng);
                }
                let id = TrialId {
                    task,
                    subject: subject.clone(),
                    trial,
                };
                let grs_score = rng.random_range(grs_lo..=grs_hi);
                let labels = LabelRecord::new(class, grs_score)?;
                manifest.push(ManifestEntry {
                    task,
                    subject_id: subject.clone(),
                    trial_index: trial,
                    kinematics_path: format!("kinematics/{id}.txt"),
                    grs_score,
                    self_proclaimed: class,
                });
                trials.push(LabeledTrial {
                    recording: TrialRecording::new(id, frames)?,
                    labels,
                });
            }
        }
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::new(trials),
        manifest,
    })
}

/// Writes `manifest.csv` and `kinematics/*.txt` under `root`.
pub fn write_corpus(synthetic: &SyntheticCorpus, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    let kin = root.join("kinematics");
    fs::create_dir_all(&kin).map_err(|e| Error::io(&kin, e))?;
    for (entry, trial) in synthetic.manifest.iter().zip(&synthetic.corpus.trials) {
        let path = root.join(&entry.kinematics_path);
        fs::write(&path, format_kinematics(trial.recording.frames())).map_err(|e| Error::io(&path, e))?;
    }
    write_manifest(root.join(MANIFEST_FILE), &synthetic.manifest)
}

use super::trial::{TrialRecording, CHANNELS};
use crate::error::{Error, Result};

/// Standard deviations below this are treated as constant channels.
pub const SIGMA_GUARD: f64 = 1e-8;

/// Per-channel mean and population standard deviation of one trial. Guarded
/// channels store `std = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub guarded: Vec<bool>,
}

impl ChannelStats {
    pub fn compute(trial: &TrialRecording) -> Result<Self> {
        let n = trial.length();
        if n < 2 {
            return Err(Error::Input(format!(
                "trial {} has {n} frame(s); z-normalization needs at least 2",
                trial.id
            )));
        }
        let mut mean = vec![0.0; CHANNELS];
        for t in 0..n {
            for (m, &v) in mean.iter_mut().zip(trial.frame(t)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; CHANNELS];
        for t in 0..n {
            for ((s, &v), &m) in var.iter_mut().zip(trial.frame(t)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut std = Vec::with_capacity(CHANNELS);
        let mut guarded = Vec::with_capacity(CHANNELS);
        for s in var {
            let sigma = (s / n as f64).sqrt();
            let guard = sigma < SIGMA_GUARD;
            guarded.push(guard);
            std.push(if guard { 1.0 } else { sigma });
        }
        Ok(Self { mean, std, guarded })
    }
}

/// `z = (x - mean) / std` per channel over the whole trial.
pub fn z_normalize(trial: &TrialRecording) -> Result<(TrialRecording, ChannelStats)> {
    let stats = ChannelStats::compute(trial)?;
    let mut frames = trial.frames().to_vec();
    for frame in frames.chunks_exact_mut(CHANNELS) {
        for ((v, m), s) in frame.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = (*v - m) / s;
        }
    }
    Ok((trial.with_frames(frames), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::trial::{Task, TrialId};

    fn trial_with_column(values: &[f64], column: usize) -> TrialRecording {
        let mut frames = vec![0.0; values.len() * CHANNELS];
        for (t, &v) in values.iter().enumerate() {
            frames[t * CHANNELS + column] = v;
        }
        TrialRecording::new(
            TrialId {
                task: Task::KnotTying,
                subject: "C".into(),
                trial: 2,
            },
            frames,
        )
        .unwrap()
    }

    #[test]
    fn population_sigma() {
        let (z, stats) = z_normalize(&trial_with_column(&[1.0, 2.0, 3.0], 4)).unwrap();
        let col: Vec<f64> = z.column(4).collect();
        let expected = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((col[0] + expected).abs() < 1e-12);
        assert!(col[1].abs() < 1e-12);
        assert!((col[2] - expected).abs() < 1e-12);
        assert!((col[2] - 1.2247).abs() < 1e-4);
        assert!((stats.std[4] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_channel_is_centred_only() {
        let (z, stats) = z_normalize(&trial_with_column(&[5.0, 5.0, 5.0], 10)).unwrap();
        assert!(z.column(10).all(|v| v == 0.0));
        assert!(stats.guarded[10]);
        assert_eq!(stats.std[10], 1.0);
    }

    #[test]
    fn single_frame_is_rejected() {
        assert!(matches!(
            z_normalize(&trial_with_column(&[1.0], 0)),
            Err(Error::Input(_))
        ));
    }
}

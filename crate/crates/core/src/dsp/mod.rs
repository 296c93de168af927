//! Time-frequency tools: STFT/ISTFT, Mel spectrograms, spline time-resize
//! (duration fitting), ratio-mask separation, and track mixing.

mod griffin;
mod mask;
mod mel;
mod resize;
mod stft;

pub use griffin::{fit_duration, griffin_lim, GRIFFIN_LIM_ITERATIONS};
pub use mask::{apply_masks, read_mask_file, write_mask_file, MaskParams, RatioMaskPair};
pub use mel::{mel_filterbank, mel_spectrogram, DEFAULT_N_MELS};
pub use resize::{resize_spectrogram, resize_to_frame_count};
pub use stft::{istft, stft};

use rustfft::num_complex::Complex;

use crate::audio::AudioBuffer;
use crate::error::{DubError, Result};

/// Default analysis window (samples).
pub const DEFAULT_WINDOW: usize = 1024;
/// Default hop between frames (samples).
pub const DEFAULT_HOP: usize = 256;

/// Magnitude (or Mel) spectrogram: `frames[t][f]`, all values >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<f64>>,
    pub hop: usize,
    pub window_size: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_bins(&self) -> usize {
        self.frames.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(DubError::invalid("spectrogram has no frames"));
        }
        let f = self.frames[0].len();
        if f == 0 {
            return Err(DubError::invalid("spectrogram has no frequency bins"));
        }
        if self.frames.iter().any(|r| r.len() != f) {
            return Err(DubError::invalid("ragged spectrogram rows"));
        }
        if self
            .frames
            .iter()
            .any(|r| r.iter().any(|v| !v.is_finite() || *v < 0.0))
        {
            return Err(DubError::invalid("magnitudes must be finite and >= 0"));
        }
        if self.hop == 0 || self.window_size == 0 || self.hop > self.window_size {
            return Err(DubError::invalid("inconsistent hop/window metadata"));
        }
        Ok(())
    }
}

/// Complex STFT: `frames[t][f]` with `f` in `0..=window_size/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub frames: Vec<Vec<Complex<f64>>>,
    pub hop: usize,
    pub window_size: usize,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_bins(&self) -> usize {
        self.frames.first().map_or(0, |r| r.len())
    }

    pub fn magnitude(&self) -> Spectrogram {
        Spectrogram {
            frames: self
                .frames
                .iter()
                .map(|row| row.iter().map(|c| c.norm()).collect())
                .collect(),
            hop: self.hop,
            window_size: self.window_size,
            sample_rate: self.sample_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(DubError::invalid("spectrogram has no frames"));
        }
        let expected = self.window_size / 2 + 1;
        if self.frames.iter().any(|r| r.len() != expected) {
            return Err(DubError::invalid("inconsistent hop/window metadata"));
        }
        if self.hop == 0 || self.window_size == 0 || self.hop > self.window_size {
            return Err(DubError::invalid("inconsistent hop/window metadata"));
        }
        Ok(())
    }
}

/// Weighted sample-wise sum of tracks, padded to the longest. The result is
/// scaled down only when the summed peak exceeds 1.0; the applied scale is
/// returned (1.0 when untouched).
pub fn mix(tracks: &[(&AudioBuffer, f64)]) -> Result<(AudioBuffer, f64)> {
    if tracks.is_empty() {
        return Err(DubError::invalid("no tracks to mix"));
    }
    let sr = tracks[0].0.sample_rate();
    if tracks.iter().any(|(t, _)| t.sample_rate() != sr) {
        return Err(DubError::invalid("sample-rate mismatch between tracks"));
    }
    if tracks.iter().any(|(_, g)| !g.is_finite()) {
        return Err(DubError::invalid("gains must be finite"));
    }
    let len = tracks.iter().map(|(t, _)| t.len()).max().unwrap_or(0);
    let mut out = vec![0.0f64; len];
    for (track, gain) in tracks {
        for (o, &s) in out.iter_mut().zip(track.samples()) {
            *o += gain * s;
        }
    }
    let peak = out.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let scale = if peak > 1.0 { 1.0 / peak } else { 1.0 };
    if scale != 1.0 {
        for v in &mut out {
            *v *= scale;
        }
    }
    Ok((AudioBuffer::new(out, sr)?, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(samples: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(samples, 16_000).unwrap()
    }

    #[test]
    fn mix_identity_and_halves() {
        let x = buf(vec![0.1, -0.2, 0.3]);
        let (m, scale) = mix(&[(&x, 1.0)]).unwrap();
        assert_eq!(m.samples(), x.samples());
        assert_eq!(scale, 1.0);
        let (m, _) = mix(&[(&x, 0.5), (&x, 0.5)]).unwrap();
        for (a, b) in m.samples().iter().zip(x.samples()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mix_disjoint_supports() {
        let a = buf(vec![0.5, 0.0, 0.0, 0.0]);
        let b = buf(vec![0.0, 0.0, -0.25, 0.0, 0.125]);
        let (m, scale) = mix(&[(&a, 1.0), (&b, 1.0)]).unwrap();
        assert_eq!(scale, 1.0);
        assert_eq!(m.len(), 5); // padded to longest
        assert_eq!(m.samples()[0], 0.5);
        assert_eq!(m.samples()[2], -0.25);
        assert_eq!(m.samples()[4], 0.125);
    }

    #[test]
    fn mix_normalizes_only_above_peak() {
        let x = buf(vec![0.8, -0.8]);
        let (m, scale) = mix(&[(&x, 1.0), (&x, 1.0)]).unwrap();
        assert!((scale - 1.0 / 1.6).abs() < 1e-12);
        assert!((m.peak() - 1.0).abs() < 1e-12);
        let (_, scale) = mix(&[(&x, 1.0)]).unwrap();
        assert_eq!(scale, 1.0);
    }

    #[test]
    fn mix_rejects_bad_input() {
        let x = buf(vec![0.1]);
        let y = AudioBuffer::new(vec![0.1], 8_000).unwrap();
        assert!(mix(&[]).is_err());
        assert!(mix(&[(&x, 1.0), (&y, 1.0)]).is_err());
        assert!(mix(&[(&x, f64::NAN)]).is_err());
    }

    #[test]
    fn spectrogram_validation() {
        let good = Spectrogram {
            frames: vec![vec![0.0, 1.0], vec![2.0, 3.0]],
            hop: 2,
            window_size: 4,
            sample_rate: 16_000,
        };
        assert!(good.validate().is_ok());
        let ragged = Spectrogram {
            frames: vec![vec![0.0, 1.0], vec![2.0]],
            ..good.clone()
        };
        assert!(ragged.validate().is_err());
        let negative = Spectrogram {
            frames: vec![vec![-0.1, 1.0]],
            ..good.clone()
        };
        assert!(negative.validate().is_err());
        let bad_hop = Spectrogram {
            hop: 8,
            ..good.clone()
        };
        assert!(bad_hop.validate().is_err());
    }
}

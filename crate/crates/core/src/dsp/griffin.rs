//! Griffin-Lim phase reconstruction and spectrogram-domain duration
//! fitting.
//!
//! The duration fitter stretches the magnitude STFT along time with the
//! spline resizer, rebuilds a phase with Griffin-Lim (zero-phase start, so
//! runs are deterministic) and trims to the requested sample count. Pitch
//! is untouched because frequency bins never move.

use rustfft::num_complex::Complex;

use crate::audio::AudioBuffer;
use crate::dsp::resize::resize_to_frame_count;
use crate::dsp::stft::{istft_frames, stft, stft_frames};
use crate::dsp::{Spectrogram, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::error::{DubError, Result};

pub const GRIFFIN_LIM_ITERATIONS: usize = 32;

/// Reconstruct audio from a linear-frequency magnitude spectrogram by
/// iterating ISTFT/STFT and re-imposing the known magnitudes.
pub fn griffin_lim(mag: &Spectrogram, iterations: usize) -> Result<AudioBuffer> {
    mag.validate()?;
    let (w, h) = (mag.window_size, mag.hop);
    if !w.is_power_of_two() {
        return Err(DubError::invalid("window size must be a power of two"));
    }
    if mag.num_bins() != w / 2 + 1 {
        return Err(DubError::invalid(
            "griffin_lim needs a linear-frequency magnitude spectrogram",
        ));
    }
    let mut frames: Vec<Vec<Complex<f64>>> = mag
        .frames
        .iter()
        .map(|row| row.iter().map(|&m| Complex::new(m, 0.0)).collect())
        .collect();
    for _ in 0..iterations {
        let x = istft_frames(&frames, w, h);
        let est = stft_frames(&x, w, h);
        for (frame, (mag_row, est_row)) in frames.iter_mut().zip(mag.frames.iter().zip(&est)) {
            for (c, (&m, e)) in frame.iter_mut().zip(mag_row.iter().zip(est_row)) {
                let norm = e.norm();
                *c = if norm > 1e-12 {
                    e * (m / norm)
                } else {
                    Complex::new(m, 0.0)
                };
            }
        }
    }
    let full = istft_frames(&frames, w, h);
    AudioBuffer::new(full[w / 2..].to_vec(), mag.sample_rate)
}

/// Stretch or squeeze `audio` to `target_duration` seconds (duration ratio
/// limited to [0.25, 4]): magnitude STFT -> spline resize -> Griffin-Lim.
/// The result is cut to exactly `round(target_duration * sample_rate)`
/// samples, well within the one-hop guarantee.
pub fn fit_duration(audio: &AudioBuffer, target_duration: f64) -> Result<AudioBuffer> {
    if !target_duration.is_finite() || target_duration <= 0.0 {
        return Err(DubError::invalid("target duration must be > 0"));
    }
    let factor = target_duration / audio.duration();
    if !(0.25..=4.0).contains(&factor) {
        return Err(DubError::invalid(format!(
            "stretch factor {:.4} outside [0.25, 4]",
            factor
        )));
    }
    let sr = audio.sample_rate();
    let target_len = ((target_duration * sr as f64).round() as usize).max(1);
    let mag = stft(audio, DEFAULT_WINDOW, DEFAULT_HOP)?.magnitude();
    // enough frames that the reconstruction covers target_len samples
    let t_new = (target_len as f64 / DEFAULT_HOP as f64).round() as usize + 1;
    let resized = resize_to_frame_count(&mag, t_new)?;
    let rebuilt = griffin_lim(&resized, GRIFFIN_LIM_ITERATIONS)?;
    let mut samples = rebuilt.into_samples();
    debug_assert!(samples.len() >= target_len);
    samples.truncate(target_len);
    AudioBuffer::new(samples, sr)
}

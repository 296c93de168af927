//! Mel-scale spectrograms via a triangular filterbank over the magnitude
//! STFT.

use crate::audio::AudioBuffer;
use crate::dsp::{stft, Spectrogram, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::error::{DubError, Result};

pub const DEFAULT_N_MELS: usize = 80;

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank: `n_mels` rows of `n_bins` weights. Filter centers
/// are evenly spaced on the Mel scale from 0 Hz to Nyquist; adjacent
/// triangles sum to one between the first and last centers.
pub fn mel_filterbank(n_mels: usize, n_bins: usize, sample_rate: u32) -> Result<Vec<Vec<f64>>> {
    if n_mels < 8 {
        return Err(DubError::invalid("n_mels must be at least 8"));
    }
    if n_mels > n_bins {
        return Err(DubError::invalid("n_mels exceeds frequency bins"));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(nyquist);
    // n_mels + 2 edge points; triangle m spans points m-1 .. m+1
    let points: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = nyquist / (n_bins - 1) as f64;
    let mut bank = Vec::with_capacity(n_mels);
    for m in 1..=n_mels {
        let (left, center, right) = (points[m - 1], points[m], points[m + 1]);
        let row: Vec<f64> = (0..n_bins)
            .map(|b| {
                let f = b as f64 * bin_hz;
                if f <= left || f >= right {
                    0.0
                } else if f <= center {
                    (f - left) / (center - left)
                } else {
                    (right - f) / (right - center)
                }
            })
            .collect();
        bank.push(row);
    }
    Ok(bank)
}

/// Mel magnitude spectrogram with the default STFT parameters.
pub fn mel_spectrogram(audio: &AudioBuffer, n_mels: usize) -> Result<Spectrogram> {
    let spec = stft(audio, DEFAULT_WINDOW, DEFAULT_HOP)?;
    let mag = spec.magnitude();
    let bank = mel_filterbank(n_mels, mag.num_bins(), audio.sample_rate())?;
    let frames: Vec<Vec<f64>> = mag
        .frames
        .iter()
        .map(|row| {
            bank.iter()
                .map(|filt| filt.iter().zip(row).map(|(w, v)| w * v).sum())
                .collect()
        })
        .collect();
    Ok(Spectrogram {
        frames,
        hop: mag.hop,
        window_size: mag.window_size,
        sample_rate: mag.sample_rate,
    })
}

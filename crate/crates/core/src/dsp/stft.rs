//! Forward/inverse short-time Fourier transform with Hann windowing and
//! weighted overlap-add reconstruction.
//!
//! The forward transform reflection-pads `window/2` samples on the left
//! (centering the first frame on sample 0) and zero-fills on the right to a
//! whole number of hops; the inverse trims the same `window/2`, so a round
//! trip returns the original samples plus at most one hop of trailing
//! padding. Overlap-add divides by the accumulated squared window rather
//! than assuming COLA, which keeps reconstruction exact at the edges.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::dsp::ComplexSpectrogram;
use crate::error::{DubError, Result};

/// Periodic Hann window.
pub(crate) fn hann(window: usize) -> Vec<f64> {
    (0..window)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / window as f64).cos()))
        .collect()
}

/// STFT of an exactly framed buffer (`len == window + (T-1)*hop`).
pub(crate) fn stft_frames(buffer: &[f64], window: usize, hop: usize) -> Vec<Vec<Complex<f64>>> {
    debug_assert!(buffer.len() >= window && (buffer.len() - window) % hop == 0);
    let t_frames = 1 + (buffer.len() - window) / hop;
    let win = hann(window);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(window);
    let mut out = Vec::with_capacity(t_frames);
    let mut scratch = vec![Complex::new(0.0, 0.0); window];
    for t in 0..t_frames {
        for (n, s) in scratch.iter_mut().enumerate() {
            *s = Complex::new(buffer[t * hop + n] * win[n], 0.0);
        }
        fft.process(&mut scratch);
        out.push(scratch[..=window / 2].to_vec());
    }
    out
}

/// Weighted overlap-add inverse of [`stft_frames`]; returns the full
/// `window + (T-1)*hop` samples without any trimming.
pub(crate) fn istft_frames(frames: &[Vec<Complex<f64>>], window: usize, hop: usize) -> Vec<f64> {
    let t_frames = frames.len();
    let full = window + (t_frames - 1) * hop;
    let win = hann(window);
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(window);
    let mut out = vec![0.0f64; full];
    let mut wsum = vec![0.0f64; full];
    let mut spectrum = vec![Complex::new(0.0, 0.0); window];
    for (t, frame) in frames.iter().enumerate() {
        spectrum[..=window / 2].copy_from_slice(frame);
        for f in 1..window / 2 {
            spectrum[window - f] = frame[f].conj();
        }
        ifft.process(&mut spectrum);
        let off = t * hop;
        for n in 0..window {
            // 1/window: rustfft leaves the inverse unnormalized
            let sample = spectrum[n].re / window as f64;
            out[off + n] += sample * win[n];
            wsum[off + n] += win[n] * win[n];
        }
    }
    for (o, &w) in out.iter_mut().zip(&wsum) {
        if w > 1e-11 {
            *o /= w;
        }
    }
    out
}

/// Number of frames covering `len` samples once `window/2` of padding is
/// prepended.
pub(crate) fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    let padded = len + window / 2;
    if padded <= window {
        1
    } else {
        1 + (padded - window).div_ceil(hop)
    }
}

/// Hann-windowed STFT; frames step by `hop` over the reflection-padded
/// signal.
pub fn stft(audio: &AudioBuffer, window_size: usize, hop: usize) -> Result<ComplexSpectrogram> {
    if !window_size.is_power_of_two() || window_size < 2 {
        return Err(DubError::invalid("window size must be a power of two"));
    }
    if hop == 0 || hop > window_size {
        return Err(DubError::invalid("hop must satisfy 0 < hop <= window"));
    }
    let x = audio.samples();
    let pad = window_size / 2;
    if x.len() <= pad {
        return Err(DubError::invalid("audio shorter than one window after padding"));
    }
    let t_frames = frame_count(x.len(), window_size, hop);
    let full = window_size + (t_frames - 1) * hop;
    let mut buffer = Vec::with_capacity(full);
    // reflect around sample 0 (no edge repeat)
    buffer.extend((0..pad).map(|i| x[pad - i]));
    buffer.extend_from_slice(x);
    buffer.resize(full, 0.0);
    Ok(ComplexSpectrogram {
        frames: stft_frames(&buffer, window_size, hop),
        hop,
        window_size,
        sample_rate: audio.sample_rate(),
    })
}

/// Inverse STFT; returns the original sample count plus at most one hop of
/// trailing padding.
pub fn istft(spec: &ComplexSpectrogram) -> Result<AudioBuffer> {
    spec.validate()?;
    let full = istft_frames(&spec.frames, spec.window_size, spec.hop);
    let out = full[spec.window_size / 2..].to_vec();
    AudioBuffer::new(out, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
        AudioBuffer::new(samples, 16_000).unwrap()
    }

    fn snr_db(reference: &[f64], test: &[f64]) -> f64 {
        let n = reference.len().min(test.len());
        let sig: f64 = reference[..n].iter().map(|v| v * v).sum();
        let err: f64 = reference[..n]
            .iter()
            .zip(&test[..n])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        10.0 * (sig / err.max(1e-300)).log10()
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = noise(4000, 1);
        assert!(stft(&x, 1000, 256).is_err()); // not a power of two
        assert!(stft(&x, 1024, 0).is_err());
        assert!(stft(&x, 1024, 2048).is_err());
        let short = noise(512, 2); // == window/2, too short to pad
        assert!(stft(&short, 1024, 256).is_err());
        let msg = stft(&short, 1024, 256).unwrap_err().to_string();
        assert!(msg.contains("shorter than one window"));
    }

    #[test]
    fn zero_in_zero_out() {
        let x = AudioBuffer::silence(16_000, 16_000);
        let spec = stft(&x, 1024, 256).unwrap();
        let energy: f64 = spec
            .frames
            .iter()
            .flat_map(|r| r.iter())
            .map(|c| c.norm_sqr())
            .sum();
        assert_eq!(energy, 0.0);
        let back = istft(&spec).unwrap();
        assert!(back.peak() == 0.0);
    }

    #[test]
    fn sine_concentrates_in_its_bin() {
        // 1000 Hz = bin 64 at 16 kHz / 1024: the periodic-Hann DFT of a
        // bin-centered sine is nonzero only at k-1, k, k+1 (weights
        // 1/4, 1/2, 1/4), so the center bin holds 2/3 of the energy and
        // the three-bin neighborhood holds all of it.
        let sr = 16_000u32;
        let k = 64usize;
        let samples: Vec<f64> = (0..8000)
            .map(|n| (2.0 * std::f64::consts::PI * k as f64 * n as f64 / 1024.0).sin() * 0.5)
            .collect();
        let x = AudioBuffer::new(samples, sr).unwrap();
        let spec = stft(&x, 1024, 256).unwrap();
        // use an interior frame (edge frames see the reflection padding)
        let frame = &spec.frames[spec.num_frames() / 2];
        let total: f64 = frame.iter().map(|c| c.norm_sqr()).sum();
        let neighborhood: f64 = frame[k - 1..=k + 1].iter().map(|c| c.norm_sqr()).sum();
        let center = frame[k].norm_sqr();
        let argmax = frame
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .unwrap()
            .0;
        assert_eq!(argmax, k);
        assert!(neighborhood / total > 0.999, "{}", neighborhood / total);
        assert!((center / total - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn round_trip_snr_above_50_db() {
        for seed in 0..3 {
            let x = noise(16_000 + seed as usize * 777, 40 + seed);
            let spec = stft(&x, 1024, 256).unwrap();
            let y = istft(&spec).unwrap();
            assert!(y.len() >= x.len());
            assert!(y.len() < x.len() + 256, "len {} vs {}", y.len(), x.len());
            let snr = snr_db(x.samples(), y.samples());
            assert!(snr > 50.0, "seed {}: snr = {:.1} dB", seed, snr);
        }
    }

    #[test]
    fn delta_round_trips() {
        let mut samples = vec![0.0; 2000];
        samples[100] = 1.0;
        let x = AudioBuffer::new(samples, 16_000).unwrap();
        let spec = stft(&x, 1024, 256).unwrap();
        let y = istft(&spec).unwrap();
        for (i, (&a, &b)) in x.samples().iter().zip(y.samples()).enumerate() {
            assert!((a - b).abs() < 1e-9, "sample {} differs: {} vs {}", i, a, b);
        }
    }

    #[test]
    fn istft_rejects_inconsistent_metadata() {
        let x = noise(4000, 9);
        let mut spec = stft(&x, 1024, 256).unwrap();
        spec.frames[1].pop();
        assert!(istft(&spec).is_err());
        let mut spec = stft(&x, 1024, 256).unwrap();
        spec.hop = 4096;
        assert!(istft(&spec).is_err());
    }

    #[test]
    fn frame_count_formula() {
        // padded length = len + window/2, then ceil to a whole hop grid
        assert_eq!(frame_count(1024, 1024, 256), 3); // 1536 -> 1 + 2
        assert_eq!(frame_count(513, 1024, 256), 1 + 1); // 1025 -> ceil(1/256)=1
        assert_eq!(frame_count(600, 1024, 256), 2);
    }
}

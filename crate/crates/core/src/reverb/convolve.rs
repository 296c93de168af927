//! Convolution of audio with an impulse response.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::error::{DubError, Result};
use crate::reverb::ImpulseResponse;

/// Below this output size the direct O(n m) form beats the FFT setup cost.
const DIRECT_CONV_LIMIT: usize = 4096;

/// Duration of the linear fade applied to the tail of a trimmed convolution.
const TAIL_FADE_SECS: f64 = 0.010;

/// Full linear convolution, `n + m - 1` samples.
pub fn convolve_full(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if out_len <= DIRECT_CONV_LIMIT {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fa.resize(n, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fb.resize(n, Complex::new(0.0, 0.0));
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    ifft.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Convolve audio with an impulse response, keeping the input length.
///
/// The reverberant tail past the original duration is cut; the last 10 ms
/// get a linear fade so the cut is not audible as a click.
pub fn convolve(audio: &AudioBuffer, rir: &ImpulseResponse) -> Result<AudioBuffer> {
    if audio.sample_rate() != rir.sample_rate() {
        return Err(DubError::invalid(format!(
            "sample rate mismatch: audio {} Hz, impulse response {} Hz",
            audio.sample_rate(),
            rir.sample_rate()
        )));
    }
    if audio.len() == 0 {
        return Err(DubError::invalid("cannot convolve empty audio"));
    }
    let mut out = convolve_full(audio.samples(), rir.samples());
    out.truncate(audio.len());
    let fade = ((TAIL_FADE_SECS * audio.sample_rate() as f64).round() as usize)
        .min(out.len());
    if fade > 1 {
        let start = out.len() - fade;
        for i in 0..fade {
            let g = 1.0 - i as f64 / (fade - 1) as f64;
            out[start + i] *= g;
        }
    }
    AudioBuffer::new(out, audio.sample_rate())
}

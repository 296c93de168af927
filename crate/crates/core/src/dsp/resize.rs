//! Time-axis resampling of spectrograms with per-band natural cubic
//! splines. Stretching the frame axis (then re-synthesizing) changes
//! duration without shifting frequencies, unlike sample-rate tricks.

use crate::dsp::Spectrogram;
use crate::error::{DubError, Result};

pub const MIN_RESIZE_FACTOR: f64 = 0.25;
pub const MAX_RESIZE_FACTOR: f64 = 4.0;

/// Natural-spline second derivatives for unit-spaced samples (Thomas
/// algorithm on the [1, 4, 1] tridiagonal system; ends clamped to zero).
fn spline_second_derivs(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
        if i == 0 {
            c[0] = 0.25;
            d[0] = rhs * 0.25;
        } else {
            let denom = 4.0 - c[i - 1];
            c[i] = 1.0 / denom;
            d[i] = (rhs - d[i - 1]) / denom;
        }
    }
    m[k] = d[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = d[i] - c[i] * m[i + 2];
    }
    m
}

/// Evaluate the spline at `u` (in node units). Node positions come back
/// exactly; out-of-range queries clamp to the ends.
fn spline_eval(y: &[f64], m: &[f64], u: f64) -> f64 {
    let n = y.len();
    if n == 1 {
        return y[0];
    }
    let u = u.clamp(0.0, (n - 1) as f64);
    let i = (u.floor() as usize).min(n - 2);
    let s = u - i as f64;
    let a = 1.0 - s;
    y[i] * a + y[i + 1] * s + m[i] / 6.0 * (a * a * a - a) + m[i + 1] / 6.0 * (s * s * s - s)
}

/// Resample the time axis to exactly `t_new` frames. Frequency content is
/// untouched; slight spline overshoot below zero is clipped to keep
/// magnitudes valid.
pub fn resize_to_frame_count(spec: &Spectrogram, t_new: usize) -> Result<Spectrogram> {
    spec.validate()?;
    if t_new == 0 {
        return Err(DubError::invalid("output must keep at least one frame"));
    }
    let t_old = spec.num_frames();
    let f_bins = spec.num_bins();
    let positions: Vec<f64> = if t_new == 1 {
        vec![(t_old - 1) as f64 / 2.0]
    } else {
        (0..t_new)
            .map(|t| t as f64 * (t_old - 1) as f64 / (t_new - 1) as f64)
            .collect()
    };
    let mut frames = vec![vec![0.0f64; f_bins]; t_new];
    let mut column = vec![0.0f64; t_old];
    for f in 0..f_bins {
        for (t, c) in column.iter_mut().enumerate() {
            *c = spec.frames[t][f];
        }
        let m = spline_second_derivs(&column);
        for (t, &u) in positions.iter().enumerate() {
            frames[t][f] = spline_eval(&column, &m, u).max(0.0);
        }
    }
    Ok(Spectrogram {
        frames,
        hop: spec.hop,
        window_size: spec.window_size,
        sample_rate: spec.sample_rate,
    })
}

/// Resize by a factor: the output has `max(1, round(T * factor))` frames.
pub fn resize_spectrogram(spec: &Spectrogram, factor: f64) -> Result<Spectrogram> {
    if !factor.is_finite() || !(MIN_RESIZE_FACTOR..=MAX_RESIZE_FACTOR).contains(&factor) {
        return Err(DubError::invalid(format!(
            "resize factor {} outside [{}, {}]",
            factor, MIN_RESIZE_FACTOR, MAX_RESIZE_FACTOR
        )));
    }
    let t_new = ((spec.num_frames() as f64 * factor).round() as usize).max(1);
    resize_to_frame_count(spec, t_new)
}

//! Non-blind RT60 from a known impulse response via Schroeder backward
//! integration: the energy decay curve is the reversed cumulative sum of
//! squared samples, and RT60 extrapolates the -5 dB to -25 dB linear fit.

use crate::error::{DubError, Result};
use crate::reverb::ImpulseResponse;

/// RT60 of an impulse response (seconds).
pub fn schroeder_rt60(rir: &ImpulseResponse) -> Result<f64> {
    let s = rir.samples();
    // backward-integrated energy decay curve, normalized to its start
    let mut edc = vec![0.0f64; s.len()];
    let mut acc = 0.0;
    for i in (0..s.len()).rev() {
        acc += s[i] * s[i];
        edc[i] = acc;
    }
    let total = edc[0];
    let db = |i: usize| 10.0 * (edc[i] / total).log10();

    let idx5 = (0..s.len()).find(|&i| db(i) <= -5.0);
    let idx25 = (0..s.len()).find(|&i| db(i) <= -25.0);
    let (lo, hi) = match (idx5, idx25) {
        (Some(lo), Some(hi)) if hi > lo + 4 => (lo, hi),
        _ => return Err(DubError::invalid("decay range not reached")),
    };

    // least-squares line through (time, dB) over the fit range
    let fs = rir.sample_rate() as f64;
    let mut n = 0.0f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0f64, 0.0, 0.0, 0.0);
    for i in lo..=hi {
        let y = db(i);
        if !y.is_finite() {
            continue;
        }
        let x = i as f64 / fs;
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if n < 2.0 || denom <= 0.0 {
        return Err(DubError::invalid("decay range not reached"));
    }
    let slope = (n * sxy - sx * sy) / denom; // dB per second, negative
    if slope >= -1e-9 {
        return Err(DubError::invalid("decay range not reached"));
    }
    Ok(-60.0 / slope)
}

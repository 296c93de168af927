//! Blind reverberation-time estimation from a recording.
//!
//! Each analysis window is modelled as Gaussian noise under an exponential
//! decay envelope, `x_n = sigma a^n e_n`. Maximising the likelihood over
//! `sigma` leaves a one-parameter profile in the decay rate `a`:
//!
//! ```text
//! LL(a) = -N/2 ln sigma_hat^2(a) - ln(a) N(N-1)/2,
//! sigma_hat^2(a) = 1/N sum x_n^2 a^(-2n)
//! ```
//!
//! Windows inside sustained speech fit `a -> 1` (no decay) and windows over
//! pauses fit the free decay of the room, so the distribution of per-window
//! estimates piles up at the true RT60 from below. The reported value is the
//! centre of the first well-populated histogram bin.

use crate::audio::AudioBuffer;
use crate::error::{DubError, Result};

/// Analysis window length in seconds (at the decimated rate).
const WINDOW_SECS: f64 = 0.4;
/// Decimation factor applied before fitting; decay envelopes survive it and
/// the likelihood evaluations get 8x cheaper.
const DECIMATION: usize = 8;
/// Search range for the per-window estimates, seconds.
const RT_GRID_LO: f64 = 0.05;
const RT_GRID_HI: f64 = 3.6;
const RT_GRID_POINTS: usize = 60;
/// Histogram bin width over per-window estimates, seconds.
const RT_BIN_WIDTH: f64 = 0.1;
/// Per-window estimates at the top of the search range mean the window saw
/// no decay at all (sustained sound); they carry no RT information.
const RT_EDGE_DISCARD: f64 = 0.9 * RT_GRID_HI;
/// Windows quieter than this fraction of the loudest window's RMS (-26 dB)
/// are skipped: that deep below the programme level a recording shows its
/// noise floor or the fading end of a tail, not the room's decay rate.
const MIN_WINDOW_RMS_RATIO: f64 = 0.05;
/// Reported estimates are clamped to this range.
const RT_REPORT_LO: f64 = 0.05;
const RT_REPORT_HI: f64 = 3.0;
/// ln(10^6): converts a -60 dB time to an amplitude time constant.
const RT_PER_TAU: f64 = 6.907755278982137;

/// Profile log-likelihood of decay rate `a` for one window (up to an
/// additive constant).
fn profile_ll(x: &[f64], a: f64) -> f64 {
    let n = x.len() as f64;
    let r = a.powi(-2);
    let mut w = 1.0f64;
    let mut acc = 0.0f64;
    for &v in x {
        acc += v * v * w;
        w *= r;
    }
    let sigma2 = acc / n;
    if sigma2 <= f64::MIN_POSITIVE {
        return f64::NEG_INFINITY;
    }
    -0.5 * n * sigma2.ln() - a.ln() * n * (n - 1.0) * 0.5
}

/// Maximum-likelihood RT60 for one window: coarse log-spaced grid, then a
/// ternary refinement between the best point's neighbours.
fn window_rt(x: &[f64], fs_d: f64) -> f64 {
    let ll_of_rt = |rt: f64| {
        let a = (-RT_PER_TAU / (rt * fs_d)).exp();
        profile_ll(x, a)
    };
    let log_lo = RT_GRID_LO.ln();
    let log_hi = RT_GRID_HI.ln();
    let step = (log_hi - log_lo) / (RT_GRID_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_ll = f64::NEG_INFINITY;
    for i in 0..RT_GRID_POINTS {
        let ll = ll_of_rt((log_lo + step * i as f64).exp());
        if ll > best_ll {
            best_ll = ll;
            best_i = i;
        }
    }
    let mut lo = log_lo + step * best_i.saturating_sub(1) as f64;
    let mut hi = (log_lo + step * (best_i + 1) as f64).min(log_hi);
    for _ in 0..40 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if ll_of_rt(m1.exp()) < ll_of_rt(m2.exp()) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Blind RT60 estimate for a recording.
///
/// Needs at least one second of audio with actual content; returns an
/// `insufficient signal` error otherwise.
pub fn estimate_rt60(audio: &AudioBuffer) -> Result<f64> {
    if audio.duration() < 1.0 {
        return Err(DubError::invalid(
            "insufficient signal for reverberation estimate",
        ));
    }
    let decimated: Vec<f64> = audio.samples().iter().step_by(DECIMATION).copied().collect();
    let fs_d = audio.sample_rate() as f64 / DECIMATION as f64;
    let win = (WINDOW_SECS * fs_d).round() as usize;
    let hop = win / 2;
    let global_rms = {
        let e: f64 = decimated.iter().map(|v| v * v).sum();
        (e / decimated.len() as f64).sqrt()
    };
    if global_rms <= 0.0 {
        return Err(DubError::invalid(
            "insufficient signal for reverberation estimate",
        ));
    }

    let mut windows: Vec<(f64, &[f64])> = Vec::new(); // (rms, samples)
    let mut start = 0;
    while start + win <= decimated.len() {
        let x = &decimated[start..start + win];
        start += hop;
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / win as f64).sqrt();
        windows.push((rms, x));
    }
    let max_rms = windows.iter().fold(0.0f64, |m, &(r, _)| m.max(r));
    let estimates: Vec<f64> = windows
        .iter()
        .filter(|&&(rms, _)| rms >= MIN_WINDOW_RMS_RATIO * max_rms)
        .map(|&(_, x)| window_rt(x, fs_d))
        .collect();
    if estimates.is_empty() {
        return Err(DubError::invalid(
            "insufficient signal for reverberation estimate",
        ));
    }

    // Windows that fit no decay at all pile up at the top of the search
    // range; drop them unless nothing else is left.
    let informative: Vec<f64> = estimates
        .iter()
        .copied()
        .filter(|&rt| rt < RT_EDGE_DISCARD)
        .collect();
    let pool = if informative.is_empty() {
        &estimates
    } else {
        &informative
    };

    // Histogram over the remaining estimates. Windows over free decays agree
    // on the true RT; windows that straddle sound and decay scatter upward,
    // so take the first (lowest) bin that is still well populated.
    let n_bins = ((RT_GRID_HI - RT_GRID_LO) / RT_BIN_WIDTH).ceil() as usize + 1;
    let bin_of =
        |rt: f64| (((rt - RT_GRID_LO) / RT_BIN_WIDTH).floor() as usize).min(n_bins - 1);
    let mut counts = vec![0usize; n_bins];
    for &rt in pool {
        counts[bin_of(rt)] += 1;
    }
    let max_count = *counts.iter().max().unwrap();
    let chosen = counts
        .iter()
        .position(|&c| c >= 2 && 2 * c >= max_count)
        .unwrap_or_else(|| counts.iter().position(|&c| c == max_count).unwrap());
    let members: Vec<f64> = pool.iter().copied().filter(|&rt| bin_of(rt) == chosen).collect();
    let mean = members.iter().sum::<f64>() / members.len() as f64;
    Ok(mean.clamp(RT_REPORT_LO, RT_REPORT_HI))
}

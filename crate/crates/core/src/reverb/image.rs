//! Synthetic shoebox impulse responses by the image-source method with a
//! uniform wall reflection coefficient.
//!
//! The coefficient comes from inverting Sabine's formula for the requested
//! reverberation time: `RT60 = 0.161 V / (A (1 - beta^2))` over the total
//! wall area, so `beta^2 = 1 - 0.161 V / (A RT60)`. Every image source at
//! distance `d` with `b` wall bounces contributes an impulse of amplitude
//! `beta^b / (4 pi d)` at the nearest sample to `d / c`.

use crate::error::{DubError, Result};
use crate::reverb::{distance, ImpulseResponse, RoomSpec};

/// Image position and bounce count along one axis: mirror index `m` and
/// parity `p` give coordinate `(1-2p) s + 2 m L` with `|m - p| + |m|`
/// reflections.
fn axis_images(s: f64, l: f64, c_t_max: f64) -> Vec<(f64, usize)> {
    let m_max = (c_t_max / (2.0 * l)).ceil() as i64 + 1;
    let mut out = Vec::new();
    for m in -m_max..=m_max {
        for p in [0i64, 1] {
            let coord = (1 - 2 * p) as f64 * s + 2.0 * m as f64 * l;
            let bounces = (m - p).unsigned_abs() as usize + m.unsigned_abs() as usize;
            out.push((coord, bounces));
        }
    }
    out
}

/// Image-source RIR for the room at the given sample rate.
pub fn generate_rir(room: &RoomSpec, sample_rate: u32) -> Result<ImpulseResponse> {
    room.validate()?;
    if sample_rate == 0 {
        return Err(DubError::invalid("sample rate must be positive"));
    }
    let fs = sample_rate as f64;
    let c = room.speed_of_sound;
    let mic = room.microphone;
    let direct = distance(room.source, mic);
    let direct_delay = (direct / c * fs).round() as usize;

    if room.target_rt60 <= 0.0 {
        // anechoic: the direct path only
        let mut samples = vec![0.0; direct_delay + 1];
        samples[direct_delay] = 1.0 / (4.0 * std::f64::consts::PI * direct);
        return ImpulseResponse::new(samples, sample_rate);
    }

    let (lx, ly, lz) = room.dimensions;
    let volume = lx * ly * lz;
    let area = 2.0 * (lx * ly + lx * lz + ly * lz);
    let beta_sq = 1.0 - 0.161 * volume / (area * room.target_rt60);
    if beta_sq <= 0.0 {
        return Err(DubError::invalid("room too small for target RT"));
    }
    let beta = beta_sq.sqrt();

    let t_max = 1.2 * room.target_rt60;
    let len = ((t_max * fs).round() as usize).max(direct_delay + 1);
    let c_t_max = c * t_max;
    let mut samples = vec![0.0f64; len];

    let xs = axis_images(room.source.0, lx, c_t_max);
    let ys = axis_images(room.source.1, ly, c_t_max);
    let zs = axis_images(room.source.2, lz, c_t_max);
    let betas: Vec<f64> = {
        // precomputed powers: bounce counts are bounded by the axis loops
        let max_b = room.max_order.max(1) + 1;
        (0..=max_b).map(|b| beta.powi(b as i32)).collect()
    };
    for &(x, bx) in &xs {
        let dx2 = (x - mic.0) * (x - mic.0);
        if dx2 > c_t_max * c_t_max {
            continue;
        }
        for &(y, by) in &ys {
            let bxy = bx + by;
            if bxy > room.max_order {
                continue;
            }
            let dxy2 = dx2 + (y - mic.1) * (y - mic.1);
            if dxy2 > c_t_max * c_t_max {
                continue;
            }
            for &(z, bz) in &zs {
                let bounces = bxy + bz;
                if bounces > room.max_order {
                    continue;
                }
                let d = (dxy2 + (z - mic.2) * (z - mic.2)).sqrt();
                let delay = (d / c * fs).round() as usize;
                if delay >= len {
                    continue;
                }
                samples[delay] += betas[bounces] / (4.0 * std::f64::consts::PI * d.max(1e-6));
            }
        }
    }
    ImpulseResponse::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reverb::schroeder_rt60;

    #[test]
    fn anechoic_direct_path() {
        // default geometry: distance sqrt(0.25 + 0.49) = 0.8602 m,
        // delay round(0.8602 / 343 * 16000) = 40 samples,
        // amplitude 1 / (4 pi d) = 0.09252
        let room = RoomSpec::default_room(0.0);
        let rir = generate_rir(&room, 16_000).unwrap();
        assert_eq!(rir.len(), 41);
        let peak_idx = (0..rir.len())
            .max_by(|&a, &b| rir.samples()[a].abs().total_cmp(&rir.samples()[b].abs()))
            .unwrap();
        assert_eq!(peak_idx, 40);
        assert!((rir.samples()[40] - 0.09252).abs() < 1e-4);
        let off_peak: f64 = rir.samples()[..40].iter().map(|v| v.abs()).sum();
        assert_eq!(off_peak, 0.0);
    }

    #[test]
    fn max_order_zero_keeps_direct_only() {
        let mut room = RoomSpec::default_room(0.4);
        room.max_order = 0;
        let rir = generate_rir(&room, 16_000).unwrap();
        let nonzero = rir.samples().iter().filter(|v| v.abs() > 0.0).count();
        assert_eq!(nonzero, 1);
        assert!((rir.samples()[40] - 0.09252).abs() < 1e-4);
    }


    #[test]
    fn doubling_distance_halves_direct_amplitude() {
        let mut near = RoomSpec::default_room(0.0);
        near.microphone = (2.5, 1.5, 1.6); // 0.5 m away
        let mut far = RoomSpec::default_room(0.0);
        far.microphone = (3.0, 1.5, 1.6); // 1.0 m away
        let a_near = generate_rir(&near, 16_000).unwrap();
        let a_far = generate_rir(&far, 16_000).unwrap();
        let peak = |r: &ImpulseResponse| r.samples().iter().cloned().fold(0.0f64, f64::max);
        let ratio = peak(&a_near) / peak(&a_far);
        assert!((ratio - 2.0).abs() < 1e-9, "ratio = {}", ratio);
    }

    #[test]
    fn sabine_target_within_twenty_percent() {
        let room = RoomSpec::default_room(0.4);
        let rir = generate_rir(&room, 16_000).unwrap();
        let rt = schroeder_rt60(&rir).unwrap();
        assert!(
            (0.32..=0.48).contains(&rt),
            "schroeder rt = {:.3} for target 0.4",
            rt
        );
    }

    #[test]
    fn impossible_absorption_is_rejected() {
        // 5x4x3 m: 0.161 V / A = 0.103, so targets below ~0.103 s need
        // beta^2 < 0
        let room = RoomSpec::default_room(0.05);
        let err = generate_rir(&room, 16_000).unwrap_err();
        assert!(err.to_string().contains("room too small"));
    }

    #[test]
    fn longer_target_longer_tail() {
        let r1 = generate_rir(&RoomSpec::default_room(0.3), 16_000).unwrap();
        let r2 = generate_rir(&RoomSpec::default_room(0.6), 16_000).unwrap();
        assert!(r2.len() > r1.len());
        let rt1 = schroeder_rt60(&r1).unwrap();
        let rt2 = schroeder_rt60(&r2).unwrap();
        assert!(rt2 > rt1);
    }
}

//! Room acoustics: blind and non-blind RT60 estimation, image-source
//! impulse-response synthesis, and convolution-based re-reverberation.

mod convolve;
mod image;
mod mle;
mod schroeder;

pub use convolve::{convolve, convolve_full};
pub use image::generate_rir;
pub use mle::estimate_rt60;
pub use schroeder::schroeder_rt60;

use crate::error::{DubError, Result};

pub const SPEED_OF_SOUND: f64 = 343.0;

/// A sampled room impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl ImpulseResponse {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(DubError::invalid("impulse response is empty"));
        }
        if sample_rate == 0 {
            return Err(DubError::invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(DubError::invalid("impulse response must be finite"));
        }
        if samples.iter().map(|s| s * s).sum::<f64>() <= 0.0 {
            return Err(DubError::invalid("impulse response has no energy"));
        }
        Ok(ImpulseResponse {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Scale so the largest absolute sample is 1.
    pub fn peak_normalized(&self) -> ImpulseResponse {
        let peak = self.samples.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        ImpulseResponse {
            samples: self.samples.iter().map(|&v| v / peak).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Shoebox-room description for the image-source generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomSpec {
    /// Room extents in meters (Lx, Ly, Lz).
    pub dimensions: (f64, f64, f64),
    pub source: (f64, f64, f64),
    pub microphone: (f64, f64, f64),
    /// Desired reverberation time in seconds (0 = anechoic).
    pub target_rt60: f64,
    /// Maximum total number of wall reflections per image.
    pub max_order: usize,
    pub speed_of_sound: f64,
}

impl RoomSpec {
    /// The stock 5 x 4 x 3 m room with a source/microphone pair 0.86 m
    /// apart; `max_order` is sized by [`RoomSpec::suggested_max_order`].
    pub fn default_room(target_rt60: f64) -> Self {
        let mut room = RoomSpec {
            dimensions: (5.0, 4.0, 3.0),
            source: (2.0, 1.5, 1.6),
            microphone: (2.5, 2.2, 1.6),
            target_rt60,
            max_order: 0,
            speed_of_sound: SPEED_OF_SOUND,
        };
        room.max_order = room.suggested_max_order();
        room
    }

    /// Reflection order at which an image's accumulated wall loss reaches
    /// 30 dB of energy (`beta^2order = 1e-3` with the Sabine-derived
    /// coefficient), i.e. past the -5..-25 dB region the decay time is
    /// read from.
    ///
    /// Enumerating much deeper is not just wasted work: images below that
    /// depth pile up in the late tail and drag the measured decay visibly
    /// past the Sabine target, so this cutoff is also what keeps the
    /// generated response close to `target_rt60`.
    pub fn suggested_max_order(&self) -> usize {
        if self.target_rt60 <= 0.0 {
            return 0;
        }
        let (lx, ly, lz) = self.dimensions;
        let volume = lx * ly * lz;
        let area = 2.0 * (lx * ly + lx * lz + ly * lz);
        let beta_sq = 1.0 - 0.161 * volume / (area * self.target_rt60);
        if beta_sq <= 0.0 {
            return 0; // generate_rir rejects such rooms anyway
        }
        (-3.0 * std::f64::consts::LN_10 / beta_sq.ln()).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let (lx, ly, lz) = self.dimensions;
        if !(lx.is_finite() && ly.is_finite() && lz.is_finite() && lx > 0.0 && ly > 0.0 && lz > 0.0)
        {
            return Err(DubError::invalid("room dimensions must be positive"));
        }
        let inside = |p: (f64, f64, f64)| {
            p.0 > 0.0 && p.0 < lx && p.1 > 0.0 && p.1 < ly && p.2 > 0.0 && p.2 < lz
        };
        if !inside(self.source) || !inside(self.microphone) {
            return Err(DubError::invalid(
                "source and microphone must be strictly inside the room",
            ));
        }
        if !self.target_rt60.is_finite() || self.target_rt60 < 0.0 {
            return Err(DubError::invalid("target RT60 must be >= 0"));
        }
        if !self.speed_of_sound.is_finite() || self.speed_of_sound <= 0.0 {
            return Err(DubError::invalid("speed of sound must be positive"));
        }
        let d = distance(self.source, self.microphone);
        if d < 1e-3 {
            return Err(DubError::invalid("source and microphone coincide"));
        }
        Ok(())
    }
}

pub(crate) fn distance(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2) + (a.2 - b.2).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_response_validation() {
        assert!(ImpulseResponse::new(vec![], 16_000).is_err());
        assert!(ImpulseResponse::new(vec![0.0, 0.0], 16_000).is_err());
        assert!(ImpulseResponse::new(vec![0.5], 0).is_err());
        assert!(ImpulseResponse::new(vec![f64::NAN], 16_000).is_err());
        let ir = ImpulseResponse::new(vec![0.0, 0.5, 0.25], 16_000).unwrap();
        assert_eq!(ir.len(), 3);
        let n = ir.peak_normalized();
        assert_eq!(n.samples()[1], 1.0);
    }

    #[test]
    fn room_validation() {
        let mut room = RoomSpec::default_room(0.4);
        assert!(room.validate().is_ok());
        room.source = (6.0, 1.0, 1.0);
        assert!(room.validate().is_err());
        let mut room = RoomSpec::default_room(0.4);
        room.microphone = room.source;
        assert!(room.validate().is_err());
        let mut room = RoomSpec::default_room(0.4);
        room.target_rt60 = -0.1;
        assert!(room.validate().is_err());
        let mut room = RoomSpec::default_room(0.4);
        room.dimensions = (0.0, 4.0, 3.0);
        assert!(room.validate().is_err());
    }

    #[test]
    fn suggested_order_scales_with_rt() {
        let short = RoomSpec::default_room(0.2).max_order;
        let long = RoomSpec::default_room(1.0).max_order;
        assert!(long > short);
        assert_eq!(RoomSpec::default_room(0.0).max_order, 0);
    }
}

//! Soft ratio masks for foreground/background separation, their binary
//! file format, and mask application (the inference path downstream of an
//! external separation network).
//!
//! Mask file layout: magic `DSMK`, then `T`, `F`, `hop`, `window`,
//! `sample_rate` as little-endian u32, then two row-major `T x F` float32
//! matrices (foreground first, background second).

use std::io::{Read, Write};
use std::path::Path;

use crate::audio::AudioBuffer;
use crate::dsp::{istft, ComplexSpectrogram};
use crate::error::{DubError, Result};

const MAGIC: &[u8; 4] = b"DSMK";

/// Per-bin weights in [0, 1] splitting a mixture into two sources.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioMaskPair {
    pub foreground: Vec<Vec<f64>>,
    pub background: Vec<Vec<f64>>,
}

/// STFT parameters a mask file was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskParams {
    pub hop: usize,
    pub window_size: usize,
    pub sample_rate: u32,
}

impl RatioMaskPair {
    pub fn new(foreground: Vec<Vec<f64>>, background: Vec<Vec<f64>>) -> Result<Self> {
        let pair = RatioMaskPair {
            foreground,
            background,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn num_frames(&self) -> usize {
        self.foreground.len()
    }

    pub fn num_bins(&self) -> usize {
        self.foreground.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.foreground.len();
        let f = self.num_bins();
        if t == 0 || f == 0 {
            return Err(DubError::invalid("empty mask"));
        }
        if self.background.len() != t
            || self.foreground.iter().any(|r| r.len() != f)
            || self.background.iter().any(|r| r.len() != f)
        {
            return Err(DubError::invalid("mask shapes do not match"));
        }
        let in_range = |m: &[Vec<f64>]| {
            m.iter()
                .flatten()
                .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
        };
        if !in_range(&self.foreground) || !in_range(&self.background) {
            return Err(DubError::invalid("mask values outside [0, 1]"));
        }
        Ok(())
    }
}

/// Element-wise mask application followed by ISTFT of both estimates.
pub fn apply_masks(
    mixture: &ComplexSpectrogram,
    masks: &RatioMaskPair,
) -> Result<(AudioBuffer, AudioBuffer)> {
    mixture.validate()?;
    masks.validate()?;
    if masks.num_frames() != mixture.num_frames() || masks.num_bins() != mixture.num_bins() {
        return Err(DubError::invalid(format!(
            "mask shape {}x{} does not match mixture {}x{}",
            masks.num_frames(),
            masks.num_bins(),
            mixture.num_frames(),
            mixture.num_bins()
        )));
    }
    let masked = |mask: &[Vec<f64>]| ComplexSpectrogram {
        frames: mixture
            .frames
            .iter()
            .zip(mask)
            .map(|(row, mrow)| row.iter().zip(mrow).map(|(c, &m)| c * m).collect())
            .collect(),
        hop: mixture.hop,
        window_size: mixture.window_size,
        sample_rate: mixture.sample_rate,
    };
    let fg = istft(&masked(&masks.foreground))?;
    let bg = istft(&masked(&masks.background))?;
    Ok((fg, bg))
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Write a mask pair with its STFT parameters.
pub fn write_mask_file(
    path: impl AsRef<Path>,
    masks: &RatioMaskPair,
    params: &MaskParams,
) -> Result<()> {
    masks.validate()?;
    let (t, f) = (masks.num_frames(), masks.num_bins());
    let mut out = Vec::with_capacity(24 + 2 * t * f * 4);
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, t as u32);
    push_u32(&mut out, f as u32);
    push_u32(&mut out, params.hop as u32);
    push_u32(&mut out, params.window_size as u32);
    push_u32(&mut out, params.sample_rate);
    for matrix in [&masks.foreground, &masks.background] {
        for row in matrix.iter() {
            for &v in row {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    let mut file = std::fs::File::create(path.as_ref())?;
    file.write_all(&out)?;
    Ok(())
}

/// Read a mask file, validating magic, payload size and value range.
pub fn read_mask_file(path: impl AsRef<Path>) -> Result<(RatioMaskPair, MaskParams)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..4] != MAGIC {
        return Err(DubError::invalid("not a DSMK mask file"));
    }
    let u32_at = |i: usize| {
        let mut b = [0u8; 4];
        b.copy_from_slice(&bytes[4 + 4 * i..8 + 4 * i]);
        u32::from_le_bytes(b)
    };
    let t = u32_at(0) as usize;
    let f = u32_at(1) as usize;
    let params = MaskParams {
        hop: u32_at(2) as usize,
        window_size: u32_at(3) as usize,
        sample_rate: u32_at(4),
    };
    if t == 0 || f == 0 {
        return Err(DubError::invalid("mask file declares an empty matrix"));
    }
    let expected = 24 + 2 * t * f * 4;
    if bytes.len() != expected {
        return Err(DubError::invalid(format!(
            "mask file size {} does not match header ({} expected)",
            bytes.len(),
            expected
        )));
    }
    let read_matrix = |offset: usize| -> Vec<Vec<f64>> {
        (0..t)
            .map(|r| {
                (0..f)
                    .map(|c| {
                        let i = offset + (r * f + c) * 4;
                        let mut b = [0u8; 4];
                        b.copy_from_slice(&bytes[i..i + 4]);
                        f32::from_le_bytes(b) as f64
                    })
                    .collect()
            })
            .collect()
    };
    let foreground = read_matrix(24);
    let background = read_matrix(24 + t * f * 4);
    RatioMaskPair::new(foreground, background).map(|m| (m, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
        AudioBuffer::new(samples, 16_000).unwrap()
    }

    fn constant_masks(t: usize, f: usize, fg: f64, bg: f64) -> RatioMaskPair {
        RatioMaskPair::new(vec![vec![fg; f]; t], vec![vec![bg; f]; t]).unwrap()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn identity_masks_pass_mixture_through() {
        let x = noise(8000, 21);
        let spec = stft(&x, 1024, 256).unwrap();
        let masks = constant_masks(spec.num_frames(), spec.num_bins(), 1.0, 0.0);
        let (fg, bg) = apply_masks(&spec, &masks).unwrap();
        let snr = {
            let n = x.len();
            let sig: f64 = x.samples().iter().map(|v| v * v).sum();
            let err: f64 = x
                .samples()
                .iter()
                .zip(fg.samples())
                .take(n)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            10.0 * (sig / err.max(1e-300)).log10()
        };
        assert!(snr > 50.0, "snr = {:.1}", snr);
        assert!(bg.peak() < 1e-9);
    }

    #[test]
    fn half_masks_halve_amplitude() {
        let x = noise(8000, 22);
        let spec = stft(&x, 1024, 256).unwrap();
        let full = istft(&spec).unwrap();
        let masks = constant_masks(spec.num_frames(), spec.num_bins(), 0.5, 0.5);
        let (fg, bg) = apply_masks(&spec, &masks).unwrap();
        for (h, f) in [(&fg, &full), (&bg, &full)] {
            let diff: Vec<f64> = h
                .samples()
                .iter()
                .zip(f.samples())
                .map(|(a, b)| 2.0 * a - b)
                .collect();
            assert!(rms(&diff) < 1e-9 * f.peak().max(1.0));
        }
    }

    #[test]
    fn complementary_masks_reconstruct_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = noise(9000, 24);
        let spec = stft(&x, 1024, 256).unwrap();
        let (t, f) = (spec.num_frames(), spec.num_bins());
        let fg: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..f).map(|_| rng.gen_range(0.0..=1.0)).collect())
            .collect();
        let bg: Vec<Vec<f64>> = fg
            .iter()
            .map(|row| row.iter().map(|m| 1.0 - m).collect())
            .collect();
        let masks = RatioMaskPair::new(fg, bg).unwrap();
        let reference = istft(&spec).unwrap();
        let (a, b) = apply_masks(&spec, &masks).unwrap();
        let resum: Vec<f64> = a
            .samples()
            .iter()
            .zip(b.samples())
            .zip(reference.samples())
            .map(|((x, y), r)| x + y - r)
            .collect();
        assert!(rms(&resum) < 1e-6, "rms = {:e}", rms(&resum));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = noise(4000, 25);
        let spec = stft(&x, 1024, 256).unwrap();
        let masks = constant_masks(3, 4, 0.5, 0.5);
        let err = apply_masks(&spec, &masks).unwrap_err();
        assert!(err.to_string().contains("does not match"));
    }

    #[test]
    fn mask_validation() {
        assert!(RatioMaskPair::new(vec![vec![0.5]], vec![vec![1.5]]).is_err());
        assert!(RatioMaskPair::new(vec![vec![0.5]], vec![vec![0.1, 0.2]]).is_err());
        assert!(RatioMaskPair::new(vec![], vec![]).is_err());
        assert!(RatioMaskPair::new(vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn dsmk_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let (t, f) = (7, 13);
        let gen = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..t)
                .map(|_| (0..f).map(|_| rng.gen_range(0.0..=1.0)).collect())
                .collect()
        };
        let masks = RatioMaskPair::new(gen(&mut rng), gen(&mut rng)).unwrap();
        let params = MaskParams {
            hop: 256,
            window_size: 1024,
            sample_rate: 16_000,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.dsmk");
        write_mask_file(&path, &masks, &params).unwrap();
        let (back, back_params) = read_mask_file(&path).unwrap();
        assert_eq!(back_params, params);
        for (a, b) in masks
            .foreground
            .iter()
            .flatten()
            .chain(masks.background.iter().flatten())
            .zip(back.foreground.iter().flatten().chain(back.background.iter().flatten()))
        {
            assert!((a - b).abs() <= 1.2e-7, "{} vs {}", a, b); // f32 rounding
        }
    }

    #[test]
    fn dsmk_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let bad_magic = dir.path().join("bad.dsmk");
        std::fs::write(&bad_magic, b"NOPE").unwrap();
        assert!(read_mask_file(&bad_magic).is_err());

        let truncated = dir.path().join("short.dsmk");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DSMK");
        for v in [2u32, 3, 256, 1024, 16_000] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&1.0f32.to_le_bytes()); // far too little data
        std::fs::write(&truncated, &bytes).unwrap();
        let err = read_mask_file(&truncated).unwrap_err();
        assert!(err.to_string().contains("size"));

        let out_of_range = dir.path().join("range.dsmk");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DSMK");
        for v in [1u32, 1, 256, 1024, 16_000] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        std::fs::write(&out_of_range, &bytes).unwrap();
        let err = read_mask_file(&out_of_range).unwrap_err();
        assert!(err.to_string().contains("outside [0, 1]"));
    }
}

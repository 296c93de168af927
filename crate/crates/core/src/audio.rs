//! Mono audio buffers and WAV file I/O.
//!
//! WAV files are read and written as mono, PCM16 or IEEE float32. Samples are
//! held as `f64` internally so downstream DSP keeps full precision.

use std::path::Path;

use crate::error::{DubError, Result};

/// Default sample rate used when synthesizing fixtures and impulse responses.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// A mono audio signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(DubError::invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(DubError::invalid("audio samples must be finite"));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    /// All-zero buffer of `len` samples.
    pub fn silence(len: usize, sample_rate: u32) -> Self {
        AudioBuffer {
            samples: vec![0.0; len],
            sample_rate,
        }
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

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Read a mono WAV file (PCM16 or float32).
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = hound::WavReader::open(path.as_ref())?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(DubError::invalid(format!(
                "{}: expected mono WAV, got {} channels",
                path.as_ref().display(),
                spec.channels
            )));
        }
        let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
            (hound::SampleFormat::Int, 16) => reader
                .samples::<i16>()
                .map(|s| s.map(|v| v as f64 / 32768.0))
                .collect::<std::result::Result<_, _>>()?,
            (hound::SampleFormat::Float, 32) => reader
                .samples::<f32>()
                .map(|s| s.map(|v| v as f64))
                .collect::<std::result::Result<_, _>>()?,
            (fmt, bits) => {
                return Err(DubError::invalid(format!(
                    "{}: unsupported WAV format {:?}/{} bits (expected PCM16 or float32)",
                    path.as_ref().display(),
                    fmt,
                    bits
                )));
            }
        };
        AudioBuffer::new(samples, spec.sample_rate)
    }

    /// Write as a mono float32 WAV.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut writer = hound::WavWriter::create(path.as_ref(), spec)?;
        for &s in &self.samples {
            writer.write_sample(s as f32)?;
        }
        writer.finalize()?;
        Ok(())
    }
}

//! Core library for `dubsync`: prosody-aware dubbing synchronization.
//!
//! The pieces fit together roughly in pipeline order:
//!
//! * [`segment`] — timed source words, pause-based breakpoint detection;
//! * [`breaklm`] — POS n-gram model scoring break plausibility;
//! * [`align`] — dynamic-programming segmentation of the translation;
//! * [`lenctl`] — length-ratio classification and corpus tagging for
//!   length-controlled translation models;
//! * [`dsp`] — STFT/Mel tools, spectrogram resizing, duration fitting and
//!   ratio-mask source separation;
//! * [`reverb`] — RT60 estimation (Schroeder and blind MLE) and synthetic
//!   room impulse responses;
//! * [`pipeline`] — the end-to-end dubbing job runner.

pub mod align;
pub mod audio;
pub mod breaklm;
pub mod dsp;
pub mod error;
pub mod lenctl;
pub mod pipeline;
pub mod reverb;
pub mod segment;

pub use audio::AudioBuffer;
pub use error::{DubError, Result};

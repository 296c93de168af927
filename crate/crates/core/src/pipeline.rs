//! End-to-end dubbing jobs: plan segment spans from the alignment, drive an
//! external TTS command per segment, fit each synthesis to its span, and
//! re-render over the original background with matched reverberation.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::align::{align, AlignmentConfig, AlignmentFile};
use crate::audio::AudioBuffer;
use crate::breaklm::PosNGramModel;
use crate::dsp::{apply_masks, fit_duration, mix, read_mask_file, stft};
use crate::error::{DubError, Result};
use crate::reverb::{convolve, estimate_rt60, generate_rir, RoomSpec};
use crate::segment::SourceUtterance;

/// Estimated reverberation at or below this is treated as anechoic and the
/// re-reverberation stage is skipped; the stock room cannot produce decays
/// this short anyway.
pub const REVERB_FLOOR: f64 = 0.15;

/// Per-job tuning, all optional in the job file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct JobConfig {
    pub alignment: AlignmentConfig,
    /// POS n-gram counts file for break scoring; a uniform model (break
    /// probability 1/2 everywhere) is used when absent.
    pub break_lm: Option<PathBuf>,
}

/// A dubbing job, usually read from a JSON job file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DubbingJob {
    pub original_audio: PathBuf,
    pub transcript: Vec<SourceUtterance>,
    pub translations: Vec<crate::segment::TargetSentence>,
    /// Shell command template. `{out}` is replaced with the WAV path the
    /// command must write; `{text}` with the segment text, which is piped
    /// to stdin instead when the placeholder is absent.
    pub tts_command: String,
    /// Optional ratio-mask file for foreground/background separation.
    #[serde(default)]
    pub masks: Option<PathBuf>,
    pub output: PathBuf,
    #[serde(default)]
    pub config: JobConfig,
}

impl DubbingJob {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Structural invariants that hold independent of the filesystem.
    fn validate_shape(&self) -> Result<()> {
        if self.transcript.is_empty() {
            return Err(DubError::invalid("job has no utterances"));
        }
        if self.transcript.len() != self.translations.len() {
            return Err(DubError::invalid(format!(
                "transcript has {} utterances but there are {} translations",
                self.transcript.len(),
                self.translations.len()
            )));
        }
        if !self.tts_command.contains("{out}") {
            return Err(DubError::invalid("tts command must contain {out}"));
        }
        self.config.alignment.validate()
    }

    /// Full validation including referenced files.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        for (name, path) in [
            ("original audio", Some(&self.original_audio)),
            ("mask file", self.masks.as_ref()),
            ("break LM", self.config.break_lm.as_ref()),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(DubError::invalid(format!(
                        "{} not found: {}",
                        name,
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One dubbed segment: planned words and time span, plus the synthesis
/// artifacts once it has been through TTS and duration fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub utterance: usize,
    pub segment: usize,
    pub words: Vec<String>,
    /// Span inherited from the source segment, seconds.
    pub start: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tts_audio: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stretch_factor: Option<f64>,
}

impl SegmentPlan {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    fn id(&self) -> String {
        format!("segment {}.{}", self.utterance, self.segment)
    }
}

fn with_context(ctx: &str, err: DubError) -> DubError {
    match err {
        DubError::External(m) => DubError::External(format!("{}: {}", ctx, m)),
        DubError::Invalid(m) => DubError::Invalid(format!("{}: {}", ctx, m)),
        other => DubError::Invalid(format!("{}: {}", ctx, other)),
    }
}

/// Align every translation against its utterance and flatten the segments
/// into a start-sorted plan list.
pub fn plan(job: &DubbingJob, model: &PosNGramModel) -> Result<Vec<SegmentPlan>> {
    Ok(plan_with_alignments(job, model)?.0)
}

fn plan_with_alignments(
    job: &DubbingJob,
    model: &PosNGramModel,
) -> Result<(Vec<SegmentPlan>, Vec<AlignmentFile>)> {
    job.validate_shape()?;
    let mut plans = Vec::new();
    let mut files = Vec::new();
    for (i, (e, f)) in job.transcript.iter().zip(&job.translations).enumerate() {
        let seg = align(e, f, model, &job.config.alignment)
            .map_err(|err| with_context(&format!("utterance {}", i), err))?;
        let file = AlignmentFile::new(&seg, f);
        for (t, s) in file.segments.iter().enumerate() {
            plans.push(SegmentPlan {
                utterance: i,
                segment: t,
                words: s.words.clone(),
                start: s.start,
                end: s.end,
                tts_audio: None,
                stretch_factor: None,
            });
        }
        files.push(file);
    }
    plans.sort_by(|a, b| a.start.total_cmp(&b.start));
    for pair in plans.windows(2) {
        if pair[1].start + 1e-9 < pair[0].end {
            return Err(DubError::invalid(format!(
                "{} and {} overlap in time",
                pair[0].id(),
                pair[1].id()
            )));
        }
    }
    Ok((plans, files))
}

fn sh_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

fn build_tts_command(template: &str, text: &str, out: &Path) -> Result<(String, bool)> {
    if !template.contains("{out}") {
        return Err(DubError::invalid("tts command must contain {out}"));
    }
    let out_str = out
        .to_str()
        .ok_or_else(|| DubError::invalid("temp path is not valid UTF-8"))?;
    let inline_text = template.contains("{text}");
    let mut cmd = template.replace("{out}", &sh_quote(out_str));
    if inline_text {
        cmd = cmd.replace("{text}", &sh_quote(text));
    }
    Ok((cmd, inline_text))
}

/// Run the external TTS for one segment and fit the result to the planned
/// span. Records the output path and applied stretch factor on the plan.
pub fn synthesize_and_fit(
    plan: &mut SegmentPlan,
    tts_command: &str,
    tmp_dir: &Path,
) -> Result<AudioBuffer> {
    let id = plan.id();
    let out_path = tmp_dir.join(format!("tts_{:03}_{:03}.wav", plan.utterance, plan.segment));
    let text = plan.text();
    let (cmd, inline_text) = build_tts_command(tts_command, &text, &out_path)?;

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(if inline_text {
            Stdio::null()
        } else {
            Stdio::piped()
        })
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| DubError::external(format!("{}: cannot spawn shell: {}", id, e)))?;
    if !inline_text {
        if let Some(mut stdin) = child.stdin.take() {
            // the command may exit without reading; a broken pipe is fine
            let _ = stdin.write_all(text.as_bytes());
            let _ = stdin.write_all(b"\n");
        }
    }
    let output = child
        .wait_with_output()
        .map_err(|e| DubError::external(format!("{}: tts command failed: {}", id, e)))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        let tail: String = stderr.chars().rev().take(400).collect::<Vec<_>>().iter().rev().collect();
        return Err(DubError::external(format!(
            "{}: tts command exited with {}: {}",
            id,
            output.status,
            tail.trim()
        )));
    }

    let raw = AudioBuffer::read_wav(&out_path).map_err(|e| {
        DubError::external(format!("{}: tts output unreadable: {}", id, e))
    })?;
    let factor = plan.duration() / raw.duration();
    let fitted = fit_duration(&raw, plan.duration()).map_err(|e| with_context(&id, e))?;
    plan.tts_audio = Some(out_path);
    plan.stretch_factor = Some(factor);
    Ok(fitted)
}

/// Everything `render` learns on the way to the final mix.
#[derive(Debug)]
pub struct RenderOutcome {
    pub audio: AudioBuffer,
    /// Reverberation time estimated from the original, seconds.
    pub rt60: f64,
    /// Gain applied by the final mix to avoid clipping (1.0 = none).
    pub peak_scale: f64,
}

/// Re-render: separate the background if masks are available, estimate the
/// original's reverberation, re-reverberate the fitted segments, place them
/// at their spans, and mix with the background at unit gains.
pub fn render(
    job: &DubbingJob,
    plans: &[SegmentPlan],
    fitted: &[AudioBuffer],
) -> Result<RenderOutcome> {
    if plans.len() != fitted.len() {
        return Err(DubError::invalid("fitted segment count does not match plan"));
    }
    let original = AudioBuffer::read_wav(&job.original_audio)
        .map_err(|e| with_context("original audio", e))?;
    let sr = original.sample_rate();
    for (p, f) in plans.iter().zip(fitted) {
        if f.sample_rate() != sr {
            return Err(DubError::invalid(format!(
                "{}: sample rate {} does not match original {}",
                p.id(),
                f.sample_rate(),
                sr
            )));
        }
    }

    let background = match &job.masks {
        Some(path) => {
            let (masks, params) = read_mask_file(path).map_err(|e| with_context("separation", e))?;
            if params.sample_rate != sr {
                return Err(DubError::invalid(format!(
                    "separation: mask sample rate {} does not match audio {}",
                    params.sample_rate, sr
                )));
            }
            let mixture = stft(&original, params.window_size, params.hop)
                .map_err(|e| with_context("separation", e))?;
            let (_fg, bg) =
                apply_masks(&mixture, &masks).map_err(|e| with_context("separation", e))?;
            let mut samples = bg.into_samples();
            samples.truncate(original.len());
            samples.resize(original.len(), 0.0);
            AudioBuffer::new(samples, sr)?
        }
        None => AudioBuffer::silence(original.len(), sr),
    };

    // blind RT from the separated background when it carries signal,
    // otherwise from the mixture
    let rt60 = estimate_rt60(&background)
        .or_else(|_| estimate_rt60(&original))
        .map_err(|e| with_context("reverberation estimate", e))?;

    let rir = if rt60 > REVERB_FLOOR {
        let room = RoomSpec::default_room(rt60);
        // normalized so the direct path keeps the speech at its TTS level
        Some(
            generate_rir(&room, sr)
                .map_err(|e| with_context("reverberation", e))?
                .peak_normalized(),
        )
    } else {
        None
    };

    let mut timeline = vec![0.0f64; original.len()];
    for (p, dry) in plans.iter().zip(fitted) {
        let wet;
        let seg = match &rir {
            Some(r) => {
                wet = convolve(dry, r)
                    .map_err(|e| with_context(&format!("reverberation: {}", p.id()), e))?;
                &wet
            }
            None => dry,
        };
        let offset = (p.start * sr as f64).round() as usize;
        for (n, &v) in seg.samples().iter().enumerate() {
            if offset + n < timeline.len() {
                timeline[offset + n] += v;
            }
        }
    }
    let speech = AudioBuffer::new(timeline, sr)?;

    let (audio, peak_scale) =
        mix(&[(&speech, 1.0), (&background, 1.0)]).map_err(|e| with_context("mixing", e))?;
    Ok(RenderOutcome {
        audio,
        rt60,
        peak_scale,
    })
}

/// Summary of a completed job.
#[derive(Debug)]
pub struct JobReport {
    pub output: PathBuf,
    pub rt60: f64,
    pub peak_scale: f64,
    pub plans: Vec<SegmentPlan>,
}

fn tmp_base() -> PathBuf {
    std::env::var_os("DUBSYNC_TMP")
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir)
}

/// Run a whole job: plan, synthesize, fit, render, and write the output WAV
/// plus inspection artifacts (alignment JSON, fitted per-segment WAVs, the
/// estimated RT) beside it.
pub fn run_job(job: &DubbingJob) -> Result<JobReport> {
    job.validate()?;
    let model = match &job.config.break_lm {
        Some(path) => PosNGramModel::load(path)?,
        None => PosNGramModel::uniform(),
    };
    let (mut plans, alignments) = plan_with_alignments(job, &model)?;

    let tmp = tempfile::Builder::new()
        .prefix("dubsync-")
        .tempdir_in(tmp_base())
        .map_err(|e| DubError::invalid(format!("cannot create temp dir: {}", e)))?;
    let mut fitted = Vec::with_capacity(plans.len());
    for p in plans.iter_mut() {
        fitted.push(synthesize_and_fit(p, &job.tts_command, tmp.path())?);
    }

    let outcome = render(job, &plans, &fitted)?;

    if let Some(dir) = job.output.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let stem = job
        .output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dub")
        .to_string();
    let side = |suffix: &str| {
        let mut p = job.output.clone();
        p.set_file_name(format!("{}{}", stem, suffix));
        p
    };

    outcome.audio.write_wav(&job.output)?;
    std::fs::write(
        side(".alignment.json"),
        serde_json::to_string_pretty(&alignments)?,
    )?;
    std::fs::write(side(".rt60.txt"), format!("{:.6}\n", outcome.rt60))?;
    for (i, seg) in fitted.iter().enumerate() {
        seg.write_wav(side(&format!(".seg{:03}.wav", i)))?;
    }

    Ok(JobReport {
        output: job.output.clone(),
        rt60: outcome.rt60,
        peak_scale: outcome.peak_scale,
        plans,
    })
}

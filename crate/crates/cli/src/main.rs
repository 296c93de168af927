//! Command-line front end. Exit codes: 0 success, 2 validation error,
//! 3 external-command failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dubsync_core::align::{align, AlignmentConfig, AlignmentFile};
use dubsync_core::breaklm::{parse_pos_corpus, prepare_pos_corpus, PosNGramModel};
use dubsync_core::dsp::{apply_masks, fit_duration, read_mask_file, stft};
use dubsync_core::lenctl::{
    corpus_ratio_stats, format_pair_corpus, parse_pair_corpus, partition_corpus,
    LengthThresholds, DEFAULT_T1, DEFAULT_T2,
};
use dubsync_core::pipeline::{run_job, DubbingJob};
use dubsync_core::reverb::{
    convolve, estimate_rt60, generate_rir, ImpulseResponse, RoomSpec, SPEED_OF_SOUND,
};
use dubsync_core::segment::{SourceUtterance, TargetSentence};
use dubsync_core::{AudioBuffer, DubError};

#[derive(Parser)]
#[command(name = "dubsync", version, about = "dubbing synchronization toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the POS n-gram break model from a tagged corpus
    LmTrain {
        /// n-gram order
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// corpus: one sentence per line of whitespace-separated POS/BR tokens
        #[arg(long = "in")]
        input: PathBuf,
        /// output model file (one "count TAB token..." line per n-gram)
        #[arg(long)]
        out: PathBuf,
        /// treat the corpus as raw text: tag words with the fallback
        /// tagger and turn pause punctuation into BR
        #[arg(long)]
        raw: bool,
    },
    /// Align a translated sentence to a source utterance's segments
    Align {
        /// source utterance JSON (words with timings, optional breakpoints)
        #[arg(long)]
        transcript: PathBuf,
        /// target sentence JSON (words, optional POS tags)
        #[arg(long)]
        translation: PathBuf,
        /// break model file; a uniform model is used when omitted
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a parallel corpus into verbosity groups and prepend tokens
    Partition {
        #[arg(long, default_value_t = DEFAULT_T1)]
        t1: f64,
        #[arg(long, default_value_t = DEFAULT_T2)]
        t2: f64,
        /// corpus: one "source TAB target" pair per line
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// optional JSON report with group counts and ratio statistics
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Apply a precomputed ratio-mask pair to split a mixture
    SeparateApply {
        #[arg(long)]
        audio: PathBuf,
        /// binary DSMK mask file
        #[arg(long)]
        masks: PathBuf,
        /// foreground (speech) output WAV
        #[arg(long)]
        fg: PathBuf,
        /// background output WAV
        #[arg(long)]
        bg: PathBuf,
    },
    /// Time-stretch audio to an exact duration
    Fit {
        #[arg(long)]
        audio: PathBuf,
        /// target duration in seconds
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Blind reverberation-time estimate (prints seconds)
    #[command(name = "rt60")]
    Rt60 {
        #[arg(long)]
        audio: PathBuf,
    },
    /// Generate a shoebox-room impulse response for a target RT60
    Rir {
        #[arg(long)]
        rt60: f64,
        /// room dimensions in meters as LxWxH
        #[arg(long, default_value = "5x4x3")]
        room: String,
        #[arg(long, default_value_t = 16_000)]
        sample_rate: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convolve audio with an impulse response
    Reverb {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        rir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full dubbing job from a JSON job file
    Dub {
        #[arg(long)]
        job: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dubsync: {}", e);
            ExitCode::from(match e {
                DubError::External(_) => 3u8,
                _ => 2u8,
            })
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> dubsync_core::Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn write_trimmed(buf: AudioBuffer, len: usize, path: &Path) -> dubsync_core::Result<()> {
    let sr = buf.sample_rate();
    let mut samples = buf.into_samples();
    if samples.len() > len {
        samples.truncate(len);
    }
    AudioBuffer::new(samples, sr)?.write_wav(path)
}

fn parse_room(s: &str) -> dubsync_core::Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split('x')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| DubError::invalid(format!("bad room spec '{}', expected LxWxH", s)))?;
    if parts.len() != 3 {
        return Err(DubError::invalid(format!(
            "bad room spec '{}', expected LxWxH",
            s
        )));
    }
    Ok((parts[0], parts[1], parts[2]))
}

fn run(cmd: Cmd) -> dubsync_core::Result<()> {
    match cmd {
        Cmd::LmTrain {
            order,
            input,
            out,
            raw,
        } => {
            let text = std::fs::read_to_string(&input)?;
            let lines: Vec<String> = text.lines().map(String::from).collect();
            let corpus = if raw {
                prepare_pos_corpus(&lines)
            } else {
                parse_pos_corpus(&lines)
            };
            let model = PosNGramModel::train(&corpus, order)?;
            model.save(&out)?;
            eprintln!(
                "dubsync: trained order-{} model on {} sentences ({} tags)",
                order,
                corpus.len(),
                model.vocab().len()
            );
        }
        Cmd::Align {
            transcript,
            translation,
            lm,
            out,
        } => {
            let e: SourceUtterance = read_json(&transcript)?;
            let f: TargetSentence = read_json(&translation)?;
            let model = match lm {
                Some(p) => PosNGramModel::load(p)?,
                None => PosNGramModel::uniform(),
            };
            let seg = align(&e, &f, &model, &AlignmentConfig::default())?;
            let file = AlignmentFile::new(&seg, &f);
            std::fs::write(&out, serde_json::to_string_pretty(&file)? + "\n")?;
        }
        Cmd::Partition {
            t1,
            t2,
            input,
            out,
            stats,
        } => {
            let pairs = parse_pair_corpus(&std::fs::read_to_string(&input)?)?;
            let th = LengthThresholds::new(t1, t2)?;
            let (tagged, counts) = partition_corpus(&pairs, th)?;
            std::fs::write(
                &out,
                format_pair_corpus(tagged.iter().map(|t| (t.source.as_str(), t.target.as_str()))),
            )?;
            if let Some(path) = stats {
                let ratios = corpus_ratio_stats(&pairs)?;
                let doc = serde_json::json!({ "counts": counts, "ratios": ratios });
                std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
            }
            eprintln!(
                "dubsync: {} pairs (short {}, normal {}, long {})",
                counts.total(),
                counts.short,
                counts.normal,
                counts.long
            );
        }
        Cmd::SeparateApply {
            audio,
            masks,
            fg,
            bg,
        } => {
            let mixture = AudioBuffer::read_wav(&audio)?;
            let (mask_pair, params) = read_mask_file(&masks)?;
            if params.sample_rate != mixture.sample_rate() {
                return Err(DubError::invalid(format!(
                    "mask sample rate {} does not match audio {}",
                    params.sample_rate,
                    mixture.sample_rate()
                )));
            }
            let spec = stft(&mixture, params.window_size, params.hop)?;
            let (fg_audio, bg_audio) = apply_masks(&spec, &mask_pair)?;
            write_trimmed(fg_audio, mixture.len(), &fg)?;
            write_trimmed(bg_audio, mixture.len(), &bg)?;
        }
        Cmd::Fit {
            audio,
            duration,
            out,
        } => {
            let input = AudioBuffer::read_wav(&audio)?;
            fit_duration(&input, duration)?.write_wav(&out)?;
        }
        Cmd::Rt60 { audio } => {
            let rt = estimate_rt60(&AudioBuffer::read_wav(&audio)?)?;
            println!("{:.6}", rt);
        }
        Cmd::Rir {
            rt60,
            room,
            sample_rate,
            out,
        } => {
            let dims = parse_room(&room)?;
            // source/microphone sit at the same relative spot as in the
            // stock 5x4x3 room
            let mut spec = RoomSpec {
                dimensions: dims,
                source: (dims.0 * 0.4, dims.1 * 0.375, dims.2 * 8.0 / 15.0),
                microphone: (dims.0 * 0.5, dims.1 * 0.55, dims.2 * 8.0 / 15.0),
                target_rt60: rt60,
                max_order: 0,
                speed_of_sound: SPEED_OF_SOUND,
            };
            spec.max_order = spec.suggested_max_order();
            let rir = generate_rir(&spec, sample_rate)?;
            AudioBuffer::new(rir.samples().to_vec(), rir.sample_rate())?.write_wav(&out)?;
        }
        Cmd::Reverb { audio, rir, out } => {
            let dry = AudioBuffer::read_wav(&audio)?;
            let r = AudioBuffer::read_wav(&rir)?;
            let sr = r.sample_rate();
            let ir = ImpulseResponse::new(r.into_samples(), sr)?;
            convolve(&dry, &ir)?.write_wav(&out)?;
        }
        Cmd::Dub { job } => {
            let job = DubbingJob::from_file(&job)?;
            let report = run_job(&job)?;
            eprintln!(
                "dubsync: {} segments, estimated rt60 {:.3} s, peak scale {:.3}",
                report.plans.len(),
                report.rt60,
                report.peak_scale
            );
            println!("{}", report.output.display());
        }
    }
    Ok(())
}

//! Core domain types: timed source utterances, translated target sentences,
//! and segmentations produced by the aligner.
//!
//! Indices follow the 1-based convention of the data model: a breakpoint `p`
//! means "the segment ends after word `p`", and the final breakpoint always
//! equals the word count.

use serde::{Deserialize, Serialize};

use crate::breaklm::fallback_pos_tag;
use crate::error::{DubError, Result};

/// Default pause threshold (seconds) for deriving breakpoints from timings.
pub const DEFAULT_PAUSE_THRESHOLD: f64 = 0.3;

/// Number of non-whitespace characters in a string; the duration proxy d(.).
pub fn char_len(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

/// A source word with its start/end time in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedWord {
    pub text: String,
    pub start: f64,
    pub end: f64,
}

impl TimedWord {
    pub fn new(text: impl Into<String>, start: f64, end: f64) -> Result<Self> {
        let word = TimedWord {
            text: text.into(),
            start,
            end,
        };
        word.validate()?;
        Ok(word)
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(DubError::invalid("word text is empty"));
        }
        if !(self.start.is_finite() && self.end.is_finite()) || self.start < 0.0 {
            return Err(DubError::invalid(format!(
                "word {:?}: times must be finite and start >= 0",
                self.text
            )));
        }
        if self.end <= self.start {
            return Err(DubError::invalid(format!(
                "word {:?}: end ({}) must be greater than start ({})",
                self.text, self.end, self.start
            )));
        }
        Ok(())
    }
}

/// Returns breakpoint indices derived from inter-word pauses: every 1-based
/// index `p` with `words[p+1].start - words[p].end >= pause_threshold`, plus
/// the final index `n`.
pub fn detect_breakpoints(words: &[TimedWord], pause_threshold: f64) -> Result<Vec<usize>> {
    if words.is_empty() {
        return Err(DubError::invalid("empty utterance"));
    }
    if !(pause_threshold > 0.0) {
        return Err(DubError::invalid("pause threshold must be positive"));
    }
    let n = words.len();
    let mut breakpoints = Vec::new();
    for p in 0..n - 1 {
        let gap = words[p + 1].start - words[p].end;
        if gap >= pause_threshold {
            breakpoints.push(p + 1);
        }
    }
    breakpoints.push(n);
    Ok(breakpoints)
}

/// A source utterance: timed words plus the breakpoints that partition it
/// into pause-delimited segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUtterance", into = "RawUtterance")]
pub struct SourceUtterance {
    words: Vec<TimedWord>,
    breakpoints: Vec<usize>,
}

#[derive(Serialize, Deserialize, Clone)]
struct RawUtterance {
    words: Vec<TimedWord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    breakpoints: Option<Vec<usize>>,
}

impl TryFrom<RawUtterance> for SourceUtterance {
    type Error = DubError;

    fn try_from(raw: RawUtterance) -> Result<Self> {
        match raw.breakpoints {
            Some(bps) => SourceUtterance::new(raw.words, bps),
            None => SourceUtterance::from_timings(raw.words, DEFAULT_PAUSE_THRESHOLD),
        }
    }
}

impl From<SourceUtterance> for RawUtterance {
    fn from(u: SourceUtterance) -> Self {
        RawUtterance {
            words: u.words,
            breakpoints: Some(u.breakpoints),
        }
    }
}

impl SourceUtterance {
    pub fn new(words: Vec<TimedWord>, breakpoints: Vec<usize>) -> Result<Self> {
        if words.is_empty() {
            return Err(DubError::invalid("empty utterance"));
        }
        for word in &words {
            word.validate()?;
        }
        for pair in words.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(DubError::invalid(format!(
                    "words {:?} and {:?} overlap in time",
                    pair[0].text, pair[1].text
                )));
            }
        }
        let n = words.len();
        if breakpoints.is_empty() || breakpoints.len() > n {
            return Err(DubError::invalid("breakpoint count must be in 1..=n"));
        }
        for pair in breakpoints.windows(2) {
            if pair[1] <= pair[0] {
                return Err(DubError::invalid(
                    "breakpoints must be strictly increasing",
                ));
            }
        }
        if breakpoints[0] < 1 || *breakpoints.last().unwrap() != n {
            return Err(DubError::invalid(
                "breakpoints must be 1-based and end at the word count",
            ));
        }
        Ok(SourceUtterance { words, breakpoints })
    }

    /// Build from word timings alone, deriving breakpoints from pauses.
    pub fn from_timings(words: Vec<TimedWord>, pause_threshold: f64) -> Result<Self> {
        let breakpoints = detect_breakpoints(&words, pause_threshold)?;
        SourceUtterance::new(words, breakpoints)
    }

    pub fn words(&self) -> &[TimedWord] {
        &self.words
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    /// Number of segments (k).
    pub fn segment_count(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    /// Words of segment `t` (1-based).
    pub fn segment_words(&self, t: usize) -> Result<&[TimedWord]> {
        let (lo, hi) = self.segment_bounds(t)?;
        Ok(&self.words[lo..hi])
    }

    /// Character-count duration of segment `t` (1-based): the sum of
    /// non-whitespace character counts of its words.
    pub fn segment_char_duration(&self, t: usize) -> Result<usize> {
        Ok(self
            .segment_words(t)?
            .iter()
            .map(|w| char_len(&w.text))
            .sum())
    }

    /// Time span of segment `t`: start of its first word to end of its last.
    pub fn segment_time_span(&self, t: usize) -> Result<(f64, f64)> {
        let words = self.segment_words(t)?;
        Ok((words[0].start, words[words.len() - 1].end))
    }

    /// Start of the first word to end of the last word.
    pub fn time_span(&self) -> (f64, f64) {
        (self.words[0].start, self.words[self.words.len() - 1].end)
    }

    fn segment_bounds(&self, t: usize) -> Result<(usize, usize)> {
        if t < 1 || t > self.breakpoints.len() {
            return Err(DubError::invalid(format!(
                "segment index {} out of range 1..={}",
                t,
                self.breakpoints.len()
            )));
        }
        let lo = if t == 1 { 0 } else { self.breakpoints[t - 2] };
        Ok((lo, self.breakpoints[t - 1]))
    }
}

/// A translated sentence: words plus one POS tag per word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSentence", into = "RawSentence")]
pub struct TargetSentence {
    words: Vec<String>,
    pos: Vec<String>,
}

#[derive(Serialize, Deserialize, Clone)]
struct RawSentence {
    words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<Vec<String>>,
}

impl TryFrom<RawSentence> for TargetSentence {
    type Error = DubError;

    fn try_from(raw: RawSentence) -> Result<Self> {
        match raw.pos {
            Some(pos) => TargetSentence::new(raw.words, pos),
            None => TargetSentence::with_fallback_pos(raw.words),
        }
    }
}

impl From<TargetSentence> for RawSentence {
    fn from(s: TargetSentence) -> Self {
        RawSentence {
            words: s.words,
            pos: Some(s.pos),
        }
    }
}

impl TargetSentence {
    pub fn new(words: Vec<String>, pos: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(DubError::invalid("target sentence is empty"));
        }
        if pos.len() != words.len() {
            return Err(DubError::invalid(format!(
                "POS tag count ({}) does not match word count ({})",
                pos.len(),
                words.len()
            )));
        }
        Ok(TargetSentence { words, pos })
    }

    /// Build with POS tags from the approximate built-in tagger.
    pub fn with_fallback_pos(words: Vec<String>) -> Result<Self> {
        let pos = words.iter().map(|w| fallback_pos_tag(w).to_string()).collect();
        TargetSentence::new(words, pos)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn pos(&self) -> &[String] {
        &self.pos
    }

    /// Word count (m).
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words of the segment ending at 1-based breakpoint `j`, starting after
    /// breakpoint `j_prev` (0 for the first segment).
    pub fn segment_words(&self, j_prev: usize, j: usize) -> &[String] {
        &self.words[j_prev..j]
    }

    /// Character-count duration of words (j_prev, j].
    pub fn segment_char_duration(&self, j_prev: usize, j: usize) -> usize {
        self.words[j_prev..j].iter().map(|w| char_len(w)).sum()
    }

    /// Character count of the whole sentence.
    pub fn total_char_duration(&self) -> usize {
        self.segment_char_duration(0, self.words.len())
    }
}

/// The aligner's output: target breakpoints, the DP log-score, and the time
/// span each segment inherits from its source segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub breakpoints: Vec<usize>,
    pub log_score: f64,
    pub segment_spans: Vec<(f64, f64)>,
}

impl Segmentation {
    /// Per-segment word ranges as (j_prev, j) pairs over the target sentence.
    pub fn segment_ranges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        std::iter::once(0)
            .chain(self.breakpoints.iter().copied())
            .zip(self.breakpoints.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words3() -> Vec<TimedWord> {
        vec![
            TimedWord::new("one", 0.0, 0.5).unwrap(),
            TimedWord::new("two", 0.55, 1.0).unwrap(),
            TimedWord::new("three", 1.4, 2.0).unwrap(),
        ]
    }

    #[test]
    fn detect_breakpoints_gap_threshold() {
        // gaps: 0.05 and 0.40; threshold 0.30 splits only at the second gap
        let bps = detect_breakpoints(&words3(), 0.30).unwrap();
        assert_eq!(bps, vec![2, 3]);
    }

    #[test]
    fn detect_breakpoints_threshold_above_all_gaps() {
        let bps = detect_breakpoints(&words3(), 0.50).unwrap();
        assert_eq!(bps, vec![3]);
    }

    #[test]
    fn detect_breakpoints_zero_gaps() {
        let words = vec![
            TimedWord::new("a", 0.0, 0.5).unwrap(),
            TimedWord::new("b", 0.5, 1.0).unwrap(),
            TimedWord::new("c", 1.0, 1.5).unwrap(),
        ];
        assert_eq!(detect_breakpoints(&words, 0.3).unwrap(), vec![3]);
    }

    #[test]
    fn detect_breakpoints_empty_is_error() {
        let err = detect_breakpoints(&[], 0.3).unwrap_err();
        assert!(err.to_string().contains("empty utterance"));
    }

    #[test]
    fn segment_char_durations() {
        let words = vec![
            TimedWord::new("hello", 0.0, 0.4).unwrap(),
            TimedWord::new("world", 0.4, 0.8).unwrap(),
        ];
        let utt = SourceUtterance::new(words, vec![2]).unwrap();
        assert_eq!(utt.segment_char_duration(1).unwrap(), 10);

        let words = vec![
            TimedWord::new("don't", 0.0, 0.4).unwrap(),
            TimedWord::new("stop", 0.4, 0.8).unwrap(),
        ];
        let utt = SourceUtterance::new(words, vec![2]).unwrap();
        assert_eq!(utt.segment_char_duration(1).unwrap(), 9);

        let words = vec![TimedWord::new("a", 0.0, 0.2).unwrap()];
        let utt = SourceUtterance::new(words, vec![1]).unwrap();
        assert_eq!(utt.segment_char_duration(1).unwrap(), 1);
    }

    #[test]
    fn segment_durations_sum_to_sentence_total() {
        let utt = SourceUtterance::new(words3(), vec![1, 3]).unwrap();
        let total: usize = (1..=utt.segment_count())
            .map(|t| utt.segment_char_duration(t).unwrap())
            .sum();
        let expected: usize = utt.words().iter().map(|w| char_len(&w.text)).sum();
        assert_eq!(total, expected);
    }

    #[test]
    fn segment_index_out_of_range() {
        let utt = SourceUtterance::new(words3(), vec![3]).unwrap();
        assert!(utt.segment_char_duration(0).is_err());
        assert!(utt.segment_char_duration(2).is_err());
    }

    #[test]
    fn utterance_rejects_overlapping_words() {
        let words = vec![
            TimedWord::new("a", 0.0, 0.6).unwrap(),
            TimedWord::new("b", 0.5, 1.0).unwrap(),
        ];
        assert!(SourceUtterance::new(words, vec![2]).is_err());
    }

    #[test]
    fn utterance_rejects_bad_breakpoints() {
        assert!(SourceUtterance::new(words3(), vec![2]).is_err()); // last != n
        assert!(SourceUtterance::new(words3(), vec![0, 3]).is_err()); // 0-based
        assert!(SourceUtterance::new(words3(), vec![2, 2, 3]).is_err()); // not increasing
    }

    #[test]
    fn transcript_json_round_trip() {
        let utt = SourceUtterance::new(words3(), vec![2, 3]).unwrap();
        let json = serde_json::to_string(&utt).unwrap();
        let back: SourceUtterance = serde_json::from_str(&json).unwrap();
        assert_eq!(utt, back);
    }

    #[test]
    fn transcript_json_derives_breakpoints_when_absent() {
        let json = r#"{"words":[
            {"text":"one","start":0.0,"end":0.5},
            {"text":"two","start":0.55,"end":1.0},
            {"text":"three","start":1.4,"end":2.0}]}"#;
        let utt: SourceUtterance = serde_json::from_str(json).unwrap();
        // default threshold 0.3 splits at the 0.4 s gap
        assert_eq!(utt.breakpoints(), &[2, 3]);
    }

    #[test]
    fn target_sentence_json_round_trip() {
        let s = TargetSentence::new(
            vec!["ciao".into(), "mondo".into()],
            vec!["X".into(), "N".into()],
        )
        .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: TargetSentence = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn target_sentence_pos_length_mismatch() {
        assert!(TargetSentence::new(vec!["a".into()], vec![]).is_err());
    }

    #[test]
    fn segmentation_json_round_trip() {
        let seg = Segmentation {
            breakpoints: vec![2, 5],
            log_score: -1.25,
            segment_spans: vec![(0.0, 1.0), (1.2, 2.0)],
        };
        let json = serde_json::to_string(&seg).unwrap();
        let back: Segmentation = serde_json::from_str(&json).unwrap();
        assert_eq!(seg, back);
    }
}

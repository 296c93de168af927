//! Verbosity control for the translation model: classify sentence pairs by
//! target/source length ratio, partition a training corpus into short /
//! normal / long groups, and prepend the group token the MT system is
//! conditioned on at inference time.

use serde::{Deserialize, Serialize};

use crate::error::{DubError, Result};
use crate::segment::char_len;

pub const DEFAULT_T1: f64 = 0.95;
pub const DEFAULT_T2: f64 = 1.05;

/// Ratio thresholds splitting (0, inf) into [0,t1), [t1,t2), [t2,inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthThresholds {
    pub t1: f64,
    pub t2: f64,
}

impl Default for LengthThresholds {
    fn default() -> Self {
        LengthThresholds {
            t1: DEFAULT_T1,
            t2: DEFAULT_T2,
        }
    }
}

impl LengthThresholds {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        let th = LengthThresholds { t1, t2 };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1.is_finite() && self.t2.is_finite() && 0.0 < self.t1 && self.t1 < self.t2) {
            return Err(DubError::invalid("thresholds must satisfy 0 < t1 < t2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LengthGroup {
    Short,
    Normal,
    Long,
}

impl LengthGroup {
    /// The literal token prepended to source sentences of this group.
    pub fn token(self) -> &'static str {
        match self {
            LengthGroup::Short => "<short>",
            LengthGroup::Normal => "<normal>",
            LengthGroup::Long => "<long>",
        }
    }

    pub fn all() -> [LengthGroup; 3] {
        [LengthGroup::Short, LengthGroup::Normal, LengthGroup::Long]
    }
}

/// A corpus pair after classification and token prepending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedPair {
    /// Source sentence with the group token prepended.
    pub source: String,
    pub target: String,
    pub group: LengthGroup,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub short: usize,
    pub normal: usize,
    pub long: usize,
}

impl GroupCounts {
    pub fn total(&self) -> usize {
        self.short + self.normal + self.long
    }

    fn bump(&mut self, group: LengthGroup) {
        match group {
            LengthGroup::Short => self.short += 1,
            LengthGroup::Normal => self.normal += 1,
            LengthGroup::Long => self.long += 1,
        }
    }
}

/// Target/source length ratio in non-whitespace characters.
pub fn length_ratio(source: &str, target: &str) -> Result<f64> {
    let s = char_len(source);
    let t = char_len(target);
    if s == 0 {
        return Err(DubError::invalid("empty source sentence"));
    }
    if t == 0 {
        return Err(DubError::invalid("empty target sentence"));
    }
    Ok(t as f64 / s as f64)
}

/// Group of a ratio: SHORT below t1, NORMAL in [t1, t2), LONG from t2 up.
pub fn classify(ratio: f64, th: LengthThresholds) -> LengthGroup {
    if ratio < th.t1 {
        LengthGroup::Short
    } else if ratio < th.t2 {
        LengthGroup::Normal
    } else {
        LengthGroup::Long
    }
}

/// `"<group> sentence"` — the transform applied to MT input at inference.
pub fn prepend_token(source: &str, group: LengthGroup) -> String {
    format!("{} {}", group.token(), source)
}

/// Undo [`prepend_token`]: recognize a leading group token and return the
/// group plus the untouched remainder.
pub fn strip_token(tagged: &str) -> Option<(LengthGroup, &str)> {
    for group in LengthGroup::all() {
        if let Some(rest) = tagged.strip_prefix(group.token()) {
            if let Some(rest) = rest.strip_prefix(' ') {
                return Some((group, rest));
            }
        }
    }
    None
}

/// Classify and tag every pair. Errors carry 1-based line numbers.
pub fn partition_corpus(
    pairs: &[(String, String)],
    th: LengthThresholds,
) -> Result<(Vec<TaggedPair>, GroupCounts)> {
    th.validate()?;
    if pairs.is_empty() {
        return Err(DubError::invalid("empty corpus"));
    }
    let mut tagged = Vec::with_capacity(pairs.len());
    let mut counts = GroupCounts::default();
    for (i, (source, target)) in pairs.iter().enumerate() {
        let ratio = length_ratio(source, target)
            .map_err(|e| DubError::invalid(format!("line {}: {}", i + 1, e)))?;
        let group = classify(ratio, th);
        counts.bump(group);
        tagged.push(TaggedPair {
            source: prepend_token(source, group),
            target: target.clone(),
            group,
            ratio,
        });
    }
    Ok((tagged, counts))
}

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;
pub const HISTOGRAM_BINS: usize = 40; // covers [0, 2); one overflow bin on top

/// Summary statistics of a corpus' length ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub mean: f64,
    pub median: f64,
    pub bin_width: f64,
    /// 40 bins of width 0.05 over [0, 2) plus a final overflow bin.
    pub histogram: Vec<u64>,
}

/// Mean/median/histogram of the pairwise length ratios. Errors carry
/// 1-based line numbers.
pub fn corpus_ratio_stats(pairs: &[(String, String)]) -> Result<RatioStats> {
    if pairs.is_empty() {
        return Err(DubError::invalid("empty corpus"));
    }
    let mut ratios = Vec::with_capacity(pairs.len());
    for (i, (source, target)) in pairs.iter().enumerate() {
        let r = length_ratio(source, target)
            .map_err(|e| DubError::invalid(format!("line {}: {}", i + 1, e)))?;
        ratios.push(r);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let mut histogram = vec![0u64; HISTOGRAM_BINS + 1];
    // bins-per-unit (20) is exact in binary, unlike the 0.05 width, so
    // ratios sitting exactly on a bin edge land in the right bin
    let bins_per_unit = HISTOGRAM_BINS as f64 / 2.0;
    for &r in &ratios {
        let idx = (r * bins_per_unit).floor() as usize;
        let idx = idx.min(HISTOGRAM_BINS);
        histogram[idx] += 1;
    }
    Ok(RatioStats {
        mean,
        median,
        bin_width: HISTOGRAM_BIN_WIDTH,
        histogram,
    })
}

/// Parse a tab-separated pair corpus (`source TAB target` per line).
pub fn parse_pair_corpus(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (src, tgt) = line.split_once('\t').ok_or_else(|| {
            DubError::invalid(format!("line {}: expected 'source TAB target'", i + 1))
        })?;
        pairs.push((src.to_string(), tgt.to_string()));
    }
    if pairs.is_empty() {
        return Err(DubError::invalid("empty corpus"));
    }
    Ok(pairs)
}

/// Render pairs back to the tab-separated format (used for tagged output).
pub fn format_pair_corpus<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::new();
    for (src, tgt) in pairs {
        out.push_str(src);
        out.push('\t');
        out.push_str(tgt);
        out.push('\n');
    }
    out
}

//! POS n-gram language model scoring break plausibility.
//!
//! The model is trained on POS-tagged sentences in which pause punctuation
//! (comma, semicolon, dash) has been replaced by the reserved `BR` token.
//! Queries use add-alpha smoothed conditionals, so every n-gram over the
//! vocabulary has positive probability. The plausibility of a break after
//! target word `j` is the perplexity-normalized ratio
//!
//! ```text
//! Pr(br | j, f) = P(W)^(1/|W|) / (P(W)^(1/|W|) + P(W')^(1/|W'|))
//! ```
//!
//! where `W` is a POS window around position `j` with `BR` inserted and `W'`
//! is the same window without it.

mod tagger;

pub use tagger::fallback_pos_tag;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{DubError, Result};
use crate::segment::TargetSentence;

/// Reserved token marking a pause.
pub const BREAK_TOKEN: &str = "BR";
/// Reserved token that out-of-vocabulary tags map to.
pub const UNK_TOKEN: &str = "UNK";

/// Default add-alpha smoothing mass.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Default text window (tags each side of the candidate break).
pub const DEFAULT_LM_WINDOW: usize = 2;

/// Add-alpha smoothed n-gram model over POS tags plus the `BR` token.
#[derive(Debug, Clone, PartialEq)]
pub struct PosNGramModel {
    order: usize,
    vocab: BTreeSet<String>,
    /// Raw n-gram counts for all orders 1..=order.
    counts: HashMap<Vec<String>, u64>,
    /// Continuation totals per context: sum of counts of all (ctx, w) grams.
    context_totals: HashMap<Vec<String>, u64>,
    total_tokens: u64,
    alpha: f64,
}

impl PosNGramModel {
    /// Train from tokenized sentences (POS tags with `BR` already inserted).
    pub fn train(corpus: &[Vec<String>], order: usize) -> Result<Self> {
        if order < 2 {
            return Err(DubError::invalid("n-gram order must be at least 2"));
        }
        if corpus.iter().all(|s| s.is_empty()) {
            return Err(DubError::invalid("empty corpus"));
        }
        let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
        for sentence in corpus {
            for n in 1..=order {
                if sentence.len() < n {
                    continue;
                }
                for gram in sentence.windows(n) {
                    *counts.entry(gram.to_vec()).or_insert(0) += 1;
                }
            }
        }
        Ok(Self::from_counts(counts, order, DEFAULT_ALPHA))
    }

    /// Degenerate model with an empty count table: every conditional equals
    /// 1/2 and every break probability equals 1/2. Used when no trained
    /// model is supplied.
    pub fn uniform() -> Self {
        Self::from_counts(HashMap::new(), 2, DEFAULT_ALPHA)
    }

    fn from_counts(counts: HashMap<Vec<String>, u64>, order: usize, alpha: f64) -> Self {
        let mut vocab: BTreeSet<String> = counts
            .keys()
            .flat_map(|gram| gram.iter().cloned())
            .collect();
        vocab.insert(BREAK_TOKEN.to_string());
        vocab.insert(UNK_TOKEN.to_string());

        let mut context_totals: HashMap<Vec<String>, u64> = HashMap::new();
        let mut total_tokens = 0;
        for (gram, &c) in &counts {
            if gram.len() == 1 {
                total_tokens += c;
            } else {
                *context_totals
                    .entry(gram[..gram.len() - 1].to_vec())
                    .or_insert(0) += c;
            }
        }
        PosNGramModel {
            order,
            vocab,
            counts,
            context_totals,
            total_tokens,
            alpha,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    fn map_token<'a>(&'a self, token: &'a str) -> &'a str {
        if self.vocab.contains(token) {
            token
        } else {
            UNK_TOKEN
        }
    }

    /// Smoothed P(next | ctx). Tokens must already be vocabulary members.
    fn conditional(&self, ctx: &[&str], next: &str) -> f64 {
        let mut gram: Vec<String> = ctx.iter().map(|t| t.to_string()).collect();
        gram.push(next.to_string());
        let numer = self.counts.get(&gram).copied().unwrap_or(0) as f64;
        let denom = if ctx.is_empty() {
            self.total_tokens as f64
        } else {
            let key: Vec<String> = ctx.iter().map(|t| t.to_string()).collect();
            self.context_totals.get(&key).copied().unwrap_or(0) as f64
        };
        (numer + self.alpha) / (denom + self.alpha * self.vocab.len() as f64)
    }

    /// Chain-rule probability of a token sequence. Out-of-vocabulary tokens
    /// map to `UNK`, so the query is total.
    pub fn sequence_prob(&self, tokens: &[&str]) -> f64 {
        let mapped: Vec<&str> = tokens.iter().map(|t| self.map_token(t)).collect();
        let mut prob = 1.0;
        for i in 0..mapped.len() {
            let lo = i.saturating_sub(self.order - 1);
            prob *= self.conditional(&mapped[lo..i], mapped[i]);
        }
        prob
    }

    /// Plausibility of a break after 1-based position `j` of sentence `f`,
    /// over a window of `window` tags each side (clipped at sentence edges).
    pub fn break_probability(&self, f: &TargetSentence, j: usize, window: usize) -> Result<f64> {
        let m = f.len();
        if j >= m {
            return Err(DubError::invalid("no break after final word"));
        }
        if j < 1 {
            return Err(DubError::invalid("break index must be at least 1"));
        }
        if window < 1 || window > 2 {
            return Err(DubError::invalid("window must be 1 or 2"));
        }
        let pos = f.pos();
        let lo = j.saturating_sub(window); // 0-based index of the first tag
        let hi = (j + window).min(m); // exclusive 0-based end
        let mut with_break: Vec<&str> = Vec::with_capacity(hi - lo + 1);
        let mut without: Vec<&str> = Vec::with_capacity(hi - lo);
        for (idx, tag) in pos[lo..hi].iter().enumerate() {
            if lo + idx == j {
                with_break.push(BREAK_TOKEN);
            }
            with_break.push(tag);
            without.push(tag);
        }
        let p_with = self.sequence_prob(&with_break);
        let p_without = self.sequence_prob(&without);
        Ok(break_ratio(
            p_with,
            with_break.len(),
            p_without,
            without.len(),
        ))
    }

    /// Write the model as a plain-text n-gram count file:
    /// `<count> TAB token token ...`, one line per n-gram.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut lines: Vec<(&Vec<String>, u64)> =
            self.counts.iter().map(|(g, &c)| (g, c)).collect();
        lines.sort_by(|a, b| (a.0.len(), a.0).cmp(&(b.0.len(), b.0)));
        let mut out = String::new();
        for (gram, count) in lines {
            let _ = writeln!(out, "{}\t{}", count, gram.join(" "));
        }
        std::fs::write(path.as_ref(), out)?;
        Ok(())
    }

    /// Load a model from an n-gram count file. The order is the longest
    /// n-gram present; smoothing mass is the default.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
        let mut order = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (count_str, grams) = line.split_once('\t').ok_or_else(|| {
                DubError::invalid(format!("line {}: expected '<count> TAB tokens'", lineno + 1))
            })?;
            let count: u64 = count_str.trim().parse().map_err(|_| {
                DubError::invalid(format!("line {}: bad count {:?}", lineno + 1, count_str))
            })?;
            let gram: Vec<String> = grams.split_whitespace().map(|t| t.to_string()).collect();
            if gram.is_empty() {
                return Err(DubError::invalid(format!("line {}: empty n-gram", lineno + 1)));
            }
            order = order.max(gram.len());
            *counts.entry(gram).or_insert(0) += count;
        }
        if order < 2 {
            return Err(DubError::invalid(
                "model file holds no n-grams of order >= 2",
            ));
        }
        Ok(Self::from_counts(counts, order, DEFAULT_ALPHA))
    }

    /// True when every stored context's conditional distribution sums to one
    /// (within `tol`). Exposed for verification.
    pub fn is_normalized(&self, tol: f64) -> bool {
        let vocab: Vec<&str> = self.vocab.iter().map(|s| s.as_str()).collect();
        let mut contexts: Vec<Vec<&str>> = vec![Vec::new()];
        contexts.extend(
            self.context_totals
                .keys()
                .map(|ctx| ctx.iter().map(|s| s.as_str()).collect()),
        );
        contexts.iter().all(|ctx| {
            let sum: f64 = vocab.iter().map(|w| self.conditional(ctx, w)).sum();
            (sum - 1.0).abs() <= tol
        })
    }
}

/// The break-plausibility ratio from per-sequence probabilities:
/// `p_with^(1/len_with) / (p_with^(1/len_with) + p_without^(1/len_without))`.
pub fn break_ratio(p_with: f64, len_with: usize, p_without: f64, len_without: usize) -> f64 {
    let a = p_with.powf(1.0 / len_with as f64);
    let b = p_without.powf(1.0 / len_without as f64);
    a / (a + b)
}

/// Pause punctuation that maps to the `BR` token.
fn is_pause_token(token: &str) -> bool {
    matches!(token, "," | ";" | "-" | "--" | "—" | "–")
}

fn is_pause_char(c: char) -> bool {
    matches!(c, ',' | ';' | '—' | '–')
}

/// Convert raw text lines into POS/BR token sequences for training:
/// pause punctuation becomes `BR`, every other word is tagged with the
/// fallback tagger, remaining punctuation is dropped.
pub fn prepare_pos_corpus(lines: &[String]) -> Vec<Vec<String>> {
    let mut corpus = Vec::new();
    for line in lines {
        let mut sentence = Vec::new();
        for raw in line.split_whitespace() {
            if is_pause_token(raw) {
                sentence.push(BREAK_TOKEN.to_string());
                continue;
            }
            let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
            let pause_after = raw
                .chars()
                .rev()
                .take_while(|c| !c.is_alphanumeric())
                .any(is_pause_char);
            if !core.is_empty() {
                sentence.push(fallback_pos_tag(core).to_string());
            }
            if pause_after {
                sentence.push(BREAK_TOKEN.to_string());
            }
        }
        if !sentence.is_empty() {
            corpus.push(sentence);
        }
    }
    corpus
}

/// Tokenized sentences where every token is already a POS tag or `BR`.
pub fn parse_pos_corpus(lines: &[String]) -> Vec<Vec<String>> {
    lines
        .iter()
        .map(|l| l.split_whitespace().map(|t| t.to_string()).collect())
        .filter(|s: &Vec<String>| !s.is_empty())
        .collect()
}

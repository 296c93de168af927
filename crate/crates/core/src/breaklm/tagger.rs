//! Approximate fallback POS tagger.
//!
//! Maps words to a coarse tagset using a small closed-class lexicon and
//! suffix heuristics. This is a plumbing fallback for corpora and
//! translations that arrive without POS annotations; accuracy is rough and
//! English-leaning. Supply real tags whenever available.

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "some", "any", "no",
    "il", "lo", "la", "i", "gli", "le", "un", "uno", "una",
];

const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "my", "your",
    "his", "its", "our", "their", "who", "what", "which",
    "io", "tu", "lui", "lei", "noi", "voi", "loro", "mi", "ti", "si", "ci", "vi",
];

const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "by", "for", "with", "from", "to", "of", "into", "over", "under", "about",
    "di", "da", "su", "per", "con", "tra", "fra", "del", "della", "dei", "delle", "nel", "nella",
];

const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "so", "yet", "because", "although", "while", "if", "that",
    "e", "ed", "o", "ma", "però", "se", "che", "quando", "perché",
];

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "have", "has",
    "had", "will", "would", "can", "could", "may", "might", "must", "shall", "should",
    "è", "sono", "era", "erano", "ho", "hai", "ha", "abbiamo", "hanno", "sarà",
];

const ADVERBS: &[&str] = &[
    "not", "very", "too", "also", "just", "now", "then", "here", "there", "always", "never",
    "non", "molto", "anche", "già", "ancora", "sempre", "mai", "qui", "ora",
];

fn in_lexicon(lexicon: &[&str], word: &str) -> bool {
    lexicon.contains(&word)
}

/// Coarse POS tag for a single word. Approximate by design.
pub fn fallback_pos_tag(word: &str) -> &'static str {
    let w = word.trim().to_lowercase();
    if w.is_empty() {
        return "X";
    }
    if w.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') && w.chars().any(|c| c.is_ascii_digit()) {
        return "NUM";
    }
    if w.chars().all(|c| !c.is_alphanumeric()) {
        return "PUNCT";
    }
    if in_lexicon(DETERMINERS, &w) {
        return "DET";
    }
    if in_lexicon(PRONOUNS, &w) {
        return "PRON";
    }
    if in_lexicon(PREPOSITIONS, &w) {
        return "PREP";
    }
    if in_lexicon(CONJUNCTIONS, &w) {
        return "CONJ";
    }
    if in_lexicon(AUXILIARIES, &w) {
        return "AUX";
    }
    if in_lexicon(ADVERBS, &w) || w.ends_with("ly") || w.ends_with("mente") {
        return "ADV";
    }
    if w.ends_with("ing")
        || w.ends_with("ed")
        || w.ends_with("are")
        || w.ends_with("ere")
        || w.ends_with("ire")
        || w.ends_with("ato")
        || w.ends_with("uto")
        || w.ends_with("ito")
    {
        return "VERB";
    }
    if w.ends_with("ous")
        || w.ends_with("ful")
        || w.ends_with("ive")
        || w.ends_with("able")
        || w.ends_with("ible")
        || w.ends_with("al")
        || w.ends_with("ic")
        || w.ends_with("oso")
        || w.ends_with("osa")
    {
        return "ADJ";
    }
    "NOUN"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_class_words() {
        assert_eq!(fallback_pos_tag("the"), "DET");
        assert_eq!(fallback_pos_tag("with"), "PREP");
        assert_eq!(fallback_pos_tag("and"), "CONJ");
        assert_eq!(fallback_pos_tag("They"), "PRON");
    }

    #[test]
    fn suffix_rules() {
        assert_eq!(fallback_pos_tag("quickly"), "ADV");
        assert_eq!(fallback_pos_tag("running"), "VERB");
        assert_eq!(fallback_pos_tag("parlare"), "VERB");
        assert_eq!(fallback_pos_tag("famoso"), "ADJ");
    }

    #[test]
    fn defaults_to_noun() {
        assert_eq!(fallback_pos_tag("zebra"), "NOUN");
    }

    #[test]
    fn numbers_and_punct() {
        assert_eq!(fallback_pos_tag("1234"), "NUM");
        assert_eq!(fallback_pos_tag("?!"), "PUNCT");
    }
}

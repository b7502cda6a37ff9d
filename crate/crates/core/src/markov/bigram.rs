use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::word::Alphabet;

use super::MarkovChain;

/// What to do with a token that is never followed by another token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinkPolicy {
    /// Self-loop with probability 1.
    #[default]
    SelfLoop,
    /// Transition to the first token of the corpus with probability 1.
    WrapToFirst,
}

/// How token case is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CaseMode {
    /// A token becomes its lowercase form whenever that form also occurs in
    /// the text, so sentence-initial capitals merge with the ordinary word
    /// while words that are always capitalized ("I", names) keep their case.
    #[default]
    Merge,
    Preserve,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenizerOptions {
    pub case: CaseMode,
    pub sink: SinkPolicy,
}

/// Splits on every character that is neither alphanumeric nor an apostrophe,
/// so whitespace, punctuation and hyphens all separate tokens, then applies
/// the case mode.
pub fn tokenize(text: &str, options: &TokenizerOptions) -> Vec<String> {
    let raw = text
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty());
    match options.case {
        CaseMode::Preserve => raw.map(str::to_string).collect(),
        CaseMode::Lower => raw.map(str::to_lowercase).collect(),
        CaseMode::Merge => {
            let tokens: Vec<&str> = raw.collect();
            let seen: HashSet<&str> = tokens.iter().copied().collect();
            tokens
                .iter()
                .map(|&t| {
                    let lower = t.to_lowercase();
                    if lower != t && seen.contains(lower.as_str()) {
                        lower
                    } else {
                        t.to_string()
                    }
                })
                .collect()
        }
    }
}

/// First-order chain over word tokens: `P[v | u]` is the number of times `v`
/// follows `u` divided by the number of times `u` is followed by anything.
/// States appear in order of first occurrence; the first token is the
/// initial state.
pub fn build_bigram(corpus: &str, options: &TokenizerOptions) -> Result<MarkovChain> {
    let tokens = tokenize(corpus, options);
    if tokens.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let ids: Vec<usize> = tokens
        .iter()
        .map(|t| {
            *index.entry(t.as_str()).or_insert_with(|| {
                order.push(t.clone());
                order.len() - 1
            })
        })
        .collect();
    let s = order.len();
    let mut counts = vec![vec![0u64; s]; s];
    for pair in ids.windows(2) {
        counts[pair[0]][pair[1]] += 1;
    }
    let matrix = counts
        .iter()
        .enumerate()
        .map(|(u, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                let target = match options.sink {
                    SinkPolicy::SelfLoop => u,
                    SinkPolicy::WrapToFirst => ids[0],
                };
                let mut r = vec![0.0; s];
                r[target] = 1.0;
                r
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    MarkovChain::new(Alphabet::new(order)?, matrix, ids[0])
}

//! Alphabets, words, Hamming distance and word adjacency.
//!
//! Symbols are dense indices into an [`Alphabet`]; token strings only appear
//! when encoding input or decoding output.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of distinct tokens. Index `i` is the position of the token in
/// construction order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::InvalidParameter("alphabet must be non-empty".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateToken(t.clone()));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Alphabet `{"0", "1", ..., "m-1"}`.
    pub fn numbered(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.tokens).expect("string list serializes")
    }

    /// Encodes a token sequence into a word over this alphabet.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Word> {
        let symbols = tokens
            .iter()
            .enumerate()
            .map(|(position, t)| {
                self.index_of(t.as_ref()).ok_or_else(|| Error::UnknownToken {
                    token: t.as_ref().to_string(),
                    position,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(symbols, self.len())
    }

    /// Decodes a word back into tokens.
    pub fn decode(&self, word: &Word) -> Result<Vec<String>> {
        if word.alphabet_size() != self.len() {
            return Err(Error::AlphabetMismatch {
                left: word.alphabet_size(),
                right: self.len(),
            });
        }
        Ok(word
            .symbols()
            .iter()
            .map(|&s| self.tokens[s].clone())
            .collect())
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Alphabet::new(tokens)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.tokens
    }
}

/// Convenience wrapper for [`Alphabet::encode`].
pub fn encode_word<S: AsRef<str>>(tokens: &[S], alphabet: &Alphabet) -> Result<Word> {
    alphabet.encode(tokens)
}

/// Fixed-length, non-empty sequence of symbol indices over an alphabet of
/// size `alphabet_size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<usize>,
    alphabet_size: usize,
}

impl Word {
    pub fn new(symbols: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyWord);
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= alphabet_size) {
            return Err(Error::SymbolOutOfRange {
                index: bad,
                size: alphabet_size,
            });
        }
        Ok(Self {
            symbols,
            alphabet_size,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false; words have length at least one.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn symbol(&self, position: usize) -> usize {
        self.symbols[position]
    }

    pub fn into_symbols(self) -> Vec<usize> {
        self.symbols
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

fn check_comparable(a: &Word, b: &Word) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.alphabet_size != b.alphabet_size {
        return Err(Error::AlphabetMismatch {
            left: a.alphabet_size,
            right: b.alphabet_size,
        });
    }
    Ok(())
}

/// Number of positions at which `a` and `b` differ.
pub fn hamming_distance(a: &Word, b: &Word) -> Result<usize> {
    check_comparable(a, b)?;
    Ok(a.symbols
        .iter()
        .zip(&b.symbols)
        .filter(|(x, y)| x != y)
        .count())
}

/// Word adjacency: `d(a, b) <= k`.
pub fn is_adjacent(a: &Word, b: &Word, k: usize) -> Result<bool> {
    Ok(hamming_distance(a, b)? <= k)
}

/// Privacy level, adjacency parameter and seed shared by every mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    epsilon: f64,
    k: usize,
    seed: u64,
}

impl MechanismConfig {
    pub fn new(epsilon: f64, k: usize, seed: u64) -> Result<Self> {
        check_privacy_params(epsilon, k)?;
        Ok(Self { epsilon, k, seed })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh randomness stream for this configuration's seed.
    pub fn stream(&self) -> crate::rng::RandomStream {
        crate::rng::RandomStream::from_seed(self.seed)
    }
}

pub(crate) fn check_privacy_params(epsilon: f64, k: usize) -> Result<()> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    Ok(())
}

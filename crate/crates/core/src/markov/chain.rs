use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{Alphabet, Word};

const ROW_TOLERANCE: f64 = 1e-9;

/// Finite Markov chain with a public initial state.
///
/// Words privatized against the chain are `s_1 .. s_n`; the initial state
/// `s_0` precedes them and is never privatized.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    states: Alphabet,
    transitions: Vec<Vec<f64>>,
    initial: usize,
    successors: Vec<Vec<usize>>,
}

impl MarkovChain {
    pub fn new(states: Alphabet, transitions: Vec<Vec<f64>>, initial: usize) -> Result<Self> {
        let s = states.len();
        if transitions.len() != s || transitions.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidChain(format!(
                "transition matrix must be {s}x{s}"
            )));
        }
        if initial >= s {
            return Err(Error::InvalidChain(format!("initial state {initial} out of range")));
        }
        for (i, row) in transitions.iter().enumerate() {
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidChain(format!(
                    "entry {p} in row {:?} outside [0, 1]",
                    states.token(i).unwrap_or_default()
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidChain(format!(
                    "row {:?} sums to {total}",
                    states.token(i).unwrap_or_default()
                )));
            }
        }
        let successors = transitions
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        Ok(Self {
            states,
            transitions,
            initial,
            successors,
        })
    }

    pub fn states(&self) -> &Alphabet {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn initial_name(&self) -> &str {
        self.states.token(self.initial).expect("validated")
    }

    /// Same dynamics with a different public initial state.
    pub fn with_initial(&self, initial: usize) -> Result<Self> {
        if initial >= self.state_count() {
            return Err(Error::InvalidChain(format!("initial state {initial} out of range")));
        }
        Ok(Self {
            initial,
            ..self.clone()
        })
    }

    pub fn with_initial_named(&self, name: &str) -> Result<Self> {
        let idx = self.states.index_of(name).ok_or_else(|| Error::UnknownToken {
            token: name.to_string(),
            position: 0,
        })?;
        self.with_initial(idx)
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.transitions[from][to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.transitions[from]
    }

    pub fn is_transition_feasible(&self, from: usize, to: usize) -> bool {
        self.transitions[from][to] > 0.0
    }

    /// `C(s)`: states reachable from `s` in one step, ascending.
    pub fn successors(&self, s: usize) -> &[usize] {
        &self.successors[s]
    }

    /// `N(s) = |C(s)|`.
    pub fn feasible_count(&self, s: usize) -> usize {
        self.successors[s].len()
    }

    pub fn max_feasible_count(&self) -> usize {
        self.successors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_feasible_count(&self) -> usize {
        self.successors.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Checks that `initial -> w_1 -> ... -> w_n` has positive probability;
    /// the error names the first zero-probability transition.
    pub fn check_feasible(&self, word: &Word) -> Result<()> {
        if word.alphabet_size() != self.state_count() {
            return Err(Error::AlphabetMismatch {
                left: word.alphabet_size(),
                right: self.state_count(),
            });
        }
        let mut prev = self.initial;
        for (position, &s) in word.symbols().iter().enumerate() {
            if !self.is_transition_feasible(prev, s) {
                return Err(Error::Infeasible {
                    position,
                    from: self.states.token(prev).unwrap_or_default().to_string(),
                    to: self.states.token(s).unwrap_or_default().to_string(),
                });
            }
            prev = s;
        }
        Ok(())
    }

    pub fn is_feasible(&self, word: &Word) -> bool {
        self.check_feasible(word).is_ok()
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Word> {
        self.states.encode(tokens)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ChainFile = serde_json::from_str(json)?;
        file.try_into()
    }

    pub fn to_file(&self) -> ChainFile {
        let transitions = self
            .transitions
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(move |(j, &p)| (i, j, p))
            })
            .map(|(i, j, p)| TransitionEntry {
                from: self.states.token(i).unwrap().to_string(),
                to: self.states.token(j).unwrap().to_string(),
                p,
            })
            .collect();
        ChainFile {
            states: self.states.tokens().to_vec(),
            initial: self.initial_name().to_string(),
            transitions,
        }
    }

    /// Pretty JSON; stable for a given chain.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("chain serializes")
    }
}

/// On-disk chain format. Omitted pairs have probability 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub from: String,
    pub to: String,
    pub p: f64,
}

impl TryFrom<ChainFile> for MarkovChain {
    type Error = Error;

    fn try_from(file: ChainFile) -> Result<Self> {
        let states = Alphabet::new(file.states)?;
        let s = states.len();
        let lookup = |name: &str| {
            states
                .index_of(name)
                .ok_or_else(|| Error::InvalidChain(format!("unknown state {name:?}")))
        };
        let mut matrix = vec![vec![0.0; s]; s];
        for t in &file.transitions {
            let (i, j) = (lookup(&t.from)?, lookup(&t.to)?);
            if matrix[i][j] != 0.0 {
                return Err(Error::InvalidChain(format!(
                    "duplicate transition {:?} -> {:?}",
                    t.from, t.to
                )));
            }
            matrix[i][j] = t.p;
        }
        let initial = lookup(&file.initial)?;
        MarkovChain::new(states, matrix, initial)
    }
}

//! Privacy/accuracy sweeps: mean output distance against epsilon, per
//! initial state, with analytic columns alongside.
//!
//! Replicate `r` of initial state `j` always draws from
//! `root.derive(j).split(r)`, whatever epsilon is, so the curves use common
//! random numbers and the result does not depend on thread scheduling.

use rayon::prelude::*;

use crate::analytics::{
    empirical_moments, markov_offline_bounds, markov_online_trajectory_law, offline_moments,
    online_moments, AccuracyRow,
};
use crate::error::{Error, Result};
use crate::markov::{markov_online_policy, privatize_markov_online, MarkovChain, MarkovOfflineMechanism};
use crate::mechanisms::{online_policy, privatize_online, OfflineMechanism};
use crate::oracle::MechanismKind;
use crate::rng::RandomStream;
use crate::word::{hamming_distance, Alphabet, Word};

/// Where symbols come from.
#[derive(Debug, Clone)]
pub enum SymbolSource {
    Alphabet(Alphabet),
    Chain(MarkovChain),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub mechanism: MechanismKind,
    pub epsilons: Vec<f64>,
    pub k: usize,
    pub samples: usize,
    pub input: Vec<String>,
    pub source: SymbolSource,
    /// Initial states to sweep (Markov modes). Empty means the chain's own.
    pub initial_states: Vec<String>,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::InvalidParameter("epsilon grid is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| e.is_nan() || **e <= 0.0 || e.is_infinite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon grid values must be positive and finite, got {e}"
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.input.is_empty() {
            return Err(Error::EmptyWord);
        }
        match (&self.source, self.mechanism.is_markov()) {
            (SymbolSource::Chain(_), true) | (SymbolSource::Alphabet(_), false) => Ok(()),
            (SymbolSource::Alphabet(_), true) => Err(Error::InvalidParameter(format!(
                "{} needs a chain",
                self.mechanism
            ))),
            (SymbolSource::Chain(_), false) => Err(Error::InvalidParameter(format!(
                "{} needs an alphabet",
                self.mechanism
            ))),
        }
    }
}

struct Cell {
    initial_index: usize,
    initial_name: String,
    epsilon: f64,
}

/// Runs the sweep. Rows are ordered by epsilon, then by initial state in the
/// order given.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<AccuracyRow>> {
    spec.validate()?;
    let initials: Vec<String> = match &spec.source {
        SymbolSource::Chain(chain) if spec.initial_states.is_empty() => {
            vec![chain.initial_name().to_string()]
        }
        SymbolSource::Chain(_) => spec.initial_states.clone(),
        SymbolSource::Alphabet(_) => vec![String::new()],
    };
    let cells: Vec<Cell> = spec
        .epsilons
        .iter()
        .flat_map(|&epsilon| {
            initials.iter().enumerate().map(move |(j, name)| Cell {
                initial_index: j,
                initial_name: name.clone(),
                epsilon,
            })
        })
        .collect();
    let root = RandomStream::from_seed(spec.seed);
    cells.par_iter().map(|cell| run_cell(spec, cell, &root)).collect()
}

fn run_cell(spec: &ExperimentSpec, cell: &Cell, root: &RandomStream) -> Result<AccuracyRow> {
    let stream = root.derive(cell.initial_index as u64);
    let (eps, k) = (cell.epsilon, spec.k);
    let n = spec.input.len();
    let (distances, expectation, variance, lower, upper, size) = match &spec.source {
        SymbolSource::Alphabet(alphabet) => {
            let input = alphabet.encode(&spec.input)?;
            let m = alphabet.len();
            let (distances, moments) = match spec.mechanism {
                MechanismKind::Offline => {
                    let mech = OfflineMechanism::new(input.clone(), eps, k)?;
                    let d = replicate(spec.samples, &stream, &input, |rng| Ok(mech.sample(rng)))?;
                    (d, offline_moments(n, m, eps, k)?)
                }
                _ => {
                    let policy = online_policy(m, eps, k)?;
                    let d = replicate(spec.samples, &stream, &input, |rng| {
                        privatize_online(&input, &policy, rng)
                    })?;
                    (d, online_moments(n, m, eps, k)?)
                }
            };
            let e = moments.expectation;
            (distances, e, moments.variance, e, e, m)
        }
        SymbolSource::Chain(base) => {
            let chain = base.with_initial_named(&cell.initial_name)?;
            let input = chain.encode(&spec.input)?;
            let s = chain.state_count();
            match spec.mechanism {
                MechanismKind::MarkovOffline => {
                    let mech = MarkovOfflineMechanism::new(&chain, input.clone(), eps, k)?;
                    let bounds = markov_offline_bounds(n, &chain, eps, k, mech.counts())?;
                    let law = mech.distance_distribution();
                    let d = replicate(spec.samples, &stream, &input, |rng| Ok(mech.sample(rng)))?;
                    (d, law.mean(), law.variance(), bounds.lower, bounds.upper, s)
                }
                _ => {
                    let policy = markov_online_policy(&chain, eps, k)?;
                    let moments = markov_online_trajectory_law(&chain, &policy, &input)?.moments();
                    let d = replicate(spec.samples, &stream, &input, |rng| {
                        privatize_markov_online(&chain, &input, &policy, rng)
                    })?;
                    let e = moments.expectation;
                    (d, e, moments.variance, e, e, s)
                }
            }
        }
    };
    let (empirical_mean, empirical_se) = if distances.len() >= 2 {
        let m = empirical_moments(&distances)?;
        (m.mean, m.standard_error_mean)
    } else {
        (distances[0], f64::NAN)
    };
    Ok(AccuracyRow {
        mechanism: spec.mechanism.to_string(),
        initial_state: cell.initial_name.clone(),
        epsilon: eps,
        k,
        n,
        m_or_s: size,
        expectation,
        variance,
        lower,
        upper,
        empirical_mean,
        empirical_se,
    })
}

fn replicate<F>(samples: usize, stream: &RandomStream, input: &Word, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut RandomStream) -> Result<Word> + Sync,
{
    (0..samples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.split(r as u64);
            let out = draw(&mut rng)?;
            Ok(hamming_distance(input, &out)? as f64)
        })
        .collect()
}

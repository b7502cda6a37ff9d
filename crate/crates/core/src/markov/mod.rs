//! Markov-chain variants: every privatized word is a feasible state sequence.

mod bigram;
mod chain;
mod offline;
mod online;
mod pmnfa;

pub use bigram::{build_bigram, tokenize, CaseMode, SinkPolicy, TokenizerOptions};
pub use chain::{ChainFile, MarkovChain, TransitionEntry};
pub use offline::{privatize_markov_offline, MarkovOfflineMechanism};
pub use online::{
    markov_online_policy, privatize_markov_online, privatize_markov_online_step,
    MarkovOnlinePolicy,
};
pub use pmnfa::{
    build_pmnfa_policy, count_feasible_at_distance, FeasibleDistanceCounts, Pmnfa, ProductState,
};

//! Word-level differential privacy for symbolic sequences.
//!
//! Two words of equal length are adjacent when they differ in at most `k`
//! positions. The mechanisms here map an input word to a random output word
//! of the same length so that adjacent inputs produce every output with
//! probabilities within a factor `e^epsilon`:
//!
//! * [`mechanisms::OfflineMechanism`] picks a Hamming distance, then a word
//!   uniformly at that distance through a small automaton ([`mnfa`]).
//! * [`mechanisms::privatize_online`] works symbol by symbol.
//! * [`markov`] has both variants restricted to words a Markov chain can
//!   produce.
//!
//! [`oracle`] holds brute-force references and exact privacy checks,
//! [`analytics`] the accuracy formulas.
//!
//! ```
//! use symdp::{privatize_online, online_policy, Alphabet, RandomStream};
//!
//! let alphabet = Alphabet::new(["a", "b", "c"]).unwrap();
//! let word = alphabet.encode(&["a", "b", "b", "c"]).unwrap();
//! let policy = online_policy(alphabet.len(), 2.0, 1).unwrap();
//! let out = privatize_online(&word, &policy, &mut RandomStream::from_seed(1)).unwrap();
//! assert_eq!(out.len(), 4);
//! ```

pub mod analytics;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod markov;
pub mod mechanisms;
pub mod mnfa;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod verify;
pub mod word;

pub use error::{Error, Result};
pub use markov::{
    build_bigram, markov_online_policy, privatize_markov_offline, privatize_markov_online,
    MarkovChain, MarkovOfflineMechanism, MarkovOnlinePolicy,
};
pub use mechanisms::{
    offline_distance_distribution, online_policy, privatize_offline, privatize_online,
    OfflineMechanism, OnlinePolicy,
};
pub use mnfa::{build_mnfa, Mnfa, MnfaPolicy};
pub use rng::RandomStream;
pub use word::{hamming_distance, is_adjacent, Alphabet, MechanismConfig, Word};

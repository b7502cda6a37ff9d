//! Closed-form accuracy formulas, bounds and empirical moment estimation.
//!
//! All distances are in symbols. The offline concentration bound is only
//! defined for `eta` in `(0, 0.5)`; over that range `2 exp(-2 eta^2 / n^2)`
//! exceeds 1 for every `n >= 1`, so after clamping it is vacuous. It is kept
//! as stated for completeness.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{FeasibleDistanceCounts, MarkovChain, MarkovOnlinePolicy};
use crate::numeric::{ln_biguint, log_sum_exp};
use crate::word::{check_privacy_params, Word};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub expectation: f64,
    pub variance: f64,
}

fn binomial_moments(n: usize, odds: f64) -> Moments {
    // odds = P[substitute] / P[keep] per position.
    let n = n as f64;
    Moments {
        expectation: n - n / (odds + 1.0),
        variance: n * odds / (odds + 1.0).powi(2),
    }
}

/// Mean and variance of the output distance of the offline mechanism:
/// `E = n - n / ((m-1) e^{-eps/2k} + 1)`, `Var = n a / (a + 1)^2` with
/// `a = (m-1) e^{-eps/2k}`.
pub fn offline_moments(n: usize, m: usize, epsilon: f64, k: usize) -> Result<Moments> {
    check_privacy_params(epsilon, k)?;
    check_sizes(n, m)?;
    let a = (m - 1) as f64 * (-epsilon / (2.0 * k as f64)).exp();
    Ok(binomial_moments(n, a))
}

/// Online mechanism: same shape with exponent `-eps/k`; equals
/// `E = n (1 - tau)`, `Var = n tau (1 - tau)`.
pub fn online_moments(n: usize, m: usize, epsilon: f64, k: usize) -> Result<Moments> {
    check_privacy_params(epsilon, k)?;
    check_sizes(n, m)?;
    let b = (m - 1) as f64 * (-epsilon / k as f64).exp();
    Ok(binomial_moments(n, b))
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    if m < 2 {
        return Err(Error::InvalidParameter("alphabet size must be >= 2".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovOfflineBounds {
    pub lower: f64,
    pub upper: f64,
    /// Popoviciu: `n^2 / 4`.
    pub variance_bound: f64,
    pub n_min: usize,
    pub n_max: usize,
}

/// Expectation bounds for the offline Markov mechanism. With
/// `B = exp(-eps/2k)` and `Z = sum_i m_i exp(-eps i / 2k)`:
///
/// ```text
/// lower = n (Nmin - 1) B [(Nmin - 1) B + 1]^(n-1) / Z
/// upper = n Nmax B [Nmax B + 1]^(n-1) / Z
/// ```
///
/// `Nmin`/`Nmax` range over every state of the chain.
pub fn markov_offline_bounds(
    n: usize,
    chain: &MarkovChain,
    epsilon: f64,
    k: usize,
    counts: &FeasibleDistanceCounts,
) -> Result<MarkovOfflineBounds> {
    check_privacy_params(epsilon, k)?;
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    if counts.max_distance() != n {
        return Err(Error::LengthMismatch {
            left: counts.max_distance(),
            right: n,
        });
    }
    let half = -epsilon / (2.0 * k as f64);
    let ln_z = log_sum_exp(
        &counts
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, m_i)| {
                let l = ln_biguint(m_i);
                if i == 0 || l == f64::NEG_INFINITY {
                    l
                } else {
                    l + half * i as f64
                }
            })
            .collect::<Vec<_>>(),
    );
    let b = half.exp();
    let (n_min, n_max) = (chain.min_feasible_count(), chain.max_feasible_count());
    let term = |base: f64| -> f64 {
        let x = base * b;
        if x == 0.0 {
            return 0.0;
        }
        ((n as f64).ln() + x.ln() + (n - 1) as f64 * (x + 1.0).ln() - ln_z).exp()
    };
    Ok(MarkovOfflineBounds {
        lower: term(n_min.saturating_sub(1) as f64),
        upper: term(n_max as f64),
        variance_bound: (n * n) as f64 / 4.0,
        n_min,
        n_max,
    })
}

/// Settings for [`concentration_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConcentrationSetting {
    /// `P[|d - E| > eta] <= 2 exp(-2 eta^2 / n^2)`, `eta` in `(0, 0.5)`.
    Offline { n: usize },
    /// `P[d > (1 + eta) E] <= exp(-eta^2 E / (2 + eta))`, `eta` in `(0, 1)`.
    OnlineUpper { expectation: f64 },
    /// `P[d < (1 - eta) E] <= exp(-eta^2 E / 2)`, `eta` in `(0, 1)`.
    OnlineLower { expectation: f64 },
}

/// Tail bound clamped to `[0, 1]`.
pub fn concentration_bound(setting: ConcentrationSetting, eta: f64) -> Result<f64> {
    let raw = match setting {
        ConcentrationSetting::Offline { n } => {
            if !(eta > 0.0 && eta < 0.5) {
                return Err(Error::EtaOutOfRange {
                    eta,
                    range: "(0, 0.5) for the offline bound",
                });
            }
            2.0 * (-2.0 * eta * eta / (n * n) as f64).exp()
        }
        ConcentrationSetting::OnlineUpper { expectation } => {
            check_online_eta(eta)?;
            (-eta * eta * expectation / (2.0 + eta)).exp()
        }
        ConcentrationSetting::OnlineLower { expectation } => {
            check_online_eta(eta)?;
            (-eta * eta * expectation / 2.0).exp()
        }
    };
    Ok(raw.clamp(0.0, 1.0))
}

fn check_online_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::EtaOutOfRange {
            eta,
            range: "(0, 1) for the online bounds",
        })
    }
}

/// Sample mean and unbiased variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalMoments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub standard_error_mean: f64,
    /// Large-sample standard error of the variance estimator,
    /// `sqrt((mu4 - s^4 (N - 3) / (N - 1)) / N)`.
    pub standard_error_variance: f64,
}

pub fn empirical_moments(samples: &[f64]) -> Result<EmpiricalMoments> {
    let count = samples.len();
    if count < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: count,
        });
    }
    let nf = count as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    let variance = m2 / (nf - 1.0);
    let mu4 = m4 / nf;
    let var_of_var = (mu4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf;
    Ok(EmpiricalMoments {
        count,
        mean,
        variance,
        standard_error_mean: (variance / nf).sqrt(),
        standard_error_variance: var_of_var.max(0.0).sqrt(),
    })
}

/// Exact law of the online Markov mechanism's output distance for one input,
/// by forward propagation over `(previous output, distance so far)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineTrajectoryLaw {
    /// `P[d = l]` for `l` in `0..=n`.
    pub distance: Vec<f64>,
    /// `P[s_t^o = s_t]` for each position.
    pub correct: Vec<f64>,
}

impl OnlineTrajectoryLaw {
    pub fn moments(&self) -> Moments {
        let expectation: f64 = self
            .distance
            .iter()
            .enumerate()
            .map(|(l, p)| l as f64 * p)
            .sum();
        let variance = self
            .distance
            .iter()
            .enumerate()
            .map(|(l, p)| (l as f64 - expectation).powi(2) * p)
            .sum();
        Moments {
            expectation,
            variance,
        }
    }
}

pub fn markov_online_trajectory_law(
    chain: &MarkovChain,
    policy: &MarkovOnlinePolicy,
    input: &Word,
) -> Result<OnlineTrajectoryLaw> {
    let s = chain.state_count();
    if input.alphabet_size() != s || policy.state_count() != s {
        return Err(Error::AlphabetMismatch {
            left: input.alphabet_size(),
            right: s,
        });
    }
    let n = input.len();
    let mut mass = vec![vec![0.0; n + 1]; s];
    mass[chain.initial()][0] = 1.0;
    let mut correct = Vec::with_capacity(n);
    for (t, &truth) in input.symbols().iter().enumerate() {
        let mut next = vec![vec![0.0; n + 1]; s];
        let mut hit = 0.0;
        for (prev, by_distance) in mass.iter().enumerate() {
            let total: f64 = by_distance.iter().sum();
            if total == 0.0 {
                continue;
            }
            let row = policy.row(truth, prev);
            hit += total * row[truth];
            for (out, &p) in row.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let shift = usize::from(out != truth);
                for d in 0..=t {
                    next[out][d + shift] += by_distance[d] * p;
                }
            }
        }
        correct.push(hit);
        mass = next;
    }
    let mut distance = vec![0.0; n + 1];
    for by_distance in &mass {
        for (d, p) in by_distance.iter().enumerate() {
            distance[d] += p;
        }
    }
    Ok(OnlineTrajectoryLaw { distance, correct })
}

/// Heuristic expectation range for the online Markov mechanism obtained by
/// plugging `Nmin` and `Nmax` into the free-alphabet online formula. Not a
/// guaranteed bound: once the true state becomes infeasible from the last
/// output the mechanism can make errors the formula does not account for.
pub fn markov_online_expectation_range(
    n: usize,
    chain: &MarkovChain,
    epsilon: f64,
    k: usize,
) -> Result<(f64, f64)> {
    check_privacy_params(epsilon, k)?;
    let e = |count: usize| {
        if count <= 1 {
            0.0
        } else {
            binomial_moments(n, (count - 1) as f64 * (-epsilon / k as f64).exp()).expectation
        }
    };
    Ok((e(chain.min_feasible_count()), e(chain.max_feasible_count())))
}

/// One row of the accuracy CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub mechanism: String,
    pub initial_state: String,
    pub epsilon: f64,
    pub k: usize,
    pub n: usize,
    pub m_or_s: usize,
    pub expectation: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
    pub empirical_mean: f64,
    pub empirical_se: f64,
}

pub const CSV_HEADER: [&str; 12] = [
    "mechanism",
    "initial_state",
    "epsilon",
    "k",
    "n",
    "m_or_S",
    "expectation",
    "variance",
    "lower",
    "upper",
    "empirical_mean",
    "empirical_se",
];

pub fn write_csv<W: std::io::Write>(rows: &[AccuracyRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `SYMDP_GEAH_CORPUS` to a text file to also run the corpus criterion
//! on that text.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use symdp::analytics::{
    concentration_bound, empirical_moments, markov_offline_bounds, offline_moments,
    online_moments, ConcentrationSetting,
};
use symdp::experiment::{run_experiment, ExperimentSpec, SymbolSource};
use symdp::markov::{build_bigram, TokenizerOptions};
use symdp::mnfa::MnfaState;
use symdp::oracle::{enumerate_words, Instance, MechanismDescriptor, MechanismKind};
use symdp::verify::{check_equivalence, random_chain, reference_chain, run_verification, VerifyOptions};
use symdp::{
    build_mnfa, hamming_distance, markov_online_policy, online_policy, privatize_markov_online,
    privatize_online, Alphabet, MarkovChain, MarkovOfflineMechanism, OfflineMechanism,
    RandomStream, Word,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const EPSILONS: [f64; 3] = [0.1, 1.0, 5.0];
const KS: [usize; 2] = [1, 2];
const LENGTHS: [usize; 3] = [1, 2, 3];
const ALPHABETS: [usize; 3] = [1, 2, 3];
const GEAH_GRID: [f64; 5] = [0.01, 0.1, 1.0, 5.0, 10.0];

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took <= limit {
        Ok(took)
    } else {
        Err(format!("took {took:.1?}, limit {limit:?}"))
    }
}

fn sweep_chains() -> Vec<(String, MarkovChain)> {
    vec![
        ("reference-chain".into(), reference_chain()),
        ("random-chain-7".into(), random_chain(7, 4).unwrap()),
    ]
}

fn offline_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut inputs = 0;
    for eps in EPSILONS {
        for k in KS {
            for n in LENGTHS {
                for m in ALPHABETS {
                    let d = MechanismDescriptor::new(MechanismKind::Offline, Instance::Alphabet(m), eps, k);
                    let r = check_equivalence(&d, &format!("alphabet-{m}"), n).map_err(|e| e.to_string())?;
                    inputs += r.inputs_checked;
                    worst = worst.max(r.max_abs_difference);
                }
            }
        }
    }
    let took = within(Duration::from_secs(10), start)?;
    if worst <= 1e-9 {
        Ok(format!("{inputs} inputs, max |difference| {worst:.2e}, {took:.1?}"))
    } else {
        Err(format!("max |difference| {worst:.2e}"))
    }
}

fn markov_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut inputs = 0;
    for (name, chain) in sweep_chains() {
        for eps in EPSILONS {
            for k in KS {
                for n in LENGTHS {
                    let d = MechanismDescriptor::new(MechanismKind::MarkovOffline, Instance::Chain(&chain), eps, k);
                    let r = check_equivalence(&d, &name, n).map_err(|e| e.to_string())?;
                    inputs += r.inputs_checked;
                    worst = worst.max(r.max_abs_difference);
                }
            }
        }
    }
    let took = within(Duration::from_secs(30), start)?;
    if worst <= 1e-9 {
        Ok(format!("{inputs} feasible inputs, max |difference| {worst:.2e}, {took:.1?}"))
    } else {
        Err(format!("max |difference| {worst:.2e}"))
    }
}

fn exact_dp() -> Outcome {
    let start = Instant::now();
    let options = VerifyOptions {
        lengths: LENGTHS.to_vec(),
        alphabet_sizes: ALPHABETS.to_vec(),
        ks: KS.to_vec(),
        epsilons: EPSILONS.to_vec(),
        random_chain_seed: 7,
        break_tau: false,
    };
    let report = run_verification(&options).map_err(|e| e.to_string())?;
    let broken = run_verification(&VerifyOptions {
        break_tau: true,
        ..options
    })
    .map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(60), start)?;
    let failing: Vec<_> = report.dp.iter().filter(|r| !r.passed).collect();
    if !failing.is_empty() {
        return Err(format!("{} violations, first {:?}", failing.len(), failing[0]));
    }
    // With a single symbol the calibrated tau is already 1.
    let controls: Vec<_> = broken.dp.iter().filter(|r| r.symbols > 1).collect();
    if broken.passed || controls.iter().any(|r| r.passed) {
        return Err("tau = 1 negative control not flagged everywhere".into());
    }
    let slack = report
        .dp
        .iter()
        .map(|r| r.max_log_ratio.unwrap() - r.epsilon)
        .fold(f64::NEG_INFINITY, f64::max);
    let offline_strict = report
        .dp
        .iter()
        .filter(|r| r.mechanism == MechanismKind::Offline)
        .all(|r| r.max_log_ratio.unwrap() < r.epsilon);
    Ok(format!(
        "{} sweeps, max (log ratio - epsilon) {slack:.2e}, offline strictly below epsilon: {offline_strict}; \
         {} negative controls flagged, {took:.1?}",
        report.dp.len(),
        controls.len()
    ))
}

fn three_se(label: &str, observed: f64, expected: f64, se: f64) -> Result<String, String> {
    let z = (observed - expected) / se;
    let line = format!("{label}: {observed:.4} vs {expected:.4} (z {z:+.2})");
    if z.abs() <= 3.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn moment_formulas() -> Outcome {
    let (n, m, k, samples) = (15, 50, 1, 100_000);
    let alphabet = Alphabet::numbered(m).unwrap();
    let input = alphabet
        .encode(&(0..n).map(|i| ((i * 7) % m).to_string()).collect::<Vec<_>>())
        .unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, eps) in EPSILONS.into_iter().enumerate() {
        let root = RandomStream::from_seed(400 + i as u64);
        let offline = OfflineMechanism::new(input.clone(), eps, k).unwrap();
        let policy = online_policy(m, eps, k).unwrap();
        let mut rng = root.split(0);
        let off: Vec<f64> = (0..samples)
            .map(|_| hamming_distance(&input, &offline.sample(&mut rng)).unwrap() as f64)
            .collect();
        let mut rng = root.split(1);
        let on: Vec<f64> = (0..samples)
            .map(|_| hamming_distance(&input, &privatize_online(&input, &policy, &mut rng).unwrap()).unwrap() as f64)
            .collect();
        for (name, data, formula) in [
            ("offline", &off, offline_moments(n, m, eps, k).unwrap()),
            ("online", &on, online_moments(n, m, eps, k).unwrap()),
        ] {
            let e = empirical_moments(data).unwrap();
            for r in [
                three_se(&format!("{name} eps={eps} mean"), e.mean, formula.expectation, e.standard_error_mean),
                three_se(&format!("{name} eps={eps} var"), e.variance, formula.variance, e.standard_error_variance),
            ] {
                ok &= r.is_ok();
                lines.push(r.unwrap_or_else(|x| format!("OUT: {x}")));
            }
        }
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn stand_in_chain() -> MarkovChain {
    let text = std::fs::read_to_string(fixture("stand_in_corpus.txt")).unwrap();
    build_bigram(&text, &TokenizerOptions::default()).unwrap()
}

fn sentence() -> Vec<String> {
    std::fs::read_to_string(fixture("input.txt"))
        .unwrap()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn markov_bounds() -> Outcome {
    let samples = 10_000;
    let reference = reference_chain();
    let bigram = stand_in_chain().with_initial_named("anywhere").unwrap();
    let cases: Vec<(&str, &MarkovChain, Word)> = vec![
        ("reference s1 s2 s3", &reference, reference.encode(&["s1", "s2", "s3"]).unwrap()),
        ("reference s1 s1 s2", &reference, reference.encode(&["s1", "s1", "s2"]).unwrap()),
        ("bigram from anywhere", &bigram, bigram.encode(&sentence()).unwrap()),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (c, (name, chain, input)) in cases.iter().enumerate() {
        for (i, eps) in EPSILONS.into_iter().enumerate() {
            let n = input.len();
            let mech = MarkovOfflineMechanism::new(chain, input.clone(), eps, 1).unwrap();
            let bounds = markov_offline_bounds(n, chain, eps, 1, mech.counts()).unwrap();
            let mut rng = RandomStream::from_seed(500).split((c * 10 + i) as u64);
            let d: Vec<f64> = (0..samples)
                .map(|_| hamming_distance(input, &mech.sample(&mut rng)).unwrap() as f64)
                .collect();
            let e = empirical_moments(&d).unwrap();
            let inside = bounds.lower <= e.mean && e.mean <= bounds.upper;
            let var_ok = e.variance <= bounds.variance_bound;
            ok &= inside && var_ok;
            lines.push(format!(
                "{}{name} eps={eps}: E[d]~{:.3} (exact {:.3}) in [{:.3}, {:.3}], var {:.3} <= {}",
                if inside && var_ok { "" } else { "OUT: " },
                e.mean,
                mech.distance_distribution().mean(),
                bounds.lower,
                bounds.upper,
                e.variance,
                bounds.variance_bound
            ));
        }
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn feasibility() -> Outcome {
    let samples = 10_000;
    let chain = stand_in_chain().with_initial_named("anywhere").unwrap();
    let input = chain.encode(&sentence()).unwrap();
    let offline = MarkovOfflineMechanism::new(&chain, input.clone(), 1.0, 1).unwrap();
    let policy = markov_online_policy(&chain, 1.0, 1).unwrap();
    let mut rng = RandomStream::from_seed(600);
    let mut bad_offline = 0;
    let mut bad_online = 0;
    for _ in 0..samples {
        if !chain.is_feasible(&offline.sample(&mut rng)) {
            bad_offline += 1;
        }
        if !chain.is_feasible(&privatize_markov_online(&chain, &input, &policy, &mut rng).unwrap()) {
            bad_online += 1;
        }
    }
    // The online mechanism also has to stay feasible from an input it cannot follow.
    let green = chain.with_initial_named("green").unwrap();
    let green_policy = markov_online_policy(&green, 1.0, 1).unwrap();
    let mut bad_green = 0;
    for _ in 0..samples {
        if !green.is_feasible(&privatize_markov_online(&green, &input, &green_policy, &mut rng).unwrap()) {
            bad_green += 1;
        }
    }
    let line = format!(
        "infeasible outputs: offline {bad_offline}/{samples}, online {bad_online}/{samples}, online from green {bad_green}/{samples}"
    );
    if bad_offline + bad_online + bad_green == 0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn corpus_reproduction(label: &str, chain: &MarkovChain, input: &[String]) -> Outcome {
    let mut lines = vec![format!("{label}: {} states", chain.state_count())];
    let mut ok = chain.state_count() == 50;
    let initials = ["anywhere", "green", "could"];
    let spec = ExperimentSpec {
        mechanism: MechanismKind::MarkovOnline,
        epsilons: GEAH_GRID.to_vec(),
        k: 1,
        samples: 1000,
        input: input.to_vec(),
        source: SymbolSource::Chain(chain.clone()),
        initial_states: initials.iter().map(|s| s.to_string()).collect(),
        seed: 2024,
    };
    let rows = run_experiment(&spec).map_err(|e| format!("{label}: {e}"))?;
    for init in initials {
        let curve: Vec<f64> = rows
            .iter()
            .filter(|r| r.initial_state == init)
            .map(|r| r.empirical_mean)
            .collect();
        let monotone = curve.windows(2).all(|w| w[1] <= w[0]);
        ok &= monotone;
        lines.push(format!(
            "{}{init} {:?}",
            if monotone { "" } else { "NOT MONOTONE " },
            curve.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ));
    }
    let at = |init: &str| {
        rows.iter()
            .find(|r| r.initial_state == init && r.epsilon == 10.0)
            .unwrap()
            .empirical_mean
    };
    let (any10, green10) = (at("anywhere"), at("green"));
    ok &= any10 <= 1.0 && green10 >= 6.0;
    lines.push(format!("eps=10: anywhere {any10:.3} (<= 1), green {green10:.3} (>= 6)"));

    let anywhere = chain.states().index_of("anywhere").ok_or("no state \"anywhere\"")?;
    let i = chain.states().index_of("I").ok_or("no state \"I\"")?;
    let n_any = chain.feasible_count(anywhere);
    if n_any == 2 {
        let policy = markov_online_policy(chain, 5.0, 1).unwrap();
        let p = policy.probability(i, i, anywhere);
        let closed = 1.0 / ((-5.0f64).exp() + 1.0);
        let close = (p - 0.993).abs() <= 0.001 && (p - closed).abs() < 1e-12;
        ok &= close;
        lines.push(format!("P[I | anywhere] at eps=5: {p:.4} (closed form {closed:.4}, reported 0.993)"));
    } else {
        lines.push(format!("N(anywhere) = {n_any}, not 2: P[I | anywhere] comparison not applicable"));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn corpus_criterion() -> Outcome {
    let chain = stand_in_chain();
    let mut out = corpus_reproduction("stand-in corpus", &chain, &sentence());
    if let Ok(path) = std::env::var("SYMDP_GEAH_CORPUS") {
        let real = std::fs::read_to_string(&path)
            .map_err(|e| format!("{path}: {e}"))
            .and_then(|t| build_bigram(&t, &TokenizerOptions::default()).map_err(|e| e.to_string()))
            .and_then(|c| corpus_reproduction(&path, &c, &sentence()));
        out = match (out, real) {
            (Ok(a), Ok(b)) => Ok(format!("{a} || {b}")),
            (Ok(a), Err(b)) | (Err(a), Ok(b)) | (Err(a), Err(b)) => Err(format!("{a} || {b}")),
        };
    }
    out
}

fn uniform_distance_class() -> Outcome {
    let alphabet = Alphabet::new(["a", "b", "c"]).unwrap();
    let x = alphabet.encode(&["a", "b", "c"]).unwrap();
    let policy = build_mnfa(&x, 2, &alphabet).unwrap().synthesize();
    let v0 = policy.path_count(MnfaState::new(0, 0)).cloned().unwrap_or_default();
    if v0 != BigUint::from(12u32) {
        return Err(format!("V(q00) = {v0}"));
    }
    let twelfth = BigRational::new(1.into(), 12.into());
    let mut at_two = 0;
    let mut total = BigRational::zero();
    for w in enumerate_words(3, 3).unwrap() {
        let p = policy.path_probability(&w).unwrap_or_else(BigRational::zero);
        total += &p;
        if hamming_distance(&x, &w).unwrap() == 2 {
            at_two += 1;
            if p != twelfth {
                return Err(format!("{w} has probability {p}"));
            }
        } else if !p.is_zero() {
            return Err(format!("{w} at wrong distance has probability {p}"));
        }
    }
    if at_two == 12 && total.is_one() {
        Ok("V(q00) = 12; each of the 12 words at distance 2 has probability exactly 1/12".into())
    } else {
        Err(format!("{at_two} words at distance 2, total mass {total}"))
    }
}

fn binomial(n: usize, r: usize) -> BigUint {
    (0..r).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

fn closed_form_counts() -> Outcome {
    let mut states = 0;
    for n in 1..=8 {
        for m in 2..=5 {
            let alphabet = Alphabet::numbered(m).unwrap();
            let x = Word::new((0..n).map(|i| (i * 3 + 1) % m).collect(), m).unwrap();
            for l in 0..=n {
                let policy = build_mnfa(&x, l, &alphabet).unwrap().synthesize();
                let mnfa = policy.automaton();
                for q in mnfa.states() {
                    let expected = binomial(n - q.emitted, l - q.mismatches)
                        * BigUint::from(m - 1).pow((l - q.mismatches) as u32);
                    let got = policy.path_count(q).cloned().unwrap_or_default();
                    if got != expected {
                        return Err(format!("n={n} m={m} l={l} state {q:?}: {got} != {expected}"));
                    }
                    states += 1;
                }
            }
        }
    }
    Ok(format!("{states} states checked over n <= 8, 2 <= m <= 5, all l"))
}

fn concentration() -> Outcome {
    let (n, m, k, samples) = (15, 50, 1, 100_000);
    let alphabet = Alphabet::numbered(m).unwrap();
    let input = alphabet
        .encode(&(0..n).map(|i| (i % m).to_string()).collect::<Vec<_>>())
        .unwrap();
    let mut lines = Vec::new();
    let mut worst_gap = f64::NEG_INFINITY;
    for (i, eps) in EPSILONS.into_iter().enumerate() {
        let root = RandomStream::from_seed(700 + i as u64);
        let offline = OfflineMechanism::new(input.clone(), eps, k).unwrap();
        let mut rng = root.split(0);
        let off: Vec<f64> = (0..samples)
            .map(|_| hamming_distance(&input, &offline.sample(&mut rng)).unwrap() as f64)
            .collect();
        let e_off = offline_moments(n, m, eps, k).unwrap().expectation;
        for eta in [0.05, 0.1, 0.2, 0.3, 0.4, 0.49] {
            let freq = off.iter().filter(|&&d| (d - e_off).abs() > eta).count() as f64 / samples as f64;
            let bound = concentration_bound(ConcentrationSetting::Offline { n }, eta).unwrap();
            worst_gap = worst_gap.max(freq - bound);
        }
        let policy = online_policy(m, eps, k).unwrap();
        let mut rng = root.split(1);
        let on: Vec<f64> = (0..samples)
            .map(|_| hamming_distance(&input, &privatize_online(&input, &policy, &mut rng).unwrap()).unwrap() as f64)
            .collect();
        let e_on = online_moments(n, m, eps, k).unwrap().expectation;
        let mut tightest: f64 = 0.0;
        for eta in [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.99] {
            let up = on.iter().filter(|&&d| d > (1.0 + eta) * e_on).count() as f64 / samples as f64;
            let lo = on.iter().filter(|&&d| d < (1.0 - eta) * e_on).count() as f64 / samples as f64;
            let bu = concentration_bound(ConcentrationSetting::OnlineUpper { expectation: e_on }, eta).unwrap();
            let bl = concentration_bound(ConcentrationSetting::OnlineLower { expectation: e_on }, eta).unwrap();
            worst_gap = worst_gap.max(up - bu).max(lo - bl);
            tightest = tightest.max(up / bu.max(f64::MIN_POSITIVE)).max(lo / bl.max(f64::MIN_POSITIVE));
        }
        lines.push(format!("eps={eps}: largest online frequency/bound {tightest:.3}"));
    }
    let summary = format!("max(frequency - bound) {worst_gap:+.4}; {}", lines.join("; "));
    if worst_gap <= 0.0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("offline mechanism equals the exponential mechanism", offline_equivalence),
        ("Markov offline mechanism equals the exponential mechanism on feasible words", markov_equivalence),
        ("exact privacy verification and negative control", exact_dp),
        ("moment formulas against Monte Carlo", moment_formulas),
        ("Markov offline expectation bounds", markov_bounds),
        ("Markov outputs are feasible", feasibility),
        ("bigram corpus reproduction", corpus_criterion),
        ("uniformity within a distance class", uniform_distance_class),
        ("closed-form path counts", closed_form_counts),
        ("concentration bounds", concentration),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {title} [{took:.1?}]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {title} [{took:.1?}]: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

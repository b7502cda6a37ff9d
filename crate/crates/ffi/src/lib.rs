//! C interface to `symdp`.
//!
//! Every fallible function returns a [`SymdpStatus`]; on failure a message
//! is available from [`symdp_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Words cross the
//! boundary as arrays of symbol indices.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use symdp::analytics::{offline_moments, online_moments};
use symdp::markov::{build_bigram, TokenizerOptions};
use symdp::{
    markov_online_policy, online_policy, privatize_markov_online, privatize_online, Error,
    MarkovChain, MarkovOfflineMechanism, OfflineMechanism, RandomStream, Word,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    UnknownToken = 4,
    InvalidChain = 5,
    Internal = 6,
}

/// Seeded random stream.
pub struct SymdpRng(RandomStream);

/// Markov chain with a public initial state.
pub struct SymdpChain(MarkovChain);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SymdpStatus {
    match e {
        Error::Infeasible { .. } => SymdpStatus::Infeasible,
        Error::UnknownToken { .. } => SymdpStatus::UnknownToken,
        Error::InvalidChain(_) | Error::Json(_) | Error::EmptyCorpus => SymdpStatus::InvalidChain,
        _ => SymdpStatus::InvalidArgument,
    }
}

fn guard<F>(f: F) -> SymdpStatus
where
    F: FnOnce() -> Result<(), SymdpStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SymdpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SymdpStatus::Internal
        }
    }
}

fn lib<T>(r: symdp::Result<T>) -> Result<T, SymdpStatus> {
    r.map_err(|e| {
        let s = status_of(&e);
        set_error(e.to_string());
        s
    })
}

fn null(what: &str) -> SymdpStatus {
    set_error(format!("{what} is null"));
    SymdpStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SymdpStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        SymdpStatus::InvalidArgument
    })
}

unsafe fn word_arg(input: *const usize, len: usize, alphabet_size: usize) -> Result<Word, SymdpStatus> {
    if input.is_null() {
        return Err(null("input"));
    }
    let symbols = std::slice::from_raw_parts(input, len).to_vec();
    lib(Word::new(symbols, alphabet_size))
}

unsafe fn write_word(word: &Word, output: *mut usize) -> Result<(), SymdpStatus> {
    if output.is_null() {
        return Err(null("output"));
    }
    ptr::copy_nonoverlapping(word.symbols().as_ptr(), output, word.len());
    Ok(())
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn symdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn symdp_rng_new(seed: u64) -> *mut SymdpRng {
    Box::into_raw(Box::new(SymdpRng(RandomStream::from_seed(seed))))
}

/// # Safety
/// `rng` must come from [`symdp_rng_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symdp_rng_free(rng: *mut SymdpRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Parses a chain from its JSON form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symdp_chain_from_json(json: *const c_char, out: *mut *mut SymdpChain) -> SymdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = lib(MarkovChain::from_json(str_arg(json, "json")?))?;
        *out = Box::into_raw(Box::new(SymdpChain(chain)));
        Ok(())
    })
}

/// Builds a bigram chain from text with the default tokenizer.
///
/// # Safety
/// `corpus` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symdp_chain_from_corpus(corpus: *const c_char, out: *mut *mut SymdpChain) -> SymdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = lib(build_bigram(str_arg(corpus, "corpus")?, &TokenizerOptions::default()))?;
        *out = Box::into_raw(Box::new(SymdpChain(chain)));
        Ok(())
    })
}

/// Copy of `chain` starting from the state named `initial`.
///
/// # Safety
/// `chain` must be a live handle, `initial` a nul-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symdp_chain_with_initial(
    chain: *const SymdpChain,
    initial: *const c_char,
    out: *mut *mut SymdpChain,
) -> SymdpStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let moved = lib(chain.0.with_initial_named(str_arg(initial, "initial")?))?;
        *out = Box::into_raw(Box::new(SymdpChain(moved)));
        Ok(())
    })
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn symdp_chain_state_count(chain: *const SymdpChain) -> usize {
    chain.as_ref().map_or(0, |c| c.0.state_count())
}

/// Index of the state named `name`, written to `out`.
///
/// # Safety
/// `chain` must be a live handle, `name` a nul-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn symdp_chain_state_index(
    chain: *const SymdpChain,
    name: *const c_char,
    out: *mut usize,
) -> SymdpStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let name = str_arg(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = chain.0.states().index_of(name).ok_or_else(|| {
            set_error(format!("unknown state {name:?}"));
            SymdpStatus::UnknownToken
        })?;
        Ok(())
    })
}

/// 1 if `word` is feasible from the chain's initial state, 0 otherwise.
///
/// # Safety
/// `chain` must be a live handle and `word` must point to `len` indices.
#[no_mangle]
pub unsafe extern "C" fn symdp_chain_is_feasible(chain: *const SymdpChain, word: *const usize, len: usize) -> i32 {
    let Some(chain) = chain.as_ref() else { return 0 };
    match word_arg(word, len, chain.0.state_count()) {
        Ok(w) => i32::from(chain.0.is_feasible(&w)),
        Err(_) => 0,
    }
}

/// # Safety
/// `chain` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symdp_chain_free(chain: *mut SymdpChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Offline mechanism over `alphabet_size` symbols. `output` receives `len`
/// indices.
///
/// # Safety
/// `input` and `output` must point to `len` elements; `rng` must be live.
#[no_mangle]
pub unsafe extern "C" fn symdp_privatize_offline(
    input: *const usize,
    len: usize,
    alphabet_size: usize,
    epsilon: f64,
    k: usize,
    rng: *mut SymdpRng,
    output: *mut usize,
) -> SymdpStatus {
    guard(|| {
        let rng = rng.as_mut().ok_or_else(|| null("rng"))?;
        let word = word_arg(input, len, alphabet_size)?;
        let mech = lib(OfflineMechanism::new(word, epsilon, k))?;
        write_word(&mech.sample(&mut rng.0), output)
    })
}

/// Online mechanism over `alphabet_size` symbols.
///
/// # Safety
/// As for [`symdp_privatize_offline`].
#[no_mangle]
pub unsafe extern "C" fn symdp_privatize_online(
    input: *const usize,
    len: usize,
    alphabet_size: usize,
    epsilon: f64,
    k: usize,
    rng: *mut SymdpRng,
    output: *mut usize,
) -> SymdpStatus {
    guard(|| {
        let rng = rng.as_mut().ok_or_else(|| null("rng"))?;
        let word = word_arg(input, len, alphabet_size)?;
        let policy = lib(online_policy(alphabet_size, epsilon, k))?;
        write_word(&lib(privatize_online(&word, &policy, &mut rng.0))?, output)
    })
}

/// Offline Markov mechanism; the input must be feasible.
///
/// # Safety
/// `chain` and `rng` must be live; `input` and `output` must point to `len`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn symdp_privatize_markov_offline(
    chain: *const SymdpChain,
    input: *const usize,
    len: usize,
    epsilon: f64,
    k: usize,
    rng: *mut SymdpRng,
    output: *mut usize,
) -> SymdpStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let rng = rng.as_mut().ok_or_else(|| null("rng"))?;
        let word = word_arg(input, len, chain.0.state_count())?;
        let mech = lib(MarkovOfflineMechanism::new(&chain.0, word, epsilon, k))?;
        write_word(&mech.sample(&mut rng.0), output)
    })
}

/// Online Markov mechanism; any input is accepted, the output is feasible.
///
/// # Safety
/// As for [`symdp_privatize_markov_offline`].
#[no_mangle]
pub unsafe extern "C" fn symdp_privatize_markov_online(
    chain: *const SymdpChain,
    input: *const usize,
    len: usize,
    epsilon: f64,
    k: usize,
    rng: *mut SymdpRng,
    output: *mut usize,
) -> SymdpStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let rng = rng.as_mut().ok_or_else(|| null("rng"))?;
        let word = word_arg(input, len, chain.0.state_count())?;
        let policy = lib(markov_online_policy(&chain.0, epsilon, k))?;
        write_word(&lib(privatize_markov_online(&chain.0, &word, &policy, &mut rng.0))?, output)
    })
}

/// Privatizes space-separated tokens against `chain`. `online` selects the
/// mechanism. The result must be released with [`symdp_string_free`].
///
/// # Safety
/// `chain` and `rng` must be live, `input` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symdp_privatize_tokens(
    chain: *const SymdpChain,
    input: *const c_char,
    online: bool,
    epsilon: f64,
    k: usize,
    rng: *mut SymdpRng,
    out: *mut *mut c_char,
) -> SymdpStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let rng = rng.as_mut().ok_or_else(|| null("rng"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let tokens: Vec<&str> = str_arg(input, "input")?.split_whitespace().collect();
        let word = lib(chain.0.encode(&tokens))?;
        let result = if online {
            let policy = lib(markov_online_policy(&chain.0, epsilon, k))?;
            lib(privatize_markov_online(&chain.0, &word, &policy, &mut rng.0))?
        } else {
            lib(MarkovOfflineMechanism::new(&chain.0, word, epsilon, k))?.sample(&mut rng.0)
        };
        let text = lib(chain.0.states().decode(&result))?.join(" ");
        *out = CString::new(text).expect("tokens have no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symdp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Closed-form mean and variance of the output distance. `online` selects
/// the mechanism.
///
/// # Safety
/// `expectation` and `variance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symdp_moments(
    n: usize,
    alphabet_size: usize,
    epsilon: f64,
    k: usize,
    online: bool,
    expectation: *mut f64,
    variance: *mut f64,
) -> SymdpStatus {
    guard(|| {
        if expectation.is_null() || variance.is_null() {
            return Err(null("expectation or variance"));
        }
        let m = if online {
            lib(online_moments(n, alphabet_size, epsilon, k))?
        } else {
            lib(offline_moments(n, alphabet_size, epsilon, k))?
        };
        *expectation = m.expectation;
        *variance = m.variance;
        Ok(())
    })
}

//! Search state: grounded literals as a bitset, fluents as a vector, the
//! Gaussian belief, and the quantized key that makes beliefs comparable in
//! the closed set.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::belief::{trace_of, GaussianBelief};

/// Fixed-capacity bitset over grounded literal ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    fn words(&self) -> &[u64] {
        &self.words
    }
}

/// One node of the hybrid search space.
#[derive(Debug, Clone)]
pub struct HybridState {
    pub literals: BitSet,
    pub fluents: Vec<f64>,
    pub belief: GaussianBelief,
    /// Seconds since the initial state; always a multiple of the tick length.
    pub clock: f64,
    /// Accumulated path cost.
    pub g: f64,
}

impl HybridState {
    /// Covariance trace of the current belief.
    pub fn trace(&self) -> f64 {
        trace_of(&self.belief)
    }
}

/// Resolution at which fluents, the mean pose, and the trace are snapped
/// when deciding whether two states are duplicates.
pub const KEY_QUANTUM: f64 = 1e-3;

fn quantize(x: f64) -> i64 {
    (x / KEY_QUANTUM).round() as i64
}

/// Closed-set identity of a state: literals plus quantized numerics. The
/// clock is deliberately excluded so that waiting in place cannot manufacture
/// "new" states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateKey {
    literals: Vec<u64>,
    fluents: Vec<i64>,
    mean: [i64; 3],
    trace: i64,
}

impl StateKey {
    pub fn of(state: &HybridState) -> StateKey {
        Self::of_gated(state, &[])
    }

    /// Like [`StateKey::of`], but any fluent slot whose entry in `gate` names
    /// a literal is keyed as 0 while that literal is false. Used for
    /// remaining-distance fluents: once their edge is no longer being
    /// traversed, the leftover value is never read again (every reader is
    /// guarded by the same literal and departures overwrite it), so states
    /// differing only there behave identically and must not be told apart.
    pub fn of_gated(state: &HybridState, gate: &[Option<usize>]) -> StateKey {
        let fluents = state
            .fluents
            .iter()
            .enumerate()
            .map(|(slot, &v)| match gate.get(slot).copied().flatten() {
                Some(lit) if !state.literals.get(lit) => 0,
                _ => quantize(v),
            })
            .collect();
        StateKey {
            literals: state.literals.words().to_vec(),
            fluents,
            mean: [
                quantize(state.belief.mean.x),
                quantize(state.belief.mean.y),
                quantize(state.belief.mean.theta),
            ],
            trace: quantize(state.trace()),
        }
    }

    /// Stable hash used for deterministic tie-breaking in the open list.
    pub fn stable_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// 128-bit fingerprint (two independently salted hash passes), compact
    /// enough to stand in for the full key in the closed set.
    pub fn digest(&self) -> u128 {
        let mut lo = DefaultHasher::new();
        0u8.hash(&mut lo);
        self.hash(&mut lo);
        let mut hi = DefaultHasher::new();
        1u8.hash(&mut hi);
        self.hash(&mut hi);
        (u128::from(hi.finish()) << 64) | u128::from(lo.finish())
    }
}

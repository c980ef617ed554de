//! Driving sequences `omega = omega_1 omega_2 ...` over the scheme symbols
//! `1..=m`, symbol frequencies, and n-th appearance statistics.
//!
//! Positions and symbols are 1-based throughout the public surface.
//!
//! Bernoulli sequences use a counter-based generator so any position can be
//! read without history. The symbol at position `l` under seed `s` is
//!
//! ```text
//! z  = s + l * 0x9E3779B97F4A7C15            (wrapping u64 arithmetic)
//! z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z  =  z ^ (z >> 31)
//! u  = (z >> 11) * 2^-53                     (uniform in [0, 1))
//! omega_l = smallest k with u < P_1 + ... + P_k
//! ```
//!
//! which is exactly the `l`-th output of a SplitMix64 stream seeded with `s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variational::{FrequencyVector, FREQUENCY_TOLERANCE};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` attached to position `l` of stream `seed`.
#[inline]
pub fn counter_uniform(seed: u64, l: u64) -> f64 {
    let z = splitmix64_mix(seed.wrapping_add(l.wrapping_mul(GOLDEN_GAMMA)));
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliSpec {
    pub p: Vec<f64>,
    pub seed: u64,
}

/// Sequence description as it appears in sequence files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceSpec {
    Periodic(Vec<usize>),
    Explicit(Vec<usize>),
    Bernoulli(BernoulliSpec),
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Periodic { word: Vec<usize>, counts: Vec<usize> },
    Explicit(Vec<usize>),
    Bernoulli { p: Vec<f64>, cumulative: Vec<f64>, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    kind: Kind,
    symbols: usize,
}

fn check_symbols(word: &[usize], m: usize) -> Result<()> {
    match word.iter().find(|&&k| k == 0 || k > m) {
        Some(k) => Err(Error::InvalidArgument(format!("symbol {k} outside 1..={m}"))),
        None => Ok(()),
    }
}

impl SymbolSequence {
    /// `word` repeated forever.
    pub fn periodic(word: Vec<usize>, m: usize) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidArgument("periodic word must be nonempty".into()));
        }
        check_symbols(&word, m)?;
        let mut counts = vec![0; m];
        for &k in &word {
            counts[k - 1] += 1;
        }
        Ok(SymbolSequence {
            kind: Kind::Periodic { word, counts },
            symbols: m,
        })
    }

    /// A finite prefix; positions beyond it are errors.
    pub fn explicit(prefix: Vec<usize>, m: usize) -> Result<Self> {
        check_symbols(&prefix, m)?;
        Ok(SymbolSequence {
            kind: Kind::Explicit(prefix),
            symbols: m,
        })
    }

    /// Independent symbols with law `p`, reproducible from `seed`.
    pub fn bernoulli(p: Vec<f64>, seed: u64) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument("Bernoulli probabilities must be positive".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > FREQUENCY_TOLERANCE {
            return Err(Error::InvalidArgument(format!("Bernoulli probabilities sum to {total}")));
        }
        let cumulative = p
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        let symbols = p.len();
        Ok(SymbolSequence {
            kind: Kind::Bernoulli { p, cumulative, seed },
            symbols,
        })
    }

    /// Builds a sequence from its file description. `m` defaults to the
    /// largest symbol present (periodic/explicit) or the length of `p`.
    pub fn from_spec(spec: SequenceSpec, m: Option<usize>) -> Result<Self> {
        match spec {
            SequenceSpec::Periodic(w) => {
                let m = m.unwrap_or_else(|| w.iter().copied().max().unwrap_or(0));
                SymbolSequence::periodic(w, m)
            }
            SequenceSpec::Explicit(w) => {
                let m = m.unwrap_or_else(|| w.iter().copied().max().unwrap_or(0));
                SymbolSequence::explicit(w, m)
            }
            SequenceSpec::Bernoulli(b) => {
                if let Some(m) = m {
                    if m != b.p.len() {
                        return Err(Error::Shape(format!(
                            "Bernoulli law has {} symbols, expected {m}",
                            b.p.len()
                        )));
                    }
                }
                SymbolSequence::bernoulli(b.p, b.seed)
            }
        }
    }

    pub fn spec(&self) -> SequenceSpec {
        match &self.kind {
            Kind::Periodic { word, .. } => SequenceSpec::Periodic(word.clone()),
            Kind::Explicit(w) => SequenceSpec::Explicit(w.clone()),
            Kind::Bernoulli { p, seed, .. } => SequenceSpec::Bernoulli(BernoulliSpec {
                p: p.clone(),
                seed: *seed,
            }),
        }
    }

    /// Size of the symbol set `m`.
    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Length of the known prefix, `None` for infinite sequences.
    pub fn prefix_len(&self) -> Option<usize> {
        match &self.kind {
            Kind::Explicit(w) => Some(w.len()),
            _ => None,
        }
    }

    pub fn period(&self) -> Option<&[usize]> {
        match &self.kind {
            Kind::Periodic { word, .. } => Some(word),
            _ => None,
        }
    }

    /// `omega_l` for `l >= 1`.
    pub fn symbol_at(&self, l: usize) -> Result<usize> {
        if l == 0 {
            return Err(Error::InvalidArgument("positions are 1-based".into()));
        }
        match &self.kind {
            Kind::Periodic { word, .. } => Ok(word[(l - 1) % word.len()]),
            Kind::Explicit(w) => w.get(l - 1).copied().ok_or(Error::PrefixExhausted {
                position: l,
                len: w.len(),
            }),
            Kind::Bernoulli { cumulative, .. } => Ok(self.bernoulli_symbol(cumulative, l)),
        }
    }

    fn bernoulli_symbol(&self, cumulative: &[f64], l: usize) -> usize {
        let Kind::Bernoulli { seed, .. } = &self.kind else {
            unreachable!()
        };
        let u = counter_uniform(*seed, l as u64);
        cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(cumulative.len() - 1)
            + 1
    }

    /// `omega_1 .. omega_n`.
    pub fn prefix(&self, n: usize) -> Result<Vec<usize>> {
        (1..=n).map(|l| self.symbol_at(l)).collect()
    }

    /// Frequency vector the sequence is built around: the period
    /// composition, the Bernoulli law, or the empirical frequencies of an
    /// explicit prefix.
    pub fn nominal_frequencies(&self) -> Result<FrequencyVector> {
        match &self.kind {
            Kind::Periodic { word, counts } => FrequencyVector::from_rational(
                counts.iter().map(|&c| c as u64).collect(),
                word.len() as u64,
            ),
            Kind::Explicit(w) => empirical_frequencies(self, w.len()),
            Kind::Bernoulli { p, .. } => FrequencyVector::from_entries(p.clone()),
        }
    }

    /// Positions of symbol `k`, in increasing order.
    pub fn positions_of(&self, k: usize) -> Positions<'_> {
        Positions {
            seq: self,
            symbol: k,
            next: 1,
            ordinal: 0,
        }
    }
}

/// Iterator over the positions of one symbol.
pub struct Positions<'a> {
    seq: &'a SymbolSequence,
    symbol: usize,
    next: usize,
    ordinal: usize,
}

impl Iterator for Positions<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match &self.seq.kind {
            Kind::Periodic { word, counts } => {
                let c = *counts.get(self.symbol.checked_sub(1)?)?;
                if c == 0 {
                    return None;
                }
                self.ordinal += 1;
                Some(periodic_position(word, c, self.symbol, self.ordinal))
            }
            Kind::Explicit(w) => {
                while self.next <= w.len() {
                    let l = self.next;
                    self.next += 1;
                    if w[l - 1] == self.symbol {
                        return Some(l);
                    }
                }
                None
            }
            Kind::Bernoulli { cumulative, p, .. } => {
                if self.symbol == 0 || self.symbol > p.len() {
                    return None;
                }
                loop {
                    let l = self.next;
                    self.next += 1;
                    if self.seq.bernoulli_symbol(cumulative, l) == self.symbol {
                        return Some(l);
                    }
                }
            }
        }
    }
}

fn periodic_position(word: &[usize], count: usize, k: usize, n: usize) -> usize {
    let full = (n - 1) / count;
    let within = (n - 1) % count;
    let offset = word
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == k)
        .nth(within)
        .map(|(i, _)| i)
        .expect("count matches the word");
    full * word.len() + offset + 1
}

/// `(1/n) #{1 <= l <= n : omega_l = k}` for each symbol `k`.
pub fn empirical_frequencies(seq: &SymbolSequence, n: usize) -> Result<FrequencyVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut counts = vec![0u64; seq.symbols()];
    for l in 1..=n {
        counts[seq.symbol_at(l)? - 1] += 1;
    }
    FrequencyVector::from_rational(counts, n as u64)
}

/// Position of the `n`-th occurrence of symbol `k`.
pub fn appearance_position(seq: &SymbolSequence, k: usize, n: usize) -> Result<usize> {
    if k == 0 || k > seq.symbols() {
        return Err(Error::InvalidArgument(format!("symbol {k} outside 1..={}", seq.symbols())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("ordinals are 1-based".into()));
    }
    match &seq.kind {
        Kind::Periodic { word, counts } => {
            if counts[k - 1] == 0 {
                return Err(Error::Domain(format!("symbol {k} never occurs in the period")));
            }
            Ok(periodic_position(word, counts[k - 1], k, n))
        }
        Kind::Explicit(w) => seq.positions_of(k).nth(n - 1).ok_or(Error::PrefixExhausted {
            position: n,
            len: w.len(),
        }),
        Kind::Bernoulli { .. } => Ok(seq.positions_of(k).nth(n - 1).expect("positive probability")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonProfile {
    pub symbol: usize,
    pub frequency: f64,
    /// `eps[n-1] = |l_n P_k / n - 1|` with `l_n` the n-th appearance.
    pub eps: Vec<f64>,
    /// `envelope[n-1] = max_{n <= n' <= n_max} eps[n'-1]`.
    pub envelope: Vec<f64>,
}

impl EpsilonProfile {
    /// Envelope value at ordinal `n` (clamped to the computed range).
    pub fn envelope_at(&self, n: usize) -> f64 {
        if self.envelope.is_empty() {
            return 0.0;
        }
        self.envelope[n.clamp(1, self.envelope.len()) - 1]
    }
}

/// Relative deviation of the n-th appearance of `k` from `n / P_k`, for
/// `n = 1..=n_max`, with its monotone tail envelope.
pub fn epsilon_profile(seq: &SymbolSequence, p: &FrequencyVector, k: usize, n_max: usize) -> Result<EpsilonProfile> {
    if k == 0 || k > p.len() || k > seq.symbols() {
        return Err(Error::InvalidArgument(format!("symbol {k} outside the symbol set")));
    }
    let pk = p.entries()[k - 1];
    if !(pk > 0.0) {
        return Err(Error::Domain(format!("frequency of symbol {k} must be positive")));
    }
    let mut eps = Vec::with_capacity(n_max);
    let mut positions = seq.positions_of(k);
    for n in 1..=n_max {
        let l = positions.next().ok_or(Error::PrefixExhausted {
            position: n,
            len: seq.prefix_len().unwrap_or(0),
        })?;
        eps.push((l as f64 * pk / n as f64 - 1.0).abs());
    }
    let mut envelope = eps.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    Ok(EpsilonProfile {
        symbol: k,
        frequency: pk,
        eps,
        envelope,
    })
}

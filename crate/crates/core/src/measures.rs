//! Bernoulli-type measures on address space driven by a periodic word, and
//! empirical local-dimension and sandwich checks built on them.
//!
//! A [`PeriodMeasure`] assigns each block of `L` consecutive addresses (one
//! period of the driving word) an independent weight from a probability
//! vector on the composed alphabet. Rectangles are measured only at depths
//! that are multiples of `L`, where the measure is an exact product.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{image_bounds, tau_apply, AddressWord, Coupling, Rectangle, WordProfile};
use crate::error::{Error, Result};
use crate::scheme::{compose_word_tracked, Address, SchemeFamily, WordScheme};
use crate::sequences::SymbolSequence;
use crate::variational::{canonical_word, maximize_dimension, CellWeights, FrequencyVector, OptimizerOptions};

/// Largest frequency mismatch the sandwich check accepts.
pub const MAX_SANDWICH_DELTA: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct PeriodMeasure {
    family: SchemeFamily,
    composed: WordScheme,
    weights: CellWeights,
    log_p: Vec<f64>,
    log_q: Vec<f64>,
    cell_index: HashMap<Vec<Address>, usize>,
    row_index: HashMap<Vec<usize>, usize>,
}

impl PeriodMeasure {
    pub fn new(family: &SchemeFamily, period_word: &[usize], weights: CellWeights, cap: usize) -> Result<Self> {
        let composed = compose_word_tracked(family, period_word, cap)?;
        if !weights.matches(&composed.scheme) {
            return Err(Error::Shape(format!(
                "weights of length {} do not match the composed alphabet of {} cells",
                weights.len(),
                composed.scheme.alphabet_size()
            )));
        }
        let mut cell_index = HashMap::with_capacity(composed.origins.len());
        let mut row_index = HashMap::new();
        for (flat, (addr, origin)) in composed.scheme.addresses().zip(&composed.origins).enumerate() {
            cell_index.insert(origin.clone(), flat);
            row_index.insert(origin.iter().map(|a| a.row).collect(), addr.row);
        }
        let log_p = weights.as_slice().iter().map(|p| p.ln()).collect();
        let log_q = weights.row_marginals().iter().map(|q| q.ln()).collect();
        Ok(PeriodMeasure {
            family: family.clone(),
            composed,
            weights,
            log_p,
            log_q,
            cell_index,
            row_index,
        })
    }

    /// Measure with the maximizing weights of the composed period scheme,
    /// returned with the maximized value.
    pub fn optimal(family: &SchemeFamily, period_word: &[usize], opts: &OptimizerOptions) -> Result<(Self, f64)> {
        let composed = compose_word_tracked(family, period_word, opts.alphabet_cap)?;
        let report = maximize_dimension(&composed.scheme, opts);
        let mu = PeriodMeasure::new(family, period_word, report.argmax, opts.alphabet_cap)?;
        Ok((mu, report.value))
    }

    pub fn period_word(&self) -> &[usize] {
        &self.composed.word
    }

    pub fn period(&self) -> usize {
        self.composed.word.len()
    }

    pub fn composed(&self) -> &WordScheme {
        &self.composed
    }

    pub fn weights(&self) -> &CellWeights {
        &self.weights
    }

    pub fn family(&self) -> &SchemeFamily {
        &self.family
    }

    /// The periodic driving sequence.
    pub fn sequence(&self) -> SymbolSequence {
        SymbolSequence::periodic(self.composed.word.clone(), self.family.len()).expect("validated word")
    }

    /// Draws `blocks` independent period blocks.
    pub fn sample_word(&self, blocks: usize, seed: u64) -> AddressWord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = WeightedIndex::new(self.weights.as_slice()).expect("weights on the simplex");
        let mut out = Vec::with_capacity(blocks * self.period());
        for _ in 0..blocks {
            out.extend_from_slice(&self.composed.origins[dist.sample(&mut rng)]);
        }
        AddressWord(out)
    }

    /// Smallest whole number of blocks covering the approximate square at
    /// horizontal depth `n1`.
    fn blocks_for(&self, n1: usize) -> usize {
        let (a_min, b_max) = family_extremes(&self.family);
        let n2_bound = (n1 as f64 * a_min.ln() / b_max.ln()).ceil() as usize;
        n2_bound / self.period() + 2
    }
}

fn family_extremes(family: &SchemeFamily) -> (f64, f64) {
    family.schemes().iter().fold((1.0, 0.0), |(a, b), s| {
        (a.min(s.a_range().0), f64::max(b, s.b_range().1))
    })
}

fn check_aligned(n: usize, period: usize) -> Result<()> {
    if n % period != 0 {
        return Err(Error::InvalidArgument(format!(
            "depth {n} is not a multiple of the period length {period}"
        )));
    }
    Ok(())
}

/// `log mu(R)` for a rectangle whose depths are multiples of the period.
pub fn rectangle_measure(mu: &PeriodMeasure, rect: &Rectangle) -> Result<f64> {
    let l = mu.period();
    check_aligned(rect.n1, l)?;
    check_aligned(rect.n2, l)?;
    let mut total = 0.0;
    for (b, block) in rect.base.0[..rect.n2].chunks(l).enumerate() {
        if (b + 1) * l <= rect.n1 {
            let flat = mu.cell_index.get(block).ok_or_else(|| {
                Error::InvalidArgument(format!("block {} is not a composed cell", b + 1))
            })?;
            total += mu.log_p[*flat];
        } else {
            let rows: Vec<usize> = block.iter().map(|a| a.row).collect();
            let row = mu.row_index.get(&rows).ok_or_else(|| {
                Error::InvalidArgument(format!("block {} is not a composed row", b + 1))
            })?;
            total += mu.log_q[*row];
        }
    }
    Ok(total)
}

/// Deepest period-aligned `n2` of the approximate square at `n1`.
fn aligned_square_depth(prof: &WordProfile, n1: usize, period: usize) -> Result<usize> {
    let n2 = prof.square_depth(n1).ok_or_else(|| {
        Error::InsufficientDepth(format!("word too short for an approximate square at n1 = {n1}"))
    })?;
    Ok(n2 / period * period)
}

fn check_ladder(depths: &[usize], period: usize) -> Result<()> {
    if depths.is_empty() {
        return Err(Error::InvalidArgument("depth ladder is empty".into()));
    }
    for &d in depths {
        check_aligned(d, period)?;
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("depths must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalDimensionTrace {
    pub seed: u64,
    pub depths: Vec<usize>,
    pub n2: Vec<usize>,
    /// `log mu(R_k) / log d1(R_k)` along the ladder.
    pub ratios: Vec<f64>,
}

/// Local-dimension ratios at a `mu`-typical word drawn with `seed`.
pub fn local_dimension_trace(mu: &PeriodMeasure, seed: u64, depths: &[usize]) -> Result<LocalDimensionTrace> {
    let l = mu.period();
    check_ladder(depths, l)?;
    let deepest = *depths.last().expect("nonempty");
    let word = mu.sample_word(mu.blocks_for(deepest), seed);
    let seq = mu.sequence();
    let prof = WordProfile::new(&mu.family, &seq, &word)?;
    let mut n2s = Vec::with_capacity(depths.len());
    let mut ratios = Vec::with_capacity(depths.len());
    for &n1 in depths {
        let n2 = aligned_square_depth(&prof, n1, l)?;
        let log_mu = rectangle_measure(mu, &Rectangle::new(word.clone(), n1, n2)?)?;
        let log_width = prof.log_a[n1];
        ratios.push(if log_width == 0.0 { 0.0 } else { log_mu / log_width });
        n2s.push(n2);
    }
    Ok(LocalDimensionTrace {
        seed,
        depths: depths.to_vec(),
        n2: n2s,
        ratios,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalDimensionSummary {
    pub traces: Vec<LocalDimensionTrace>,
    pub last_ratios: Vec<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub reference: f64,
    /// `median - reference`.
    pub deviation: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Traces over several seeds, with the deepest ratios compared to
/// `reference` (usually the maximized dimension).
pub fn local_dimension_summary(
    mu: &PeriodMeasure,
    seeds: &[u64],
    depths: &[usize],
    reference: f64,
) -> Result<LocalDimensionSummary> {
    let traces = seeds
        .par_iter()
        .map(|&s| local_dimension_trace(mu, s, depths))
        .collect::<Result<Vec<_>>>()?;
    let last_ratios: Vec<f64> = traces.iter().map(|t| *t.ratios.last().expect("nonempty")).collect();
    let med = median(&last_ratios);
    Ok(LocalDimensionSummary {
        median: med,
        min: last_ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max: last_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        reference,
        deviation: med - reference,
        last_ratios,
        traces,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichOptions {
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Inclusion constant; zero when not supplied.
    pub k_hat: Option<f64>,
    pub slack: f64,
    pub optimizer: OptimizerOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichSample {
    pub seed: u64,
    pub n1: usize,
    pub n2: usize,
    pub r1: usize,
    pub s1: usize,
    pub log_measure: f64,
    /// `log nu(tau R) / log d1(R_{r1,r2}(tau x))`.
    pub ratio_outer: f64,
    /// `log nu(tau R) / log d1(R_{s1,s2}(tau x))`.
    pub ratio_inner: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub q: Vec<f64>,
    pub period_word: Vec<usize>,
    pub l_q: f64,
    pub delta: f64,
    pub k_hat: f64,
    pub slack: f64,
    pub lower: f64,
    pub upper: f64,
    pub samples: Vec<SandwichSample>,
    pub per_seed: Vec<SeedSummary>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// `max |ratio / l_q - 1|` over all samples.
    pub relative_deviation: f64,
    pub within_bracket: bool,
}

/// Transports `mu_Q`-typical words of `A_{omega(Q)}` to `A_omega` and checks
/// that the measure-to-width ratios of the bracketing image rectangles stay
/// within `L(Q)(1 -+ K delta)` widened by `slack`.
pub fn sandwich_check(
    family: &SchemeFamily,
    omega: &SymbolSequence,
    q: &FrequencyVector,
    opts: &SandwichOptions,
) -> Result<SandwichReport> {
    if q.len() != family.len() || omega.symbols() != family.len() {
        return Err(Error::Shape(format!(
            "family of {} schemes, frequency vector of length {}, sequence over {} symbols",
            family.len(),
            q.len(),
            omega.symbols()
        )));
    }
    if q.rational().is_none() || !q.is_positive() {
        return Err(Error::Domain("Q must be rational with positive entries".into()));
    }
    let p = omega.nominal_frequencies()?;
    let delta = p.delta(q);
    if delta > MAX_SANDWICH_DELTA {
        return Err(Error::Domain(format!(
            "frequency mismatch {delta} exceeds {MAX_SANDWICH_DELTA}"
        )));
    }
    if opts.seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    let word = canonical_word(q)?;
    let (mu, l_q) = PeriodMeasure::optimal(family, &word, &opts.optimizer)?;
    let period = mu.period();
    check_ladder(&opts.depths, period)?;
    let omega_q = mu.sequence();
    let deepest = *opts.depths.last().expect("nonempty");
    let x_len = mu.blocks_for(deepest) * period;
    let coupling = Coupling::new(family, omega, &omega_q, crate::coupling::horizon_for(x_len, &omega_q)?)?;

    let per_seed_samples = opts
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<SandwichSample>> {
            let x = mu.sample_word(x_len / period, seed);
            let x_prof = WordProfile::new(family, &omega_q, &x)?;
            let y = tau_apply(coupling.chi(), &x)?;
            let y_prof = WordProfile::new(family, omega, &y)?;
            opts.depths
                .iter()
                .map(|&n1| {
                    let n2 = aligned_square_depth(&x_prof, n1, period)?;
                    let bounds = image_bounds(coupling.chi(), n1, n2)?;
                    if bounds.s1 > y_prof.len() {
                        return Err(Error::InsufficientDepth(format!(
                            "image word has {} positions, need {}",
                            y_prof.len(),
                            bounds.s1
                        )));
                    }
                    let log_measure = rectangle_measure(&mu, &Rectangle::new(x.clone(), n1, n2)?)?;
                    let ratio = |w: f64| if w == 0.0 { 0.0 } else { log_measure / w };
                    Ok(SandwichSample {
                        seed,
                        n1,
                        n2,
                        r1: bounds.r1,
                        s1: bounds.s1,
                        log_measure,
                        ratio_outer: ratio(y_prof.log_a[bounds.r1]),
                        ratio_inner: ratio(y_prof.log_a[bounds.s1]),
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let k_hat = opts.k_hat.unwrap_or(0.0);
    let lower = l_q * (1.0 - k_hat * delta) - opts.slack;
    let upper = l_q * (1.0 + k_hat * delta) + opts.slack;
    let per_seed: Vec<SeedSummary> = per_seed_samples
        .iter()
        .zip(&opts.seeds)
        .map(|(samples, &seed)| {
            let rs = samples.iter().flat_map(|s| [s.ratio_outer, s.ratio_inner]);
            SeedSummary {
                seed,
                min_ratio: rs.clone().fold(f64::INFINITY, f64::min),
                max_ratio: rs.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    let samples: Vec<SandwichSample> = per_seed_samples.into_iter().flatten().collect();
    let all: Vec<f64> = samples.iter().flat_map(|s| [s.ratio_outer, s.ratio_inner]).collect();
    let min_ratio = all.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SandwichReport {
        q: q.entries().to_vec(),
        period_word: word,
        l_q,
        delta,
        k_hat,
        slack: opts.slack,
        lower,
        upper,
        relative_deviation: all.iter().map(|r| (r / l_q - 1.0).abs()).fold(0.0, f64::max),
        median_ratio: median(&all),
        within_bracket: min_ratio >= lower && max_ratio <= upper,
        min_ratio,
        max_ratio,
        per_seed,
        samples,
    })
}

/// Slope of relative bracket deviation against `delta`, fitted through the
/// origin over several sandwich reports.
pub fn bracket_slope(reports: &[SandwichReport]) -> Result<f64> {
    let sxx: f64 = reports.iter().map(|r| r.delta * r.delta).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all reports have delta = 0".into()));
    }
    let sxy: f64 = reports.iter().map(|r| r.delta * r.relative_deviation).sum();
    Ok(sxy / sxx)
}

//! Frequency vectors, the canonical periodic word `omega(Q)`, and the
//! dimension function `L(Q)` on rational and general frequency vectors.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::optimizer::{maximize_dimension, DimensionReport, OptimizerOptions};
use crate::error::{Error, Result};
use crate::scheme::{compose_word, SchemeFamily};

/// Tolerance on `sum P = 1` for frequency vectors.
pub const FREQUENCY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalForm {
    pub numerators: Vec<u64>,
    pub denominator: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyVector {
    entries: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rational: Option<RationalForm>,
}

impl FrequencyVector {
    /// Exact frequencies `numerators / denominator`, reduced to lowest terms.
    pub fn from_rational(numerators: Vec<u64>, denominator: u64) -> Result<Self> {
        if numerators.is_empty() {
            return Err(Error::InvalidArgument("empty frequency vector".into()));
        }
        let sum: u64 = numerators.iter().sum();
        if denominator == 0 || sum != denominator {
            return Err(Error::InvalidArgument(format!(
                "numerators sum to {sum}, denominator is {denominator}"
            )));
        }
        let g = numerators.iter().fold(denominator, |g, &n| g.gcd(&n));
        let numerators: Vec<u64> = numerators.iter().map(|n| n / g).collect();
        let denominator = denominator / g;
        let entries = numerators.iter().map(|&n| n as f64 / denominator as f64).collect();
        Ok(FrequencyVector {
            entries,
            rational: Some(RationalForm {
                numerators,
                denominator,
            }),
        })
    }

    pub fn from_entries(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty frequency vector".into()));
        }
        if let Some(e) = entries.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
            return Err(Error::InvalidArgument(format!("frequency {e} is not a nonnegative number")));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > FREQUENCY_TOLERANCE {
            return Err(Error::InvalidArgument(format!("frequencies sum to {total}, not 1")));
        }
        Ok(FrequencyVector {
            entries,
            rational: None,
        })
    }

    /// Parses `"1/2,1/2"` (exact) or `"0.618034,0.381966"` (floating).
    /// Decimal entries are renormalized when they miss 1 by less than 1e-6,
    /// so truncated decimal expansions are accepted.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.iter().all(|p| p.contains('/')) {
            let mut fracs = Vec::with_capacity(parts.len());
            for p in &parts {
                let (n, d) = p.split_once('/').expect("checked above");
                let n: u64 = n.trim().parse().map_err(|_| bad_number(p))?;
                let d: u64 = d.trim().parse().map_err(|_| bad_number(p))?;
                if d == 0 {
                    return Err(bad_number(p));
                }
                fracs.push((n, d));
            }
            let lcm = fracs.iter().fold(1u64, |l, &(_, d)| l.lcm(&d));
            let nums = fracs.iter().map(|&(n, d)| n * (lcm / d)).collect();
            return FrequencyVector::from_rational(nums, lcm);
        }
        let mut entries = Vec::with_capacity(parts.len());
        for p in &parts {
            entries.push(p.parse::<f64>().map_err(|_| bad_number(p))?);
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() < 1e-6 && total > 0.0 {
            entries.iter_mut().for_each(|e| *e /= total);
        }
        FrequencyVector::from_entries(entries)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rational(&self) -> Option<&RationalForm> {
        self.rational.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&e| e > 0.0)
    }

    /// `max_k |P_k - Q_k|`.
    pub fn delta(&self, other: &FrequencyVector) -> f64 {
        if let (Some(a), Some(b)) = (&self.rational, &other.rational) {
            if a == b {
                return 0.0;
            }
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest-remainder rounding of `P * d` to integers summing to `d`.
    /// Returns `None` when some numerator would be zero.
    pub fn rational_approximation(&self, d: u64) -> Option<FrequencyVector> {
        if d == 0 {
            return None;
        }
        let scaled: Vec<f64> = self.entries.iter().map(|&p| p * d as f64).collect();
        let mut nums: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
        let assigned: u64 = nums.iter().sum();
        let mut order: Vec<usize> = (0..nums.len()).collect();
        order.sort_by(|&i, &j| {
            let (ri, rj) = (scaled[i] - scaled[i].floor(), scaled[j] - scaled[j].floor());
            rj.total_cmp(&ri).then(i.cmp(&j))
        });
        for &i in order.iter().take(d.saturating_sub(assigned) as usize) {
            nums[i] += 1;
        }
        if nums.iter().sum::<u64>() != d || nums.contains(&0) {
            return None;
        }
        FrequencyVector::from_rational(nums, d).ok()
    }
}

fn bad_number(p: &str) -> Error {
    Error::InvalidArgument(format!("cannot parse frequency entry {p:?}"))
}

/// Balanced interleaving with the composition of `q`: position `t` takes
/// the symbol with the largest deficit `(t + 1) Q_k - count_k` (lowest
/// symbol on ties). Symbols are 1-based.
pub fn canonical_word(q: &FrequencyVector) -> Result<Vec<usize>> {
    let r = q
        .rational()
        .ok_or_else(|| Error::InvalidArgument("canonical word needs a rational frequency vector".into()))?;
    let d = r.denominator as i128;
    let mut counts = vec![0i128; r.numerators.len()];
    let mut word = Vec::with_capacity(r.denominator as usize);
    for t in 0..d {
        let (k, _) = r
            .numerators
            .iter()
            .enumerate()
            .map(|(k, &n)| (k, (t + 1) * n as i128 - counts[k] * d))
            .fold((0, i128::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
        counts[k] += 1;
        word.push(k + 1);
    }
    Ok(word)
}

/// Symbol counts of a word over `m` symbols, as a frequency vector.
pub fn word_composition(word: &[usize], m: usize) -> Result<FrequencyVector> {
    let mut nums = vec![0u64; m];
    for &k in word {
        if k == 0 || k > m {
            return Err(Error::InvalidArgument(format!("symbol {k} outside 1..={m}")));
        }
        nums[k - 1] += 1;
    }
    FrequencyVector::from_rational(nums, word.len() as u64)
}

/// Dimension of the limit set of the periodic sequence `word^infinity`:
/// the maximized functional of the composed period scheme.
pub fn dim_of_word(family: &SchemeFamily, word: &[usize], opts: &OptimizerOptions) -> Result<DimensionReport> {
    let scheme = compose_word(family, word, opts.alphabet_cap)?;
    Ok(maximize_dimension(&scheme, opts))
}

fn check_positive(family: &SchemeFamily, q: &FrequencyVector) -> Result<()> {
    if q.len() != family.len() {
        return Err(Error::Shape(format!(
            "frequency vector has {} entries, family has {} schemes",
            q.len(),
            family.len()
        )));
    }
    if !q.is_positive() {
        return Err(Error::Domain("every scheme must have a positive frequency".into()));
    }
    Ok(())
}

/// `L(Q)` for rational `Q`, evaluated on the canonical period word.
pub fn dim_of_rational_frequency(
    family: &SchemeFamily,
    q: &FrequencyVector,
    opts: &OptimizerOptions,
) -> Result<DimensionReport> {
    check_positive(family, q)?;
    let word = canonical_word(q)?;
    dim_of_word(family, &word, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitTraceEntry {
    pub denominator: u64,
    pub numerators: Vec<u64>,
    pub delta: f64,
    pub value: f64,
    pub optimizer_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStop {
    /// The approximation reproduced `P` exactly.
    Exact,
    /// Successive values differ by less than the tolerance.
    Tolerance,
    /// The next approximation would exceed the alphabet cap.
    AlphabetCap,
    /// The denominator schedule ran out.
    Exhausted,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub value: f64,
    pub trace: Vec<LimitTraceEntry>,
    pub converged: bool,
    pub stop: LimitStop,
}

/// Default denominator schedule when the caller supplies none.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 256;

/// `L(P)` as the limit of `L(Q_d)` along rational approximations with
/// increasing denominators. Denominators giving a zero numerator, or
/// repeating an earlier approximation, are skipped.
pub fn dim_of_frequency_limit(
    family: &SchemeFamily,
    p: &FrequencyVector,
    tol: f64,
    denominators: Option<&[u64]>,
    opts: &OptimizerOptions,
) -> Result<LimitReport> {
    check_positive(family, p)?;
    let schedule: Vec<u64> = match denominators {
        Some(ds) => ds.to_vec(),
        None => (1..=DEFAULT_MAX_DENOMINATOR).collect(),
    };
    let mut trace: Vec<LimitTraceEntry> = Vec::new();
    let mut seen: Vec<RationalForm> = Vec::new();
    let mut stop = LimitStop::Exhausted;
    for d in schedule {
        let Some(q) = p.rational_approximation(d) else {
            continue;
        };
        let rf = q.rational().expect("approximations are rational").clone();
        if seen.contains(&rf) {
            continue;
        }
        let word = canonical_word(&q)?;
        let projected = family.projected_alphabet_size(&word)?;
        if projected > opts.alphabet_cap as u128 {
            stop = LimitStop::AlphabetCap;
            break;
        }
        let report = dim_of_word(family, &word, opts)?;
        let delta = p.delta(&q);
        trace.push(LimitTraceEntry {
            denominator: rf.denominator,
            numerators: rf.numerators.clone(),
            delta,
            value: report.value,
            optimizer_converged: report.converged,
        });
        if delta == 0.0 {
            stop = LimitStop::Exact;
            break;
        }
        if let [.., prev, cur] = trace.as_slice() {
            if (cur.value - prev.value).abs() < tol {
                stop = LimitStop::Tolerance;
                break;
            }
        }
        seen.push(rf);
    }
    let value = trace.last().map(|e| e.value).ok_or_else(|| {
        Error::InvalidArgument("no usable rational approximation within the schedule and cap".into())
    })?;
    Ok(LimitReport {
        value,
        trace,
        converged: matches!(stop, LimitStop::Exact | LimitStop::Tolerance),
        stop,
    })
}

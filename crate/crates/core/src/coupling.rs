//! Symbolic machinery relating two driving sequences with close frequency
//! vectors: rectangles and approximate squares in address space, the
//! n-th-appearance matching of positions, the induced bijection of address
//! spaces, and empirical inclusion exponents.
//!
//! Conventions. A [`Permutation`] built by [`chi_permutation`]`(omega,
//! omega_q, ..)` maps a position `l` of `omega` to the position of `omega_q`
//! holding the same occurrence of the same symbol. The bijection
//! `tau: A_{omega_q} -> A_omega` reads `tau(x)_l = x_{chi(l)}`, so entries
//! travel from `omega_q`-positions to `omega`-positions. A rectangle
//! `R_{n1,n2}` of `A_{omega_q}` fixes positions `1..=n1` fully and
//! `n1+1..=n2` by row; its image fixes the `omega`-positions
//! `D1 = chi^{-1}(1..=n1)` and `D2 = chi^{-1}(n1+1..=n2)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::{Address, SchemeFamily};
use crate::sequences::{epsilon_profile, EpsilonProfile, SymbolSequence};

/// Finite prefix of a point of `A_omega`: one address per position, each
/// valid for the scheme named by the sequence at that position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct AddressWord(pub Vec<Address>);

impl AddressWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entry at 1-based position `l`.
    pub fn at(&self, l: usize) -> Address {
        self.0[l - 1]
    }
}

/// `R_{n1,n2}(base)`: words agreeing with `base` on `(i, j)` up to `n1`
/// and on `i` up to `n2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rectangle {
    pub base: AddressWord,
    pub n1: usize,
    pub n2: usize,
}

impl Rectangle {
    pub fn new(base: AddressWord, n1: usize, n2: usize) -> Result<Self> {
        if n1 > n2 || n2 > base.len() {
            return Err(Error::InvalidArgument(format!(
                "need n1 <= n2 <= word length (n1 = {n1}, n2 = {n2}, length = {})",
                base.len()
            )));
        }
        Ok(Rectangle { base, n1, n2 })
    }
}

/// Cumulative logarithms of the horizontal and vertical ratios along a word.
#[derive(Debug, Clone)]
pub struct WordProfile {
    /// `log_a[n] = sum_{k <= n} log a_{i_k j_k}`, `log_a[0] = 0`.
    pub log_a: Vec<f64>,
    /// `log_b[n] = sum_{k <= n} log b_{i_k}`.
    pub log_b: Vec<f64>,
}

impl WordProfile {
    pub fn new(family: &SchemeFamily, seq: &SymbolSequence, word: &AddressWord) -> Result<Self> {
        let mut log_a = Vec::with_capacity(word.len() + 1);
        let mut log_b = Vec::with_capacity(word.len() + 1);
        log_a.push(0.0);
        log_b.push(0.0);
        let (mut sa, mut sb) = (0.0, 0.0);
        for (idx, addr) in word.0.iter().enumerate() {
            let l = idx + 1;
            let k = seq.symbol_at(l)?;
            let scheme = family.scheme(k)?;
            let (row, cell) = scheme.cell(*addr).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "address ({}, {}) at position {l} is not a cell of scheme {k}",
                    addr.row, addr.cell
                ))
            })?;
            sa += cell.a.ln();
            sb += row.b.ln();
            log_a.push(sa);
            log_b.push(sb);
        }
        Ok(WordProfile { log_a, log_b })
    }

    pub fn len(&self) -> usize {
        self.log_a.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Deepest `n2 >= n1` whose height still dominates the width at `n1`;
    /// `None` when the word ends before the height drops below the width.
    pub fn square_depth(&self, n1: usize) -> Option<usize> {
        let target = self.log_a[n1];
        let slack = 1e-12 * target.abs().max(1.0);
        (n1 + 1..=self.len())
            .find(|&n| self.log_b[n] < target - slack)
            .map(|n| n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extents {
    pub width: f64,
    pub height: f64,
    pub log_width: f64,
    pub log_height: f64,
}

/// Width `d1 = prod_{k <= n1} a` and height `d2 = prod_{k <= n2} b`,
/// accumulated in log-space.
pub fn rectangle_extents(family: &SchemeFamily, seq: &SymbolSequence, rect: &Rectangle) -> Result<Extents> {
    let prefix = AddressWord(rect.base.0[..rect.n2].to_vec());
    let prof = WordProfile::new(family, seq, &prefix)?;
    let log_width = prof.log_a[rect.n1];
    let log_height = prof.log_b[rect.n2];
    Ok(Extents {
        width: log_width.exp(),
        height: log_height.exp(),
        log_width,
        log_height,
    })
}

/// Approximate square of `base` at horizontal depth `n1`: the rectangle
/// `R_{n1,n2}` with `n2` the deepest level whose height is still at least
/// the width, so that `1 <= height / width < 1 / b_min`.
pub fn approximate_square(
    family: &SchemeFamily,
    seq: &SymbolSequence,
    base: &AddressWord,
    n1: usize,
) -> Result<Rectangle> {
    if n1 > base.len() {
        return Err(Error::InsufficientDepth(format!(
            "word of length {} is shorter than n1 = {n1}",
            base.len()
        )));
    }
    let prof = WordProfile::new(family, seq, base)?;
    let n2 = prof.square_depth(n1).ok_or_else(|| {
        Error::InsufficientDepth(format!(
            "word of length {} too short to close the approximate square at n1 = {n1}",
            base.len()
        ))
    })?;
    Rectangle::new(base.clone(), n1, n2)
}

/// Position matching between two sequences over the same symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Permutation {
    /// `forward[l - 1]`: image of position `l`, for `l` in `1..=horizon`.
    forward: Vec<usize>,
    /// `inverse[l' - 1]`: preimage of `l'`, when it lies within the horizon.
    inverse: Vec<Option<usize>>,
}

impl Permutation {
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let max = forward.iter().copied().max().unwrap_or(0);
        let mut inverse = vec![None; max];
        for (i, &img) in forward.iter().enumerate() {
            if img == 0 {
                return Err(Error::InvalidArgument("positions are 1-based".into()));
            }
            if inverse[img - 1].replace(i + 1).is_some() {
                return Err(Error::InvalidArgument(format!("position {img} has two preimages")));
            }
        }
        Ok(Permutation { forward, inverse })
    }

    pub fn identity(horizon: usize) -> Self {
        Permutation::from_forward((1..=horizon).collect()).expect("identity is injective")
    }

    pub fn horizon(&self) -> usize {
        self.forward.len()
    }

    pub fn forward_table(&self) -> &[usize] {
        &self.forward
    }

    pub fn forward(&self, l: usize) -> Option<usize> {
        l.checked_sub(1).and_then(|i| self.forward.get(i)).copied()
    }

    pub fn inverse(&self, l: usize) -> Option<usize> {
        l.checked_sub(1).and_then(|i| self.inverse.get(i)).copied().flatten()
    }

    /// Largest `r` such that every position `1..=r` of the target has a
    /// preimage within the horizon.
    pub fn covered_prefix(&self) -> usize {
        self.inverse.iter().take_while(|x| x.is_some()).count()
    }

    /// The matching in the opposite direction, on the covered prefix.
    pub fn inverted(&self) -> Permutation {
        let forward: Vec<usize> = self.inverse[..self.covered_prefix()]
            .iter()
            .map(|x| x.expect("covered"))
            .collect();
        Permutation::from_forward(forward).expect("inverse of an injection is injective")
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &x)| x == i + 1)
    }
}

/// Matches position `l` of `omega`, holding the n-th occurrence of symbol
/// `k`, with the position of the n-th occurrence of `k` in `omega_q`.
pub fn chi_permutation(omega: &SymbolSequence, omega_q: &SymbolSequence, horizon: usize) -> Result<Permutation> {
    if omega.symbols() != omega_q.symbols() {
        return Err(Error::Shape(format!(
            "sequences over {} and {} symbols",
            omega.symbols(),
            omega_q.symbols()
        )));
    }
    let mut streams: Vec<_> = (1..=omega_q.symbols()).map(|k| omega_q.positions_of(k)).collect();
    let mut forward = Vec::with_capacity(horizon);
    for l in 1..=horizon {
        let k = omega.symbol_at(l)?;
        let img = streams[k - 1].next().ok_or_else(|| {
            Error::Domain(format!(
                "symbol {k} at position {l} has no matching occurrence in the target sequence"
            ))
        })?;
        forward.push(img);
    }
    Permutation::from_forward(forward)
}

/// `tau(x)_l = x_{chi(l)}`: carries a word indexed by target positions to
/// one indexed by source positions. The output is the longest prefix whose
/// entries are all determined by `word`.
pub fn tau_apply(chi: &Permutation, word: &AddressWord) -> Result<AddressWord> {
    if chi.covered_prefix() < word.len() {
        return Err(Error::InsufficientDepth(format!(
            "matching covers {} target positions, word has {}",
            chi.covered_prefix(),
            word.len()
        )));
    }
    let out = chi
        .forward
        .iter()
        .take_while(|&&img| img <= word.len())
        .map(|&img| word.at(img))
        .collect();
    Ok(AddressWord(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ImageBounds {
    pub r1: usize,
    pub r2: usize,
    pub s1: usize,
    pub s2: usize,
}

/// `r1 = inf(N \ D1) - 1`, `r2 = inf(N \ (D1 u D2)) - 1`, `s1 = sup D1`,
/// `s2 = sup(D1 u D2)`, so that `R_{s1,s2}(tau x) c tau(R) c R_{r1,r2}(tau x)`.
pub fn image_bounds(chi: &Permutation, n1: usize, n2: usize) -> Result<ImageBounds> {
    if n1 > n2 {
        return Err(Error::InvalidArgument(format!("n1 = {n1} exceeds n2 = {n2}")));
    }
    if chi.covered_prefix() < n2 {
        return Err(Error::InsufficientDepth(format!(
            "matching covers {} target positions, need {n2}",
            chi.covered_prefix()
        )));
    }
    let preimages = |range: std::ops::RangeInclusive<usize>| -> Vec<usize> {
        range.map(|l| chi.inverse(l).expect("covered")).collect()
    };
    let d1 = preimages(1..=n1);
    let d12 = preimages(1..=n2);
    let leading = |set: &[usize]| -> usize {
        let mut mark = vec![false; set.iter().copied().max().unwrap_or(0) + 1];
        for &x in set {
            mark[x] = true;
        }
        mark.iter().skip(1).take_while(|&&m| m).count()
    };
    Ok(ImageBounds {
        r1: leading(&d1),
        r2: leading(&d12),
        s1: d1.iter().copied().max().unwrap_or(0),
        s2: d12.iter().copied().max().unwrap_or(0),
    })
}

/// Checks the index containments behind the rectangle sandwich:
/// `{1..r1} c D1 c {1..s1}` and `{1..r2} c D1 u D2 c {1..s2}`.
pub fn verify_containment(chi: &Permutation, n1: usize, n2: usize, b: &ImageBounds) -> bool {
    let in_d = |l: usize, depth: usize| chi.forward(l).is_some_and(|img| img <= depth);
    (1..=b.r1).all(|l| in_d(l, n1))
        && (1..=b.r2).all(|l| in_d(l, n2))
        && (1..=n1).all(|l| chi.inverse(l).is_some_and(|x| x <= b.s1))
        && (1..=n2).all(|l| chi.inverse(l).is_some_and(|x| x <= b.s2))
}

/// Width plus height of the smallest rectangle containing both words
/// (compared on their common length).
pub fn symbolic_distance(
    family: &SchemeFamily,
    seq: &SymbolSequence,
    w1: &AddressWord,
    w2: &AddressWord,
) -> Result<f64> {
    let len = w1.len().min(w2.len());
    let n2 = (0..len).take_while(|&i| w1.0[i].row == w2.0[i].row).count();
    let n1 = (0..n2).take_while(|&i| w1.0[i] == w2.0[i]).count();
    let prof = WordProfile::new(family, seq, &AddressWord(w1.0[..n2].to_vec()))?;
    Ok(prof.log_a[n1].exp() + prof.log_b[n2].exp())
}

/// Least-squares fit of `y ~ K x` through the origin.
#[derive(Debug, Clone, Serialize)]
pub struct KFit {
    pub k_hat: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 6;

pub fn fit_k_hat(xs: &[f64], ys: &[f64]) -> Result<KFit> {
    if xs.len() != ys.len() {
        return Err(Error::Shape("regression inputs differ in length".into()));
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_FIT_POINTS} points to fit K, got {}",
            xs.len()
        )));
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all regressors are zero".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let k_hat = sxy / sxx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - k_hat * x).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(KFit {
        k_hat,
        r_squared,
        residuals,
        points: xs.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionPoint {
    pub n1: usize,
    pub n2: usize,
    #[serde(flatten)]
    pub bounds: ImageBounds,
    /// `log d1(R_{r1,r2}(tau x)) / log d1(R)`, at most 1.
    pub e_outer: f64,
    /// `log d1(R_{s1,s2}(tau x)) / log d1(R)`, at least 1.
    pub e_inner: f64,
    pub h_outer: f64,
    pub h_inner: f64,
    /// Vertical depths of the approximate squares at `r1` and `s1` on the
    /// image word.
    pub outer_square_n2: usize,
    pub inner_square_n2: usize,
    /// Appearance deviation `eps(n1)` of both sequences combined.
    pub epsilon: f64,
    pub delta: f64,
    /// `max(|e_outer - 1|, |e_inner - 1|)`.
    pub deviation: f64,
    pub contained: bool,
}

/// Shared state for repeated inclusion measurements between `omega` and
/// `omega_q`.
pub struct Coupling<'a> {
    family: &'a SchemeFamily,
    omega: &'a SymbolSequence,
    omega_q: &'a SymbolSequence,
    chi: Permutation,
    delta: f64,
    eps_omega: Vec<EpsilonProfile>,
    eps_q: Vec<EpsilonProfile>,
}

impl<'a> Coupling<'a> {
    /// Builds the matching on `1..=horizon` and appearance profiles deep
    /// enough for rectangles of that size.
    pub fn new(
        family: &'a SchemeFamily,
        omega: &'a SymbolSequence,
        omega_q: &'a SymbolSequence,
        horizon: usize,
    ) -> Result<Self> {
        if omega.symbols() != family.len() {
            return Err(Error::Shape(format!(
                "sequence over {} symbols, family of {}",
                omega.symbols(),
                family.len()
            )));
        }
        let chi = chi_permutation(omega, omega_q, horizon)?;
        let p = omega.nominal_frequencies()?;
        let q = omega_q.nominal_frequencies()?;
        let delta = p.delta(&q);
        let profiles = |seq: &SymbolSequence, f: &crate::variational::FrequencyVector| -> Result<Vec<EpsilonProfile>> {
            (1..=seq.symbols())
                .filter(|&k| f.entries()[k - 1] > 0.0)
                .map(|k| {
                    let mut n_max = (horizon as f64 * f.entries()[k - 1]).ceil() as usize;
                    if seq.prefix_len().is_some() {
                        n_max = n_max.min(seq.positions_of(k).count());
                    }
                    epsilon_profile(seq, f, k, n_max.max(1))
                })
                .collect()
        };
        let eps_omega = profiles(omega, &p)?;
        let eps_q = profiles(omega_q, &q)?;
        Ok(Coupling {
            family,
            omega,
            omega_q,
            chi,
            delta,
            eps_omega,
            eps_q,
        })
    }

    pub fn chi(&self) -> &Permutation {
        &self.chi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Combined appearance deviation of both sequences at position scale `n`.
    pub fn epsilon_at(&self, n: usize) -> f64 {
        let at = |ps: &[EpsilonProfile]| {
            ps.iter()
                .map(|p| p.envelope_at((n as f64 * p.frequency).ceil() as usize))
                .fold(0.0, f64::max)
        };
        at(&self.eps_omega) + at(&self.eps_q)
    }

    /// Inclusion exponents of the approximate square of `base` (a word of
    /// `A_{omega_q}`) at depth `n1`.
    pub fn inclusion_point(&self, base: &AddressWord, n1: usize) -> Result<InclusionPoint> {
        let x_prof = WordProfile::new(self.family, self.omega_q, base)?;
        let n2 = x_prof.square_depth(n1).ok_or_else(|| {
            Error::InsufficientDepth(format!("base word too short for an approximate square at n1 = {n1}"))
        })?;
        let bounds = image_bounds(&self.chi, n1, n2)?;
        let image = tau_apply(&self.chi, &AddressWord(base.0[..self.chi.covered_prefix().min(base.len())].to_vec()))?;
        if image.len() < bounds.s2 {
            return Err(Error::InsufficientDepth(format!(
                "image word has {} positions, need {}",
                image.len(),
                bounds.s2
            )));
        }
        let y_prof = WordProfile::new(self.family, self.omega, &image)?;
        let ratio = |num: f64, den: f64| if den == 0.0 { 1.0 } else { num / den };
        let e_outer = ratio(y_prof.log_a[bounds.r1], x_prof.log_a[n1]);
        let e_inner = ratio(y_prof.log_a[bounds.s1], x_prof.log_a[n1]);
        let h_outer = ratio(y_prof.log_b[bounds.r2], x_prof.log_b[n2]);
        let h_inner = ratio(y_prof.log_b[bounds.s2], x_prof.log_b[n2]);
        let outer_square_n2 = y_prof.square_depth(bounds.r1).unwrap_or(y_prof.len());
        let inner_square_n2 = y_prof.square_depth(bounds.s1).unwrap_or(y_prof.len());
        Ok(InclusionPoint {
            n1,
            n2,
            bounds,
            e_outer,
            e_inner,
            h_outer,
            h_inner,
            outer_square_n2,
            inner_square_n2,
            epsilon: self.epsilon_at(n1),
            delta: self.delta,
            deviation: (e_outer - 1.0).abs().max((e_inner - 1.0).abs()),
            contained: verify_containment(&self.chi, n1, n2, &bounds),
        })
    }

    pub fn omega(&self) -> &SymbolSequence {
        self.omega
    }

    pub fn omega_q(&self) -> &SymbolSequence {
        self.omega_q
    }
}

/// Matching horizon sufficient for rectangles of a word of `len` target
/// positions when frequencies differ by at most `delta`.
pub fn horizon_for(len: usize, omega_q: &SymbolSequence) -> Result<usize> {
    let q = omega_q.nominal_frequencies()?;
    let min_q = q.entries().iter().copied().filter(|&x| x > 0.0).fold(1.0, f64::min);
    Ok(((len as f64) * (1.0 + 1.0 / min_q)).ceil() as usize + 64)
}

/// Single inclusion measurement at depth `n1`.
pub fn inclusion_exponent_report(
    family: &SchemeFamily,
    omega: &SymbolSequence,
    omega_q: &SymbolSequence,
    base: &AddressWord,
    n1: usize,
) -> Result<InclusionPoint> {
    let coupling = Coupling::new(family, omega, omega_q, horizon_for(base.len(), omega_q)?)?;
    coupling.inclusion_point(base, n1)
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub delta: f64,
    pub points: Vec<InclusionPoint>,
    /// `deviation ~ K (epsilon + delta)`; present with at least six depths
    /// and a nonzero regressor.
    pub fit: Option<KFit>,
}

/// Inclusion measurements over a ladder of depths, with the fitted `K`.
pub fn inclusion_ladder(
    family: &SchemeFamily,
    omega: &SymbolSequence,
    omega_q: &SymbolSequence,
    base: &AddressWord,
    depths: &[usize],
) -> Result<InclusionReport> {
    let coupling = Coupling::new(family, omega, omega_q, horizon_for(base.len(), omega_q)?)?;
    let points = depths
        .iter()
        .map(|&n1| coupling.inclusion_point(base, n1))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.epsilon + p.delta).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.deviation).collect();
    Ok(InclusionReport {
        delta: coupling.delta(),
        fit: fit_k_hat(&xs, &ys).ok(),
        points,
    })
}

/// Address word of the given length with entries drawn uniformly among the
/// cells of the scheme at each position.
pub fn random_address_word(
    family: &SchemeFamily,
    seq: &SymbolSequence,
    len: usize,
    rng: &mut impl rand::Rng,
) -> Result<AddressWord> {
    let mut out = Vec::with_capacity(len);
    for l in 1..=len {
        let scheme = family.scheme(seq.symbol_at(l)?)?;
        let flat = rng.random_range(0..scheme.alphabet_size());
        out.push(scheme.addresses().nth(flat).expect("in range"));
    }
    Ok(AddressWord(out))
}

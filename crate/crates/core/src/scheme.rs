//! Lalley-Gatzouras schemes: validation, composition and the uniform-grid
//! (Bedford-McMullen) constructor.
//!
//! A scheme is a finite family of maps `f_ij(x, y) = (a_ij x + c_ij, b_i y + d_i)`
//! grouped into horizontal rows. Rows share the vertical part `(b_i, d_i)`;
//! cells inside a row carry the horizontal part `(a_ij, c_ij)`. Horizontal
//! contraction is never weaker than vertical (`a_ij <= b_i`), and pieces are
//! ordered left-to-right and bottom-to-top without overlap (touching allowed).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack on the non-strict inequalities, absorbing rounding noise
/// in composed offsets.
pub const VALIDATION_TOLERANCE: f64 = 1e-12;

/// Default cap on the alphabet size of a composed scheme.
pub const DEFAULT_ALPHABET_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineCell {
    pub a: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRow {
    pub b: f64,
    pub d: f64,
    pub cells: Vec<AffineCell>,
}

/// Zero-based `(row, cell)` index of a map inside one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Address {
    pub row: usize,
    pub cell: usize,
}

impl Address {
    pub const fn new(row: usize, cell: usize) -> Self {
        Address { row, cell }
    }
}

/// Unvalidated scheme description, exactly as it appears in scheme files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawScheme {
    pub rows: Vec<SchemeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFamily {
    pub schemes: Vec<RawScheme>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// No rows, or a row without cells.
    Empty,
    /// A parameter is NaN or infinite.
    NonFinite,
    /// `a` outside `(0, 1)`.
    HorizontalContraction,
    /// `b` outside `(0, 1)`.
    VerticalContraction,
    /// `c < 0` or `c + a > 1`.
    HorizontalRange,
    /// `d < 0` or `d + b > 1`.
    VerticalRange,
    /// `b < a`: horizontal contraction weaker than vertical.
    VerticalDominance,
    /// `c_{j+1} < a_j + c_j`: consecutive cells overlap or are out of order.
    CellOrdering,
    /// `d_{i+1} < b_i + d_i`: consecutive rows overlap or are out of order.
    RowOrdering,
}

impl ViolationKind {
    fn describe(self) -> &'static str {
        match self {
            ViolationKind::Empty => "scheme and every row must be nonempty",
            ViolationKind::NonFinite => "parameters must be finite",
            ViolationKind::HorizontalContraction => "horizontal ratio a must lie in (0, 1)",
            ViolationKind::VerticalContraction => "vertical ratio b must lie in (0, 1)",
            ViolationKind::HorizontalRange => "cell must satisfy 0 <= c and c + a <= 1",
            ViolationKind::VerticalRange => "row must satisfy 0 <= d and d + b <= 1",
            ViolationKind::VerticalDominance => {
                "b >= a required: horizontal contraction must not be weaker than vertical"
            }
            ViolationKind::CellOrdering => "cells must be ordered with c[j+1] >= c[j] + a[j]",
            ViolationKind::RowOrdering => "rows must be ordered with d[i+1] >= d[i] + b[i]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub row: Option<usize>,
    pub cell: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.row, self.cell) {
            (Some(r), Some(c)) => write!(f, "row {r}, cell {c}: {}", self.message),
            (Some(r), None) => write!(f, "row {r}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

/// Every violated inequality of a scheme description.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidationErrors(pub Vec<Violation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scheme ({} violation", self.0.len())?;
        if self.0.len() != 1 {
            f.write_str("s")?;
        }
        f.write_str(")")?;
        for v in &self.0 {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, kind: ViolationKind, row: Option<usize>, cell: Option<usize>, detail: String) {
        let message = if detail.is_empty() {
            kind.describe().to_string()
        } else {
            format!("{} ({detail})", kind.describe())
        };
        self.violations.push(Violation {
            kind,
            row,
            cell,
            message,
        });
    }
}

/// Checks every inequality of the scheme definition; returns the validated
/// scheme with its separation flag, or one violation per failed inequality.
pub fn validate_scheme(raw: RawScheme) -> Result<LgScheme, ValidationErrors> {
    let tol = VALIDATION_TOLERANCE;
    let mut ck = Checker {
        violations: Vec::new(),
    };
    if raw.rows.is_empty() {
        ck.push(ViolationKind::Empty, None, None, "no rows".into());
    }
    for (i, row) in raw.rows.iter().enumerate() {
        let r = Some(i);
        if !(row.b.is_finite() && row.d.is_finite()) {
            ck.push(ViolationKind::NonFinite, r, None, String::new());
            continue;
        }
        if !(row.b > 0.0 && row.b < 1.0) {
            ck.push(ViolationKind::VerticalContraction, r, None, format!("b = {}", row.b));
        }
        if row.d < -tol || row.d + row.b > 1.0 + tol {
            ck.push(
                ViolationKind::VerticalRange,
                r,
                None,
                format!("d = {}, d + b = {}", row.d, row.d + row.b),
            );
        }
        if row.cells.is_empty() {
            ck.push(ViolationKind::Empty, r, None, "row has no cells".into());
        }
        for (j, cell) in row.cells.iter().enumerate() {
            let c = Some(j);
            if !(cell.a.is_finite() && cell.c.is_finite()) {
                ck.push(ViolationKind::NonFinite, r, c, String::new());
                continue;
            }
            if !(cell.a > 0.0 && cell.a < 1.0) {
                ck.push(ViolationKind::HorizontalContraction, r, c, format!("a = {}", cell.a));
            }
            if cell.c < -tol || cell.c + cell.a > 1.0 + tol {
                ck.push(
                    ViolationKind::HorizontalRange,
                    r,
                    c,
                    format!("c = {}, c + a = {}", cell.c, cell.c + cell.a),
                );
            }
            if row.b < cell.a - tol {
                ck.push(
                    ViolationKind::VerticalDominance,
                    r,
                    c,
                    format!("b = {} < a = {}", row.b, cell.a),
                );
            }
        }
        for (j, pair) in row.cells.windows(2).enumerate() {
            let end = pair[0].c + pair[0].a;
            if pair[1].c < end - tol {
                ck.push(
                    ViolationKind::CellOrdering,
                    r,
                    Some(j + 1),
                    format!("c[{}] = {} < c[{j}] + a[{j}] = {end}", j + 1, pair[1].c),
                );
            }
        }
    }
    for (i, pair) in raw.rows.windows(2).enumerate() {
        let end = pair[0].d + pair[0].b;
        if pair[1].d < end - tol {
            ck.push(
                ViolationKind::RowOrdering,
                Some(i + 1),
                None,
                format!("d[{}] = {} < d[{i}] + b[{i}] = {end}", i + 1, pair[1].d),
            );
        }
    }
    if !ck.violations.is_empty() {
        return Err(ValidationErrors(ck.violations));
    }
    Ok(LgScheme::from_checked_rows(raw.rows))
}

/// A validated Lalley-Gatzouras scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScheme", into = "RawScheme")]
pub struct LgScheme {
    rows: Vec<SchemeRow>,
    strictly_separated: bool,
}

impl TryFrom<RawScheme> for LgScheme {
    type Error = ValidationErrors;

    fn try_from(raw: RawScheme) -> Result<Self, Self::Error> {
        validate_scheme(raw)
    }
}

impl From<LgScheme> for RawScheme {
    fn from(s: LgScheme) -> Self {
        RawScheme { rows: s.rows }
    }
}

fn strictly_separated(rows: &[SchemeRow]) -> bool {
    let rows_apart = rows
        .windows(2)
        .all(|w| w[1].d > w[0].d + w[0].b + VALIDATION_TOLERANCE);
    let cells_apart = rows.iter().all(|row| {
        row.cells
            .windows(2)
            .all(|w| w[1].c > w[0].c + w[0].a + VALIDATION_TOLERANCE)
    });
    rows_apart && cells_apart
}

impl LgScheme {
    pub fn new(rows: Vec<SchemeRow>) -> Result<Self, ValidationErrors> {
        validate_scheme(RawScheme { rows })
    }

    fn from_checked_rows(rows: Vec<SchemeRow>) -> Self {
        let strictly_separated = strictly_separated(&rows);
        LgScheme {
            rows,
            strictly_separated,
        }
    }

    /// Parses and validates a scheme file body.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScheme =
            serde_json::from_str(text).map_err(|e| Error::json("<scheme>", &e))?;
        Ok(validate_scheme(raw)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawScheme {
            rows: self.rows.clone(),
        })
        .expect("scheme serialization is infallible")
    }

    /// A one-map scheme.
    pub fn single_map(a: f64, c: f64, b: f64, d: f64) -> Result<Self, ValidationErrors> {
        LgScheme::new(vec![SchemeRow {
            b,
            d,
            cells: vec![AffineCell { a, c }],
        }])
    }

    pub fn rows(&self) -> &[SchemeRow] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn strictly_separated(&self) -> bool {
        self.strictly_separated
    }

    /// `|A| = sum_i m_2(i)`.
    pub fn alphabet_size(&self) -> usize {
        self.rows.iter().map(|r| r.cells.len()).sum()
    }

    /// Number of cells in each row.
    pub fn row_lengths(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.cells.len()).collect()
    }

    pub fn cell(&self, addr: Address) -> Option<(&SchemeRow, &AffineCell)> {
        let row = self.rows.get(addr.row)?;
        row.cells.get(addr.cell).map(|c| (row, c))
    }

    pub fn contains(&self, addr: Address) -> bool {
        self.cell(addr).is_some()
    }

    /// Addresses in row-major order; the position in this iterator is the
    /// flat cell index used by weight vectors.
    pub fn addresses(&self) -> impl Iterator<Item = Address> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| (0..r.cells.len()).map(move |j| Address::new(i, j)))
    }

    /// Smallest and largest horizontal ratio over all cells.
    pub fn a_range(&self) -> (f64, f64) {
        self.rows
            .iter()
            .flat_map(|r| r.cells.iter().map(|c| c.a))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a), hi.max(a)))
    }

    /// Smallest and largest vertical ratio over all rows.
    pub fn b_range(&self) -> (f64, f64) {
        self.rows
            .iter()
            .map(|r| r.b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(b), hi.max(b)))
    }
}

/// Composition `F o G` together with the pair of factor addresses behind
/// every result cell (indexed by flat cell index of the result).
pub(crate) struct TrackedComposition {
    pub scheme: LgScheme,
    pub origins: Vec<(Address, Address)>,
}

pub(crate) fn compose_tracked(f: &LgScheme, g: &LgScheme) -> TrackedComposition {
    struct PendingRow {
        row: SchemeRow,
        origins: Vec<(Address, Address)>,
    }
    let mut pending = Vec::with_capacity(f.rows.len() * g.rows.len());
    for (fi, fr) in f.rows.iter().enumerate() {
        for (gi, gr) in g.rows.iter().enumerate() {
            let mut cells = Vec::with_capacity(fr.cells.len() * gr.cells.len());
            for (fj, fc) in fr.cells.iter().enumerate() {
                for (gj, gc) in gr.cells.iter().enumerate() {
                    cells.push((
                        AffineCell {
                            a: fc.a * gc.a,
                            c: fc.c + fc.a * gc.c,
                        },
                        (Address::new(fi, fj), Address::new(gi, gj)),
                    ));
                }
            }
            // Stable: ties (touching pieces) keep pair order.
            cells.sort_by(|x, y| x.0.c.total_cmp(&y.0.c));
            let (cells, origins): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
            pending.push(PendingRow {
                row: SchemeRow {
                    b: fr.b * gr.b,
                    d: fr.d + fr.b * gr.d,
                    cells,
                },
                origins,
            });
        }
    }
    pending.sort_by(|x, y| x.row.d.total_cmp(&y.row.d));
    let mut rows = Vec::with_capacity(pending.len());
    let mut origins = Vec::new();
    for p in pending {
        rows.push(p.row);
        origins.extend(p.origins);
    }
    let scheme = LgScheme::from_checked_rows(rows);
    debug_assert!(validate_scheme(RawScheme {
        rows: scheme.rows.clone()
    })
    .is_ok());
    TrackedComposition { scheme, origins }
}

/// The scheme whose maps are `f o g` for every `f` in `F`, `g` in `G`,
/// brought back into canonical (sorted) form.
pub fn compose(f: &LgScheme, g: &LgScheme) -> LgScheme {
    compose_tracked(f, g).scheme
}

/// An ordered family of schemes `F_1, ..., F_m`; scheme symbols are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily", into = "RawFamily")]
pub struct SchemeFamily {
    schemes: Vec<LgScheme>,
}

impl TryFrom<RawFamily> for SchemeFamily {
    type Error = ValidationErrors;

    fn try_from(raw: RawFamily) -> Result<Self, Self::Error> {
        validate_family(raw)
    }
}

impl From<SchemeFamily> for RawFamily {
    fn from(f: SchemeFamily) -> Self {
        RawFamily {
            schemes: f.schemes.into_iter().map(RawScheme::from).collect(),
        }
    }
}

/// Validates every member; violations are reported with the member index
/// prefixed to the message.
pub fn validate_family(raw: RawFamily) -> Result<SchemeFamily, ValidationErrors> {
    if raw.schemes.is_empty() {
        return Err(ValidationErrors(vec![Violation {
            kind: ViolationKind::Empty,
            row: None,
            cell: None,
            message: "family has no schemes".into(),
        }]));
    }
    let mut schemes = Vec::with_capacity(raw.schemes.len());
    let mut all = Vec::new();
    for (k, s) in raw.schemes.into_iter().enumerate() {
        match validate_scheme(s) {
            Ok(s) => schemes.push(s),
            Err(ValidationErrors(vs)) => all.extend(vs.into_iter().map(|mut v| {
                v.message = format!("scheme {}: {}", k + 1, v.message);
                v
            })),
        }
    }
    if all.is_empty() {
        Ok(SchemeFamily { schemes })
    } else {
        Err(ValidationErrors(all))
    }
}

impl SchemeFamily {
    pub fn new(schemes: Vec<LgScheme>) -> Result<Self> {
        if schemes.is_empty() {
            return Err(Error::InvalidArgument("family has no schemes".into()));
        }
        Ok(SchemeFamily { schemes })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawFamily = serde_json::from_str(text).map_err(|e| Error::json("<family>", &e))?;
        Ok(validate_family(raw)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawFamily::from(self.clone())).expect("family serialization is infallible")
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }

    pub fn schemes(&self) -> &[LgScheme] {
        &self.schemes
    }

    /// Scheme for the 1-based symbol `k`.
    pub fn get(&self, k: usize) -> Option<&LgScheme> {
        k.checked_sub(1).and_then(|i| self.schemes.get(i))
    }

    pub(crate) fn scheme(&self, k: usize) -> Result<&LgScheme> {
        self.get(k).ok_or_else(|| {
            Error::InvalidArgument(format!("symbol {k} outside 1..={}", self.schemes.len()))
        })
    }

    /// `prod_l |A_{w_l}|` without overflow.
    pub fn projected_alphabet_size(&self, word: &[usize]) -> Result<u128> {
        word.iter().try_fold(1u128, |acc, &k| {
            Ok(acc.saturating_mul(self.scheme(k)?.alphabet_size() as u128))
        })
    }
}

/// A composed period scheme together with the per-position addresses of
/// every composed cell.
#[derive(Debug, Clone)]
pub struct WordScheme {
    pub word: Vec<usize>,
    pub scheme: LgScheme,
    /// `origins[flat]` holds one address per word position.
    pub origins: Vec<Vec<Address>>,
}

pub fn compose_word_tracked(family: &SchemeFamily, word: &[usize], cap: usize) -> Result<WordScheme> {
    if word.is_empty() {
        return Err(Error::InvalidArgument("word must be nonempty".into()));
    }
    let projected = family.projected_alphabet_size(word)?;
    if projected > cap as u128 {
        return Err(Error::CapExceeded { projected, cap });
    }
    let first = family.scheme(word[0])?;
    let mut scheme = first.clone();
    let mut origins: Vec<Vec<Address>> = first.addresses().map(|a| vec![a]).collect();
    for &k in &word[1..] {
        let next = family.scheme(k)?;
        let step = compose_tracked(&scheme, next);
        let flat: std::collections::HashMap<Address, usize> =
            scheme.addresses().enumerate().map(|(i, a)| (a, i)).collect();
        origins = step
            .origins
            .iter()
            .map(|(fa, ga)| {
                let mut o = origins[flat[fa]].clone();
                o.push(*ga);
                o
            })
            .collect();
        scheme = step.scheme;
    }
    Ok(WordScheme {
        word: word.to_vec(),
        scheme,
        origins,
    })
}

/// Left-to-right fold of [`compose`] over the schemes named by `word`
/// (1-based symbols).
pub fn compose_word(family: &SchemeFamily, word: &[usize], cap: usize) -> Result<LgScheme> {
    if word.is_empty() {
        return Err(Error::InvalidArgument("word must be nonempty".into()));
    }
    let projected = family.projected_alphabet_size(word)?;
    if projected > cap as u128 {
        return Err(Error::CapExceeded { projected, cap });
    }
    let mut acc = family.scheme(word[0])?.clone();
    for &k in &word[1..] {
        acc = compose(&acc, family.scheme(k)?);
    }
    Ok(acc)
}

/// Uniform-grid carpet: `n` columns, `m` rows, keep the chosen
/// `(row, column)` cells. Empty grid rows are dropped.
pub fn bedford_mcmullen(n: usize, m: usize, chosen: &[(usize, usize)]) -> Result<LgScheme> {
    if m == 0 || n < m {
        return Err(Error::InvalidArgument(format!(
            "need n >= m >= 1 so that 1/n <= 1/m (got n = {n}, m = {m})"
        )));
    }
    if chosen.is_empty() {
        return Err(Error::InvalidArgument("empty cell selection".into()));
    }
    let set: BTreeSet<(usize, usize)> = chosen.iter().copied().collect();
    if let Some(&(r, c)) = set.iter().find(|&&(r, c)| r >= m || c >= n) {
        return Err(Error::InvalidArgument(format!(
            "cell ({r}, {c}) outside the {m} x {n} grid"
        )));
    }
    let (nf, mf) = (n as f64, m as f64);
    let mut rows: Vec<SchemeRow> = Vec::new();
    for r in 0..m {
        let cells: Vec<AffineCell> = set
            .range((r, 0)..(r + 1, 0))
            .map(|&(_, col)| AffineCell {
                a: 1.0 / nf,
                c: col as f64 / nf,
            })
            .collect();
        if !cells.is_empty() {
            rows.push(SchemeRow {
                b: 1.0 / mf,
                d: r as f64 / mf,
                cells,
            });
        }
    }
    Ok(LgScheme::new(rows)?)
}

/// Number of chosen cells in each nonempty row of a uniform-grid carpet.
pub fn row_counts(chosen: &[(usize, usize)]) -> Vec<usize> {
    let set: BTreeSet<(usize, usize)> = chosen.iter().copied().collect();
    let mut counts = std::collections::BTreeMap::new();
    for (r, _) in set {
        *counts.entry(r).or_insert(0usize) += 1;
    }
    counts.into_values().collect()
}

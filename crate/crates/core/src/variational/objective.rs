use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scheme::{Address, LgScheme};

/// Tolerance on `sum p = 1` for weight vectors.
pub const SIMPLEX_TOLERANCE: f64 = 1e-10;

/// A probability vector over a scheme's cells, stored flat in row-major
/// cell order (see [`LgScheme::addresses`]).
#[derive(Debug, Clone, PartialEq)]
pub struct CellWeights {
    weights: Vec<f64>,
    row_lengths: Vec<usize>,
}

impl CellWeights {
    pub fn new(weights: Vec<f64>, row_lengths: Vec<usize>) -> Result<Self> {
        let expected: usize = row_lengths.iter().sum();
        if weights.len() != expected {
            return Err(Error::Shape(format!(
                "{} weights for {} cells",
                weights.len(),
                expected
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!("weight {i} = {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        Ok(CellWeights {
            weights,
            row_lengths,
        })
    }

    pub fn for_scheme(scheme: &LgScheme, weights: Vec<f64>) -> Result<Self> {
        CellWeights::new(weights, scheme.row_lengths())
    }

    pub fn uniform(scheme: &LgScheme) -> Self {
        let n = scheme.alphabet_size();
        CellWeights {
            weights: vec![1.0 / n as f64; n],
            row_lengths: scheme.row_lengths(),
        }
    }

    /// Nested per-row weights, e.g. as read from a JSON document.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let row_lengths = rows.iter().map(Vec::len).collect();
        CellWeights::new(rows.into_iter().flatten().collect(), row_lengths)
    }

    /// Weight vector built without the simplex check; callers guarantee it.
    pub(crate) fn from_parts_unchecked(weights: Vec<f64>, row_lengths: Vec<usize>) -> Self {
        CellWeights {
            weights,
            row_lengths,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn row_lengths(&self) -> &[usize] {
        &self.row_lengths
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn matches(&self, scheme: &LgScheme) -> bool {
        self.row_lengths.len() == scheme.row_count()
            && self
                .row_lengths
                .iter()
                .zip(scheme.rows())
                .all(|(n, r)| *n == r.cells.len())
    }

    pub fn get(&self, addr: Address) -> Option<f64> {
        if addr.row >= self.row_lengths.len() || addr.cell >= self.row_lengths[addr.row] {
            return None;
        }
        let offset: usize = self.row_lengths[..addr.row].iter().sum();
        Some(self.weights[offset + addr.cell])
    }

    /// `q_i = sum_j p_ij`.
    pub fn row_marginals(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.row_lengths.len());
        let mut offset = 0;
        for &len in &self.row_lengths {
            out.push(self.weights[offset..offset + len].iter().sum());
            offset += len;
        }
        out
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.row_lengths.len());
        let mut offset = 0;
        for &len in &self.row_lengths {
            out.push(self.weights[offset..offset + len].to_vec());
            offset += len;
        }
        out
    }
}

impl Serialize for CellWeights {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CellWeights", 2)?;
        st.serialize_field("rows", &self.rows())?;
        st.serialize_field("row_marginals", &self.row_marginals())?;
        st.end()
    }
}

#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Flat log-tables of a scheme, shared by the objective, its gradient and
/// the optimizer inner loop.
#[derive(Debug, Clone)]
pub(crate) struct LogTable {
    pub log_a: Vec<f64>,
    pub row_of: Vec<usize>,
    pub log_b: Vec<f64>,
}

/// Partial sums entering the objective.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sums {
    /// `sum p log p`
    pub ent: f64,
    /// `sum p log a`
    pub la: f64,
    /// `sum q log q`
    pub ent_q: f64,
    /// `sum q log b`
    pub lb: f64,
}

impl Sums {
    pub fn value(&self) -> f64 {
        self.ent / self.la + self.ent_q * (1.0 / self.lb - 1.0 / self.la)
    }
}

impl LogTable {
    pub fn new(scheme: &LgScheme) -> Self {
        let mut log_a = Vec::with_capacity(scheme.alphabet_size());
        let mut row_of = Vec::with_capacity(scheme.alphabet_size());
        for (i, row) in scheme.rows().iter().enumerate() {
            for cell in &row.cells {
                log_a.push(cell.a.ln());
                row_of.push(i);
            }
        }
        LogTable {
            log_a,
            row_of,
            log_b: scheme.rows().iter().map(|r| r.b.ln()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.log_a.len()
    }

    pub fn marginals_into(&self, p: &[f64], q: &mut [f64]) {
        q.iter_mut().for_each(|x| *x = 0.0);
        for (pi, &r) in p.iter().zip(&self.row_of) {
            q[r] += pi;
        }
    }

    pub fn sums(&self, p: &[f64], q: &mut [f64]) -> Sums {
        self.marginals_into(p, q);
        let mut ent = 0.0;
        let mut la = 0.0;
        for (pi, lai) in p.iter().zip(&self.log_a) {
            ent += xlogx(*pi);
            la += pi * lai;
        }
        let mut ent_q = 0.0;
        let mut lb = 0.0;
        for (qi, lbi) in q.iter().zip(&self.log_b) {
            ent_q += xlogx(*qi);
            lb += qi * lbi;
        }
        Sums { ent, la, ent_q, lb }
    }

    pub fn value(&self, p: &[f64], q: &mut [f64]) -> f64 {
        self.sums(p, q).value()
    }

    /// Gradient at an interior point; `q` must hold the marginals of `p`.
    pub fn gradient_into(&self, p: &[f64], q: &[f64], s: &Sums, out: &mut [f64]) {
        let inv_a = 1.0 / s.la;
        let inv_b = 1.0 / s.lb;
        let cross = inv_b - inv_a;
        let ent_a2 = s.ent * inv_a * inv_a;
        let entq_b2 = s.ent_q * inv_b * inv_b;
        let entq_a2 = s.ent_q * inv_a * inv_a;
        for (k, g) in out.iter_mut().enumerate() {
            let r = self.row_of[k];
            let la = self.log_a[k];
            *g = (p[k].ln() + 1.0) * inv_a - ent_a2 * la + (q[r].ln() + 1.0) * cross - entq_b2 * self.log_b[r]
                + entq_a2 * la;
        }
    }
}

fn check_shape(scheme: &LgScheme, p: &CellWeights) -> Result<()> {
    if p.matches(scheme) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "weights have row lengths {:?}, scheme has {:?}",
            p.row_lengths(),
            scheme.row_lengths()
        )))
    }
}

/// Dimension functional
/// `D(p) = (sum p log p)/(sum p log a) + (sum q log q)(1/(sum q log b) - 1/(sum p log a))`
/// with natural logarithms and `0 log 0 = 0`.
pub fn lg_objective(scheme: &LgScheme, p: &CellWeights) -> Result<f64> {
    check_shape(scheme, p)?;
    let table = LogTable::new(scheme);
    let mut q = vec![0.0; scheme.row_count()];
    Ok(table.value(p.as_slice(), &mut q))
}

/// Partial derivatives `dD/dp_ij` in flat cell order. Defined only in the
/// open simplex: every weight must lie strictly between 0 and 1.
pub fn lg_gradient(scheme: &LgScheme, p: &CellWeights) -> Result<Vec<f64>> {
    check_shape(scheme, p)?;
    if let Some((i, w)) = p
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w > 0.0 && **w < 1.0))
    {
        return Err(Error::Domain(format!(
            "gradient needs an interior point; weight {i} = {w} is on the boundary"
        )));
    }
    let table = LogTable::new(scheme);
    let mut q = vec![0.0; scheme.row_count()];
    let s = table.sums(p.as_slice(), &mut q);
    let mut g = vec![0.0; table.len()];
    table.gradient_into(p.as_slice(), &q, &s, &mut g);
    Ok(g)
}

/// Euclidean norm of the projection onto the simplex tangent space
/// `{v : sum v = 0}`.
pub fn tangent_norm(g: &[f64]) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>().sqrt()
}

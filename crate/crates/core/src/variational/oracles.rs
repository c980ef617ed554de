//! Independent checks on [`maximize_dimension`](super::maximize_dimension):
//! brute-force lattice search and the uniform-grid closed form.

use super::objective::LogTable;
use crate::error::{Error, Result};
use crate::scheme::LgScheme;

/// Largest alphabet the lattice search accepts.
pub const GRID_ORACLE_MAX_ALPHABET: usize = 4;

const REFINEMENT_PASSES: usize = 3;

fn for_each_composition(parts: usize, total: usize, buf: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        buf.push(total);
        visit(buf);
        buf.pop();
        return;
    }
    for k in 0..=total {
        buf.push(k);
        for_each_composition(parts - 1, total - k, buf, visit);
        buf.pop();
    }
}

/// Maximum of the dimension functional over the lattice `{k / G}` of the
/// simplex, followed by three local passes that halve the step around the
/// incumbent. Every evaluated point lies on the simplex, so the result is a
/// lower bound on the true maximum.
pub fn grid_search_oracle(scheme: &LgScheme, resolution: usize) -> Result<f64> {
    let n = scheme.alphabet_size();
    if n > GRID_ORACLE_MAX_ALPHABET {
        return Err(Error::InvalidArgument(format!(
            "grid search supports alphabets of at most {GRID_ORACLE_MAX_ALPHABET} cells, got {n}"
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let table = LogTable::new(scheme);
    let mut q = vec![0.0; scheme.row_count()];
    let mut p = vec![0.0; n];
    let g = resolution as f64;

    let mut best = f64::NEG_INFINITY;
    let mut best_p = vec![0.0; n];
    for_each_composition(n, resolution, &mut Vec::with_capacity(n), &mut |ks| {
        for (pi, k) in p.iter_mut().zip(ks) {
            *pi = *k as f64 / g;
        }
        let v = table.value(&p, &mut q);
        if v > best {
            best = v;
            best_p.copy_from_slice(&p);
        }
    });

    let mut step = 1.0 / g;
    for _ in 0..REFINEMENT_PASSES {
        step *= 0.5;
        let center = best_p.clone();
        // Offsets in {-2, ..., 2} * step on the first n-1 coordinates; the
        // last coordinate closes the simplex.
        let free = n - 1;
        let combos = 5usize.pow(free as u32);
        for code in 0..combos {
            let mut c = code;
            let mut rest = 1.0;
            for (i, pi) in p.iter_mut().take(free).enumerate() {
                let off = (c % 5) as f64 - 2.0;
                c /= 5;
                *pi = center[i] + off * step;
                rest -= *pi;
            }
            p[free] = rest;
            if p.iter().any(|&x| x < 0.0) {
                continue;
            }
            let v = table.value(&p, &mut q);
            if v > best {
                best = v;
                best_p.copy_from_slice(&p);
            }
        }
    }
    Ok(best)
}

/// Closed form for uniform-grid carpets with `n` columns, `m` rows and
/// `t_j` chosen cells in each nonempty row: `log_m sum_j t_j^{log_n m}`.
pub fn mcmullen_oracle(n: usize, m: usize, row_counts: &[usize]) -> Result<f64> {
    if m < 2 || n < m {
        return Err(Error::InvalidArgument(format!(
            "need n >= m >= 2 (got n = {n}, m = {m})"
        )));
    }
    if row_counts.is_empty() || row_counts.len() > m {
        return Err(Error::InvalidArgument(format!(
            "need between 1 and {m} row counts, got {}",
            row_counts.len()
        )));
    }
    if let Some(t) = row_counts.iter().find(|&&t| t == 0 || t > n) {
        return Err(Error::InvalidArgument(format!("row count {t} outside 1..={n}")));
    }
    let theta = (m as f64).ln() / (n as f64).ln();
    let total: f64 = row_counts.iter().map(|&t| (t as f64).powf(theta)).sum();
    Ok(total.ln() / (m as f64).ln())
}

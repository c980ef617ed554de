//! Exponentiated-gradient (entropic mirror) ascent of the dimension
//! functional over the probability simplex.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{tangent_norm, CellWeights, LogTable};
use crate::scheme::{LgScheme, DEFAULT_ALPHABET_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub tol_obj: f64,
    pub tol_grad: f64,
    pub alphabet_cap: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            restarts: 8,
            max_iters: 10_000,
            seed: 0,
            tol_obj: 1e-12,
            tol_grad: 1e-8,
            alphabet_cap: DEFAULT_ALPHABET_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub value: f64,
    pub argmax: CellWeights,
    pub restarts_used: usize,
    /// Iterations spent by the restart that produced `value`.
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

struct Run {
    p: Vec<f64>,
    value: f64,
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
}

/// Smallest weight kept during ascent; the multiplicative update never
/// reaches the boundary, this only guards against underflow.
const WEIGHT_FLOOR: f64 = f64::MIN_POSITIVE;
const MIN_STEP: f64 = 1e-18;
const MAX_STEP: f64 = 1e8;

fn ascend(table: &LogTable, start: Vec<f64>, opts: &OptimizerOptions) -> Run {
    let n = table.len();
    let rows = table.log_b.len();
    let mut p = start;
    let mut q = vec![0.0; rows];
    let mut g = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let mut cand_q = vec![0.0; rows];
    let mut cand_g = vec![0.0; n];

    let sums = table.sums(&p, &mut q);
    let mut f = sums.value();
    table.gradient_into(&p, &q, &sums, &mut g);
    let mut gradient_norm = tangent_norm(&g);
    let mut step = 1.0;
    let mut improvement = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if gradient_norm < opts.tol_grad && improvement < opts.tol_obj {
            converged = true;
            break;
        }
        iterations += 1;
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Rounding noise of the objective. Inside it, objective comparisons
        // carry no information and a step is judged by the gradient instead.
        let noise = 16.0 * f64::EPSILON * f.abs().max(1.0);
        let accepted = loop {
            let mut total = 0.0;
            for ((c, pi), gi) in cand.iter_mut().zip(&p).zip(&g) {
                *c = pi * (step * (gi - gmax)).exp();
                total += *c;
            }
            for c in cand.iter_mut() {
                *c = (*c / total).max(WEIGHT_FLOOR);
            }
            let s = table.sums(&cand, &mut cand_q);
            let fc = s.value();
            if fc.is_finite() && fc >= f - noise {
                table.gradient_into(&cand, &cand_q, &s, &mut cand_g);
                let cand_norm = tangent_norm(&cand_g);
                if fc > f + noise || cand_norm < gradient_norm {
                    break Some((fc, cand_norm));
                }
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((fc, cand_norm)) = accepted else {
            converged = gradient_norm < opts.tol_grad;
            break;
        };
        improvement = fc - f;
        std::mem::swap(&mut p, &mut cand);
        std::mem::swap(&mut q, &mut cand_q);
        std::mem::swap(&mut g, &mut cand_g);
        f = fc;
        gradient_norm = cand_norm;
        step = (step * 2.0).min(MAX_STEP);
    }
    if !converged && iterations == opts.max_iters {
        converged = gradient_norm < opts.tol_grad && improvement < opts.tol_obj;
    }
    Run {
        p,
        value: f,
        iterations,
        gradient_norm,
        converged,
    }
}

/// Starting point of restart `r`: uniform for `r = 0`, otherwise a
/// symmetric Dirichlet(1) draw from the stream `(seed, r)`.
fn start_point(n: usize, seed: u64, r: usize) -> Vec<f64> {
    if r == 0 {
        return vec![1.0 / n as f64; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let mut p: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x = (*x / total).max(1e-300));
    p
}

/// Maximizes the dimension functional over all weight vectors on the
/// scheme's alphabet. Non-convergence is reported through the flags; the
/// best iterate is returned regardless.
pub fn maximize_dimension(scheme: &LgScheme, opts: &OptimizerOptions) -> DimensionReport {
    let n = scheme.alphabet_size();
    if n == 1 {
        return DimensionReport {
            value: 0.0,
            argmax: CellWeights::uniform(scheme),
            restarts_used: 1,
            iterations: 0,
            gradient_norm: 0.0,
            converged: true,
        };
    }
    let table = LogTable::new(scheme);
    let restarts = opts.restarts.max(1);
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| ascend(&table, start_point(n, opts.seed, r), opts))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.value > best.value { run } else { best })
        .expect("at least one restart");
    let mut q = vec![0.0; scheme.row_count()];
    let value = table.value(&best.p, &mut q);
    DimensionReport {
        value,
        argmax: CellWeights::from_parts_unchecked(best.p, scheme.row_lengths()),
        restarts_used: restarts,
        iterations: best.iterations,
        gradient_norm: best.gradient_norm,
        converged: best.converged,
    }
}

#![allow(dead_code)]

use lgdim::scheme::{bedford_mcmullen, AffineCell, LgScheme, SchemeFamily, SchemeRow};
use rand::Rng;

/// Random valid scheme with at most `max_cells` cells, strictly separated.
pub fn random_scheme(rng: &mut impl Rng, max_cells: usize) -> LgScheme {
    let rows = rng.random_range(1..=max_cells.min(3));
    let mut counts = vec![1usize; rows];
    for _ in 0..rng.random_range(0..=max_cells - rows) {
        counts[rng.random_range(0..rows)] += 1;
    }
    let heights: Vec<f64> = (0..rows).map(|_| rng.random_range(0.3..1.0) * 0.9 / rows as f64).collect();
    let offsets = spread(rng, &heights);
    let rows = heights
        .iter()
        .zip(offsets)
        .zip(&counts)
        .map(|((&b, d), &n)| {
            let widths: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.0) * b.min(0.9 / n as f64)).collect();
            let cs = spread(rng, &widths);
            SchemeRow {
                b,
                d,
                cells: widths.iter().zip(cs).map(|(&a, c)| AffineCell { a, c }).collect(),
            }
        })
        .collect();
    LgScheme::new(rows).expect("generator produces valid schemes")
}

/// Left offsets placing intervals of the given lengths in order inside
/// [0, 1] with random positive gaps.
fn spread(rng: &mut impl Rng, lengths: &[f64]) -> Vec<f64> {
    let free = 1.0 - lengths.iter().sum::<f64>();
    let gaps: Vec<f64> = (0..=lengths.len()).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = gaps.iter().sum();
    let mut at = 0.0;
    lengths
        .iter()
        .zip(&gaps)
        .map(|(len, g)| {
            at += g / total * free * 0.99;
            let start = at;
            at += len;
            start
        })
        .collect()
}

/// Uniform-grid carpet description: columns, rows, chosen `(row, col)`.
pub struct Carpet {
    pub n: usize,
    pub m: usize,
    pub chosen: Vec<(usize, usize)>,
}

impl Carpet {
    pub fn new(n: usize, m: usize, chosen: &[(usize, usize)]) -> Self {
        Carpet { n, m, chosen: chosen.to_vec() }
    }

    pub fn scheme(&self) -> LgScheme {
        bedford_mcmullen(self.n, self.m, &self.chosen).unwrap()
    }

    fn row_counts(&self) -> Vec<usize> {
        lgdim::scheme::row_counts(&self.chosen)
    }
}

/// Closed form of `L(Q)` for a family of uniform-grid carpets: any period
/// composition is again a uniform-grid carpet, so the classical formula
/// applies to products of grid sizes and row counts.
pub fn carpet_family_dimension(carpets: &[Carpet], q: &[f64]) -> f64 {
    let ln_m: f64 = carpets.iter().zip(q).map(|(c, w)| w * (c.m as f64).ln()).sum();
    let ln_n: f64 = carpets.iter().zip(q).map(|(c, w)| w * (c.n as f64).ln()).sum();
    let theta = ln_m / ln_n;
    let num: f64 = carpets
        .iter()
        .zip(q)
        .map(|(c, w)| w * c.row_counts().iter().map(|&t| (t as f64).powf(theta)).sum::<f64>().ln())
        .sum();
    num / ln_m
}

/// Two carpets with different row-count profiles.
pub fn two_carpets() -> Vec<Carpet> {
    vec![
        Carpet::new(3, 2, &[(0, 0), (0, 2), (1, 1)]),
        Carpet::new(2, 2, &[(0, 0), (1, 1)]),
    ]
}

pub fn family_of(carpets: &[Carpet]) -> SchemeFamily {
    SchemeFamily::new(carpets.iter().map(Carpet::scheme).collect()).unwrap()
}

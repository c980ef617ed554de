//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! process exits nonzero if any fails.

mod common;

use std::time::Instant;

use common::{carpet_family_dimension, family_of, random_scheme, two_carpets, Carpet};
use lgdim::attractor::{box_count_estimate, generate_points, GenerationMode};
use lgdim::coupling::{
    chi_permutation, fit_k_hat, horizon_for, random_address_word, tau_apply, AddressWord, Coupling,
};
use lgdim::measures::{local_dimension_summary, sandwich_check, PeriodMeasure, SandwichOptions};
use lgdim::scheme::{bedford_mcmullen, compose, LgScheme, SchemeFamily};
use lgdim::sequences::SymbolSequence;
use lgdim::variational::{
    canonical_word, dim_of_rational_frequency, dim_of_word, grid_search_oracle, lg_gradient,
    maximize_dimension, mcmullen_oracle, CellWeights, FrequencyVector, OptimizerOptions,
    GRID_ORACLE_MAX_ALPHABET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn opts() -> OptimizerOptions {
    OptimizerOptions::default()
}

fn oracle_agreement() -> Outcome {
    let fixtures = [
        Carpet::new(2, 2, &[(0, 0), (1, 1)]),
        Carpet::new(2, 2, &[(0, 0), (0, 1), (1, 1)]),
        Carpet::new(3, 2, &[(0, 0), (0, 2), (1, 1)]),
        Carpet::new(3, 2, &[(0, 0), (0, 1), (0, 2), (1, 1)]),
        Carpet::new(3, 2, &[(0, 1), (1, 0), (1, 2)]),
        Carpet::new(3, 3, &[(0, 0), (0, 2), (1, 1), (2, 2)]),
        Carpet::new(3, 3, &[(0, 0), (0, 1), (1, 2), (2, 0), (2, 1), (2, 2)]),
        Carpet::new(4, 2, &[(0, 0), (0, 3), (1, 1), (1, 2), (1, 3)]),
        Carpet::new(4, 3, &[(0, 0), (1, 2), (2, 1), (2, 3)]),
        Carpet::new(4, 3, &[(0, 0), (0, 1), (0, 2), (1, 3), (2, 0), (2, 2)]),
    ];
    let mut worst_closed: f64 = 0.0;
    let mut worst_grid: f64 = 0.0;
    for c in &fixtures {
        let s = c.scheme();
        let got = maximize_dimension(&s, &opts()).value;
        let exact = mcmullen_oracle(c.n, c.m, &lgdim::scheme::row_counts(&c.chosen)).map_err(|e| e.to_string())?;
        worst_closed = worst_closed.max((got - exact).abs());
        ensure((got - exact).abs() <= 1e-4, || format!("{}x{} carpet: {got} vs closed form {exact}", c.n, c.m))?;
        if s.alphabet_size() <= GRID_ORACLE_MAX_ALPHABET {
            let grid = grid_search_oracle(&s, 120).map_err(|e| e.to_string())?;
            worst_grid = worst_grid.max((got - grid).abs());
            ensure((got - grid).abs() <= 2e-4, || format!("{}x{} carpet: {got} vs grid {grid}", c.n, c.m))?;
        }
    }
    Ok(format!("max |diff| closed form {worst_closed:.2e}, grid {worst_grid:.2e}"))
}

fn exact_cases() -> Outcome {
    let full = maximize_dimension(&bedford_mcmullen(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap(), &opts()).value;
    ensure((full - 2.0).abs() <= 1e-9, || format!("full square {full}"))?;
    let single = maximize_dimension(&LgScheme::single_map(0.3, 0.1, 0.6, 0.2).unwrap(), &opts()).value;
    ensure(single == 0.0, || format!("single map {single}"))?;
    let diag = maximize_dimension(&bedford_mcmullen(2, 2, &[(0, 0), (1, 1)]).unwrap(), &opts()).value;
    ensure((diag - 1.0).abs() <= 1e-6, || format!("diagonal {diag}"))?;
    Ok(format!("full {full}, single {single}, diagonal {diag}"))
}

fn order_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_pair: f64 = 0.0;
    let mut worst_triple: f64 = 0.0;
    for i in 0..20 {
        let fam = SchemeFamily::new(vec![random_scheme(&mut rng, 4), random_scheme(&mut rng, 4)]).unwrap();
        let dim = |w: &[usize]| dim_of_word(&fam, w, &opts()).map(|r| r.value).map_err(|e| e.to_string());
        let (a, b) = (dim(&[1, 2])?, dim(&[2, 1])?);
        worst_pair = worst_pair.max((a - b).abs());
        ensure((a - b).abs() <= 1e-6, || format!("family {i}: [1,2] {a} vs [2,1] {b}"))?;
        let t = [dim(&[1, 1, 2])?, dim(&[1, 2, 1])?, dim(&[2, 1, 1])?];
        let spread = t.iter().copied().fold(f64::NEG_INFINITY, f64::max) - t.iter().copied().fold(f64::INFINITY, f64::min);
        worst_triple = worst_triple.max(spread);
        ensure(spread <= 1e-5, || format!("family {i}: composition (2,1) words {t:?}"))?;
    }
    Ok(format!("max spread two-letter {worst_pair:.2e}, three-letter {worst_triple:.2e}"))
}

fn golden() -> FrequencyVector {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    FrequencyVector::from_entries(vec![phi - 1.0, 2.0 - phi]).unwrap()
}

fn continuity_trace(k_hat: Option<f64>) -> Outcome {
    let k_hat = k_hat.ok_or("no fitted K from the inclusion-exponent check")?;
    let carpets = two_carpets();
    let fam = family_of(&carpets);
    let p = golden();
    let mut values = Vec::new();
    let mut deltas = Vec::new();
    for d in [2, 3, 5, 8] {
        let q = p.rational_approximation(d).ok_or(format!("no approximation at {d}"))?;
        let v = dim_of_rational_frequency(&fam, &q, &opts()).map_err(|e| e.to_string())?.value;
        let closed = carpet_family_dimension(&carpets, q.entries());
        ensure((v - closed).abs() <= 1e-6, || format!("d = {d}: {v} vs closed form {closed}"))?;
        values.push(v);
        deltas.push(p.delta(&q));
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    ensure(diffs.windows(2).all(|w| w[1] < w[0]), || format!("differences {diffs:?} not decreasing"))?;
    let anchor = values[3];
    for (v, dl) in values.iter().zip(&deltas) {
        let (lo, hi) = (anchor * (1.0 - k_hat * dl), anchor * (1.0 + k_hat * dl));
        ensure(*v >= lo && *v <= hi, || format!("{v} outside [{lo}, {hi}] at delta {dl}"))?;
    }
    Ok(format!("values {values:.6?}, differences {diffs:.4?}, K {k_hat:.3}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fixtures = [
        bedford_mcmullen(3, 2, &[(0, 0), (0, 2), (1, 1)]).unwrap(),
        bedford_mcmullen(4, 3, &[(0, 0), (0, 1), (0, 2), (1, 3), (2, 0), (2, 2)]).unwrap(),
        bedford_mcmullen(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap(),
        random_scheme_with_at_least(&mut rng, 4, 3),
        random_scheme_with_at_least(&mut rng, 6, 4),
    ];
    let mut worst: f64 = 0.0;
    for s in &fixtures {
        let n = s.alphabet_size();
        for _ in 0..20 {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let g = lg_gradient(s, &CellWeights::for_scheme(s, p.clone()).unwrap()).map_err(|e| e.to_string())?;
            // The functional extends off the simplex by the same formula;
            // perturb coordinates directly.
            for i in 0..n {
                let h = 1e-6 * p[i];
                let eval = |x: f64| {
                    let mut q = p.clone();
                    q[i] = x;
                    objective_off_simplex(s, &q)
                };
                let fd = (eval(p[i] + h) - eval(p[i] - h)) / (2.0 * h);
                let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-3);
                worst = worst.max(rel);
            }
        }
    }
    ensure(worst <= 1e-5, || format!("max relative error {worst:.2e}"))?;
    Ok(format!("max relative error {worst:.2e} over 100 points"))
}

fn random_scheme_with_at_least(rng: &mut ChaCha8Rng, max_cells: usize, min_cells: usize) -> LgScheme {
    loop {
        let s = random_scheme(rng, max_cells);
        if s.alphabet_size() >= min_cells {
            return s;
        }
    }
}

/// Same formula as the library objective, evaluated without the simplex
/// constraint so coordinates can be perturbed one at a time.
fn objective_off_simplex(s: &LgScheme, p: &[f64]) -> f64 {
    let mut h = 0.0;
    let mut la = 0.0;
    let mut hq = 0.0;
    let mut lb = 0.0;
    let mut idx = 0;
    for row in s.rows() {
        let mut q = 0.0;
        for cell in &row.cells {
            h += p[idx] * p[idx].ln();
            la += p[idx] * cell.a.ln();
            q += p[idx];
            idx += 1;
        }
        hq += q * q.ln();
        lb += q * row.b.ln();
    }
    h / la + hq * (1.0 / lb - 1.0 / la)
}

const DEPTHS: [usize; 3] = [100, 1_000, 10_000];

fn deviations(fam: &SchemeFamily, omega: &SymbolSequence, omega_q: &SymbolSequence, seed: u64) -> Result<Vec<(f64, f64)>, String> {
    let len = 2 * DEPTHS[2] + 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_address_word(fam, omega_q, len, &mut rng).map_err(|e| e.to_string())?;
    let coupling = Coupling::new(fam, omega, omega_q, horizon_for(len, omega_q).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    DEPTHS
        .iter()
        .map(|&n1| {
            let pt = coupling.inclusion_point(&x, n1).map_err(|e| e.to_string())?;
            if !pt.contained {
                return Err(format!("containment fails at depth {n1}"));
            }
            Ok((pt.epsilon + pt.delta, pt.deviation))
        })
        .collect()
}

fn inclusion_exponents(k_hat: &mut Option<f64>) -> Outcome {
    let fam = family_of(&two_carpets());
    let omega_q = SymbolSequence::periodic(vec![1, 2], 2).unwrap();
    let reordered = SymbolSequence::periodic(vec![1, 1, 1, 2, 2, 2], 2).unwrap();
    let zero = deviations(&fam, &reordered, &omega_q, 1)?;
    let dev0: Vec<f64> = zero.iter().map(|p| p.1).collect();
    ensure(dev0.windows(2).all(|w| w[1] < w[0]), || format!("delta = 0 deviations {dev0:?} not decreasing"))?;
    ensure(dev0[2] <= 0.05, || format!("delta = 0 deviation {} at depth 1e4", dev0[2]))?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, p) in ["13/25,12/25", "11/20,9/20", "3/5,2/5"].iter().enumerate() {
        let pv = FrequencyVector::parse(p).unwrap();
        let omega = SymbolSequence::periodic(canonical_word(&pv).unwrap(), 2).unwrap();
        for (x, y) in deviations(&fam, &omega, &omega_q, 10 + i as u64)? {
            xs.push(x);
            ys.push(y);
        }
    }
    let fit = fit_k_hat(&xs, &ys).map_err(|e| e.to_string())?;
    *k_hat = Some(fit.k_hat);
    ensure(fit.r_squared >= 0.8, || format!("R^2 {:.3} (K {:.3})", fit.r_squared, fit.k_hat))?;
    Ok(format!(
        "delta = 0 deviations {}; K {:.3}, R^2 {:.3}",
        dev0.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(" "),
        fit.k_hat,
        fit.r_squared
    ))
}

/// Verified closed-form value for the 3x2 carpet with row counts (2, 1).
const BM32_DIM: f64 = 1.349_683_820_195_557_7;
/// Reference value against which the local-dimension median is judged.
const BM32_LOCAL_REFERENCE: f64 = 1.349854;

fn local_dimension() -> Outcome {
    let fam = SchemeFamily::new(vec![bedford_mcmullen(3, 2, &[(0, 0), (0, 2), (1, 1)]).unwrap()]).unwrap();
    let (mu, value) = PeriodMeasure::optimal(&fam, &[1], &opts()).map_err(|e| e.to_string())?;
    ensure((value - BM32_DIM).abs() < 1e-9, || format!("maximized value {value}"))?;
    let seeds: Vec<u64> = (0..32).collect();
    let s = local_dimension_summary(&mu, &seeds, &DEPTHS, value).map_err(|e| e.to_string())?;
    let all_ratios = s.traces.iter().flat_map(|t| t.ratios.iter().copied());
    ensure(all_ratios.clone().all(|r| (0.0..=2.1).contains(&r)), || "ratio outside [0, 2.1]".into())?;
    ensure((s.median - BM32_LOCAL_REFERENCE).abs() <= 0.02, || format!("median {}", s.median))?;
    Ok(format!("median {:.5} over 32 seeds (range {:.4}..{:.4})", s.median, s.min, s.max))
}

fn sandwich() -> Outcome {
    let fam = family_of(&two_carpets());
    let q = FrequencyVector::parse("1/2,1/2").unwrap();
    let omega = SymbolSequence::periodic(vec![1, 1, 1, 2, 2, 2], 2).unwrap();
    let opts = SandwichOptions {
        depths: vec![DEPTHS[2]],
        seeds: (0..32).collect(),
        k_hat: None,
        slack: 0.05,
        optimizer: opts(),
    };
    let r = sandwich_check(&fam, &omega, &q, &opts).map_err(|e| e.to_string())?;
    for s in &r.per_seed {
        ensure(s.min_ratio >= r.l_q - 0.05 && s.max_ratio <= r.l_q + 0.05, || {
            format!("seed {}: ratios {}..{} vs L(Q) {}", s.seed, s.min_ratio, s.max_ratio, r.l_q)
        })?;
    }
    Ok(format!("L(Q) {:.5}, ratios {:.5}..{:.5}", r.l_q, r.min_ratio, r.max_ratio))
}

fn box_counts() -> Outcome {
    let one = |s: LgScheme| (SchemeFamily::new(vec![s]).unwrap(), SymbolSequence::periodic(vec![1], 1).unwrap());
    let (fam, seq) = one(bedford_mcmullen(2, 2, &[(0, 0), (1, 1)]).unwrap());
    let cloud = generate_points(&fam, &seq, 14, GenerationMode::Exhaustive).map_err(|e| e.to_string())?;
    let diag = box_count_estimate(&cloud, 1, 14).map_err(|e| e.to_string())?.estimate;
    ensure((diag - 1.0).abs() <= 0.05, || format!("diagonal estimate {diag}"))?;
    let (fam, seq) = one(bedford_mcmullen(3, 2, &[(0, 0), (0, 2), (1, 1)]).unwrap());
    let cloud = generate_points(&fam, &seq, 12, GenerationMode::Exhaustive).map_err(|e| e.to_string())?;
    let e = box_count_estimate(&cloud, 1, 14).map_err(|e| e.to_string())?;
    ensure(e.estimate >= 1.2999, || format!("3x2 estimate {}", e.estimate))?;
    Ok(format!("diagonal {diag:.4}, 3x2 carpet {:.4} (scales {}..{})", e.estimate, e.k_min, e.k_max))
}

fn round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let s = random_scheme(&mut rng, 6);
        let once = LgScheme::from_json(&s.to_json()).map_err(|e| e.to_string())?;
        let twice = LgScheme::from_json(&once.to_json()).map_err(|e| e.to_string())?;
        ensure(once == twice && once.to_json() == twice.to_json(), || "scheme JSON not idempotent".into())?;
    }

    let fam = family_of(&two_carpets());
    let omega = SymbolSequence::periodic(vec![1, 1, 1, 2, 2, 2], 2).unwrap();
    let omega_q = SymbolSequence::periodic(vec![1, 2], 2).unwrap();
    let chi = chi_permutation(&omega, &omega_q, 400).map_err(|e| e.to_string())?;
    let back = chi.inverted();
    for i in 0..1000 {
        let len = 6 * rng.random_range(1..=50);
        let x = random_address_word(&fam, &omega_q, len, &mut rng).map_err(|e| e.to_string())?;
        let y = tau_apply(&chi, &x).map_err(|e| e.to_string())?;
        let z: AddressWord = tau_apply(&back, &y).map_err(|e| e.to_string())?;
        ensure(z == x, || format!("word {i}: round trip differs"))?;
    }

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (f, g, h) = (random_scheme(&mut rng, 3), random_scheme(&mut rng, 3), random_scheme(&mut rng, 3));
        let left = compose(&compose(&f, &g), &h);
        let right = compose(&f, &compose(&g, &h));
        ensure(left.alphabet_size() == right.alphabet_size(), || "associativity changes the alphabet".into())?;
        for (rl, rr) in left.rows().iter().zip(right.rows()) {
            worst = worst.max((rl.b - rr.b).abs()).max((rl.d - rr.d).abs());
            for (cl, cr) in rl.cells.iter().zip(&rr.cells) {
                worst = worst.max((cl.a - cr.a).abs()).max((cl.c - cr.c).abs());
            }
        }
    }
    ensure(worst <= 1e-14, || format!("associativity defect {worst:.2e}"))?;
    Ok(format!("50 schemes, 1000 words, associativity defect {worst:.1e}"))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, started: Instant, outcome: Outcome| {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n:>2} FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    };
    let mut k_hat = None;

    let t = Instant::now();
    report(1, "oracle agreement", t, oracle_agreement());
    let t = Instant::now();
    report(2, "exact cases", t, exact_cases());
    let t = Instant::now();
    report(3, "order invariance", t, order_invariance());
    let t = Instant::now();
    report(6, "inclusion exponents", t, inclusion_exponents(&mut k_hat));
    let t = Instant::now();
    report(4, "continuity trace", t, continuity_trace(k_hat));
    let t = Instant::now();
    report(5, "gradient", t, gradient_check());
    let t = Instant::now();
    report(7, "local dimension", t, local_dimension());
    let t = Instant::now();
    report(8, "sandwich", t, sandwich());
    let t = Instant::now();
    report(9, "box counting", t, box_counts());
    let t = Instant::now();
    report(10, "round trips", t, round_trips());

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

//! Finite-depth point clouds of limit sets, dyadic box counting and PGM
//! rendering.
//!
//! Points are images of the origin under `f_{w_1} o ... o f_{w_depth}` with
//! `w_l` drawn from the scheme named by the driving sequence at level `l`.
//! At depth `n` every point lies within `max contraction^n` of the limit set.

use std::io::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::SchemeFamily;
use crate::sequences::SymbolSequence;
use crate::variational::CellWeights;

/// Largest number of words enumerated in exhaustive mode.
pub const EXHAUSTIVE_CAP: usize = 1_000_000;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GenerationMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PointCloud {
    pub points: Vec<(f64, f64)>,
    pub depth: usize,
    pub mode: GenerationMode,
}

#[derive(Clone, Copy)]
struct Map {
    a: f64,
    c: f64,
    b: f64,
    d: f64,
}

impl Map {
    const IDENTITY: Map = Map { a: 1.0, c: 0.0, b: 1.0, d: 0.0 };

    fn then(self, m: &Map) -> Map {
        Map {
            a: self.a * m.a,
            c: self.c + self.a * m.c,
            b: self.b * m.b,
            d: self.d + self.b * m.d,
        }
    }
}

fn level_maps(family: &SchemeFamily, seq: &SymbolSequence, depth: usize) -> Result<Vec<Vec<Map>>> {
    (1..=depth)
        .map(|l| {
            let s = family.scheme(seq.symbol_at(l)?)?;
            Ok(s.rows()
                .iter()
                .flat_map(|r| r.cells.iter().map(move |c| Map { a: c.a, c: c.c, b: r.b, d: r.d }))
                .collect())
        })
        .collect()
}

fn check_depth(family: &SchemeFamily, seq: &SymbolSequence, depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if seq.symbols() != family.len() {
        return Err(Error::Shape(format!(
            "sequence over {} symbols, family of {}",
            seq.symbols(),
            family.len()
        )));
    }
    Ok(())
}

/// Point cloud at the given depth, enumerating every address word or
/// sampling uniformly at each level.
pub fn generate_points(
    family: &SchemeFamily,
    seq: &SymbolSequence,
    depth: usize,
    mode: GenerationMode,
) -> Result<PointCloud> {
    match mode {
        GenerationMode::Exhaustive => generate_exhaustive(family, seq, depth),
        GenerationMode::Sampled { count, seed } => generate_sampled(family, seq, depth, count, seed, None),
    }
}

/// Sampled cloud with per-scheme cell weights (`weights[k - 1]` for symbol
/// `k`).
pub fn generate_points_weighted(
    family: &SchemeFamily,
    seq: &SymbolSequence,
    depth: usize,
    count: usize,
    seed: u64,
    weights: &[CellWeights],
) -> Result<PointCloud> {
    if weights.len() != family.len() {
        return Err(Error::Shape(format!(
            "{} weight vectors for a family of {}",
            weights.len(),
            family.len()
        )));
    }
    for (k, (w, s)) in weights.iter().zip(family.schemes()).enumerate() {
        if !w.matches(s) {
            return Err(Error::Shape(format!("weights for scheme {} do not match its cells", k + 1)));
        }
    }
    generate_sampled(family, seq, depth, count, seed, Some(weights))
}

fn generate_exhaustive(family: &SchemeFamily, seq: &SymbolSequence, depth: usize) -> Result<PointCloud> {
    check_depth(family, seq, depth)?;
    let levels = level_maps(family, seq, depth)?;
    let mut projected: u128 = 1;
    for maps in &levels {
        projected = projected.saturating_mul(maps.len() as u128);
    }
    if projected > EXHAUSTIVE_CAP as u128 {
        return Err(Error::CapExceeded {
            projected,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let mut frontier = vec![Map::IDENTITY];
    for maps in &levels {
        frontier = frontier
            .iter()
            .flat_map(|acc| maps.iter().map(move |m| acc.then(m)))
            .collect();
    }
    Ok(PointCloud {
        points: frontier.iter().map(|m| (m.c, m.d)).collect(),
        depth,
        mode: GenerationMode::Exhaustive,
    })
}

fn generate_sampled(
    family: &SchemeFamily,
    seq: &SymbolSequence,
    depth: usize,
    count: usize,
    seed: u64,
    weights: Option<&[CellWeights]>,
) -> Result<PointCloud> {
    check_depth(family, seq, depth)?;
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let levels = level_maps(family, seq, depth)?;
    let pickers: Option<Vec<WeightedIndex<f64>>> = weights
        .map(|ws| {
            (1..=depth)
                .map(|l| {
                    let k = seq.symbol_at(l)?;
                    WeightedIndex::new(ws[k - 1].as_slice())
                        .map_err(|e| Error::InvalidArgument(format!("weights for scheme {k}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let chunks = count.div_ceil(CHUNK);
    let points: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let n = CHUNK.min(count - chunk * CHUNK);
            let levels = &levels;
            let pickers = &pickers;
            (0..n)
                .map(move |_| {
                    let mut acc = Map::IDENTITY;
                    for (l, maps) in levels.iter().enumerate() {
                        let i = match pickers {
                            Some(p) => p[l].sample(&mut rng),
                            None => rng.random_range(0..maps.len()),
                        };
                        acc = acc.then(&maps[i]);
                    }
                    (acc.c, acc.d)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(PointCloud {
        points,
        depth,
        mode: GenerationMode::Sampled { count, seed },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxCountEstimate {
    pub estimate: f64,
    pub intercept: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// `(k, N(2^-k))` for each scale used.
    pub counts: Vec<(usize, usize)>,
    pub residuals: Vec<f64>,
}

/// Deepest supported scale exponent.
pub const MAX_SCALE: usize = 30;

/// Number of occupied dyadic boxes of side `2^-k`.
pub fn occupied_boxes(points: &[(f64, f64)], k: usize) -> usize {
    let side = 1u64 << k;
    let cell = |v: f64| ((v * side as f64).floor().max(0.0) as u64).min(side - 1);
    let mut keys: Vec<u64> = points.par_iter().map(|&(x, y)| (cell(x) << 32) | cell(y)).collect();
    keys.par_sort_unstable();
    keys.dedup();
    keys.len()
}

/// Slope of `log N(2^-k)` against `k log 2` over `k_min..=k_max`, after
/// lowering `k_max` until the cloud holds at least ten points per occupied
/// box at the finest scale.
pub fn box_count_estimate(cloud: &PointCloud, k_min: usize, k_max: usize) -> Result<BoxCountEstimate> {
    if cloud.points.is_empty() {
        return Err(Error::InvalidArgument("point cloud is empty".into()));
    }
    if k_min >= k_max || k_max > MAX_SCALE {
        return Err(Error::InvalidArgument(format!(
            "need k_min < k_max <= {MAX_SCALE} (got {k_min}, {k_max})"
        )));
    }
    let mut k_hi = k_max;
    while k_hi >= k_min && cloud.points.len() < 10 * occupied_boxes(&cloud.points, k_hi) {
        k_hi -= 1;
        if k_hi == 0 {
            break;
        }
    }
    if k_hi < k_min + 2 {
        return Err(Error::InsufficientDepth(format!(
            "only {} usable scales for {} points",
            (k_hi + 1).saturating_sub(k_min),
            cloud.points.len()
        )));
    }
    let counts: Vec<(usize, usize)> = (k_min..=k_hi).map(|k| (k, occupied_boxes(&cloud.points, k))).collect();
    let xs: Vec<f64> = counts.iter().map(|&(k, _)| k as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let estimate = sxy / sxx;
    let intercept = my - estimate * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - intercept - estimate * x).collect();
    Ok(BoxCountEstimate {
        estimate,
        intercept,
        k_min,
        k_max: k_hi,
        counts,
        residuals,
    })
}

pub const MIN_RESOLUTION: usize = 64;
pub const MAX_RESOLUTION: usize = 8192;

/// Binary PGM of hit counts, log-scaled to gray, with `y = 0` at the
/// bottom row.
pub fn encode_pgm(cloud: &PointCloud, resolution: usize) -> Result<Vec<u8>> {
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} outside {MIN_RESOLUTION}..={MAX_RESOLUTION}"
        )));
    }
    let mut hits = vec![0u64; resolution * resolution];
    let pixel = |v: f64| ((v * resolution as f64).floor().max(0.0) as usize).min(resolution - 1);
    for &(x, y) in &cloud.points {
        let row = resolution - 1 - pixel(y);
        hits[row * resolution + pixel(x)] += 1;
    }
    let max = hits.iter().copied().max().unwrap_or(0);
    let scale = if max > 0 { 255.0 / (max as f64).ln_1p() } else { 0.0 };
    let mut out = format!("P5\n{resolution} {resolution}\n255\n").into_bytes();
    out.extend(hits.iter().map(|&c| ((c as f64).ln_1p() * scale).round() as u8));
    Ok(out)
}

pub fn render_pgm(cloud: &PointCloud, resolution: usize, path: &Path) -> Result<()> {
    let bytes = encode_pgm(cloud, resolution)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `x,y` lines, no header.
pub fn encode_csv(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.points.len() * 40);
    for (x, y) in &cloud.points {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

pub fn write_csv(cloud: &PointCloud, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(encode_csv(cloud).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{bedford_mcmullen, LgScheme};

    fn single(s: LgScheme) -> (SchemeFamily, SymbolSequence) {
        (SchemeFamily::new(vec![s]).unwrap(), SymbolSequence::periodic(vec![1], 1).unwrap())
    }

    #[test]
    fn single_map_approaches_fixed_point() {
        let (fam, seq) = single(LgScheme::single_map(0.3, 0.2, 0.5, 0.4).unwrap());
        let fixed = (0.2 / 0.7, 0.4 / 0.5);
        for n in [1, 5, 20] {
            let c = generate_points(&fam, &seq, n, GenerationMode::Exhaustive).unwrap();
            assert_eq!(c.points.len(), 1);
            let (x, y) = c.points[0];
            let dist = ((x - fixed.0).powi(2) + (y - fixed.1).powi(2)).sqrt();
            assert!(dist <= 0.3f64.powi(n as i32) + 0.5f64.powi(n as i32));
        }
    }

    #[test]
    fn full_square_grid() {
        let (fam, seq) = single(bedford_mcmullen(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap());
        let c = generate_points(&fam, &seq, 3, GenerationMode::Exhaustive).unwrap();
        assert_eq!(c.points.len(), 64);
        let mut cells: Vec<(u32, u32)> = c
            .points
            .iter()
            .map(|&(x, y)| {
                assert_eq!((x * 8.0).fract(), 0.0);
                assert_eq!((y * 8.0).fract(), 0.0);
                ((x * 8.0) as u32, (y * 8.0) as u32)
            })
            .collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 64);
    }

    #[test]
    fn exhaustive_cap() {
        let (fam, seq) = single(bedford_mcmullen(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap());
        assert!(matches!(
            generate_points(&fam, &seq, 10, GenerationMode::Exhaustive),
            Err(Error::CapExceeded { .. })
        ));
        assert!(generate_points(&fam, &seq, 0, GenerationMode::Exhaustive).is_err());
    }

    #[test]
    fn sampled_points_are_deterministic() {
        let (fam, seq) = single(bedford_mcmullen(3, 2, &[(0, 0), (0, 2), (1, 1)]).unwrap());
        let mode = GenerationMode::Sampled { count: 10_000, seed: 4 };
        let a = generate_points(&fam, &seq, 12, mode).unwrap();
        let b = generate_points(&fam, &seq, 12, mode).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.points.len(), 10_000);
    }

    #[test]
    fn weighted_sampling_follows_weights() {
        let (fam, seq) = single(bedford_mcmullen(3, 2, &[(0, 0), (0, 2), (1, 1)]).unwrap());
        let w = CellWeights::from_rows(vec![vec![1.0, 0.0], vec![0.0]]).unwrap();
        let c = generate_points_weighted(&fam, &seq, 6, 100, 0, &[w]).unwrap();
        assert!(c.points.iter().all(|&(x, y)| x == 0.0 && y == 0.0));
    }

    #[test]
    fn box_counts_are_monotone() {
        let (fam, seq) = single(bedford_mcmullen(3, 2, &[(0, 0), (0, 2), (1, 1)]).unwrap());
        let c = generate_points(&fam, &seq, 10, GenerationMode::Exhaustive).unwrap();
        let counts: Vec<usize> = (0..12).map(|k| occupied_boxes(&c.points, k)).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(counts[0], 1);
    }

    #[test]
    fn box_count_needs_three_scales() {
        let (fam, seq) = single(bedford_mcmullen(2, 2, &[(0, 0), (1, 1)]).unwrap());
        let c = generate_points(&fam, &seq, 4, GenerationMode::Exhaustive).unwrap();
        assert!(box_count_estimate(&c, 1, 10).is_err());
        let c = generate_points(&fam, &seq, 12, GenerationMode::Exhaustive).unwrap();
        let e = box_count_estimate(&c, 1, 12).unwrap();
        assert!((e.estimate - 1.0).abs() < 1e-12);
        assert!(c.points.len() >= 10 * e.counts.last().unwrap().1);
    }

    #[test]
    fn pgm_layout() {
        let (fam, seq) = single(LgScheme::single_map(0.5, 0.0, 0.5, 0.0).unwrap());
        let c = generate_points(&fam, &seq, 3, GenerationMode::Exhaustive).unwrap();
        let bytes = encode_pgm(&c, 64).unwrap();
        let header = b"P5\n64 64\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let body = &bytes[header.len()..];
        assert_eq!(body.len(), 64 * 64);
        let lit: Vec<usize> = (0..body.len()).filter(|&i| body[i] > 0).collect();
        // Origin maps to the bottom-left pixel.
        assert_eq!(lit, vec![63 * 64]);
        assert!(encode_pgm(&c, 32).is_err());
    }

    #[test]
    fn full_square_fills_raster() {
        let (fam, seq) = single(bedford_mcmullen(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap());
        let c = generate_points(&fam, &seq, 8, GenerationMode::Exhaustive).unwrap();
        let bytes = encode_pgm(&c, 256).unwrap();
        assert!(bytes[b"P5\n256 256\n255\n".len()..].iter().all(|&g| g == 255));
    }

    #[test]
    fn csv_lines() {
        let (fam, seq) = single(bedford_mcmullen(2, 2, &[(0, 0), (1, 1)]).unwrap());
        let c = generate_points(&fam, &seq, 1, GenerationMode::Exhaustive).unwrap();
        assert_eq!(encode_csv(&c), "0,0\n0.5,0.5\n");
    }
}

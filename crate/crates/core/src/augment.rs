//! Random contrast augmentation: gamma, logarithmic, sigmoid and
//! contrast-limited adaptive histogram equalization (CLAHE).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Slice2D;
use crate::rng::SeedRng;

pub const GAMMA_RANGE: (f64, f64) = (0.25, 4.0);
pub const LOG_GAIN_MAX: f64 = 2.0;
pub const SIGMOID_CUTOFF_RANGE: (f64, f64) = (0.3, 0.7);
pub const SIGMOID_GAIN_RANGE: (f64, f64) = (3.0, 12.0);
pub const CLAHE_CLIP_RANGE: (f64, f64) = (0.005, 0.05);
pub const CLAHE_TILE_CHOICES: [usize; 3] = [4, 8, 16];
pub const CLAHE_BINS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugKind {
    Gamma,
    Log,
    Sigmoid,
    AdaptiveHist,
    None,
}

impl AugKind {
    pub const RANDOM: [AugKind; 4] = [AugKind::Gamma, AugKind::Log, AugKind::Sigmoid, AugKind::AdaptiveHist];
}

impl fmt::Display for AugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AugKind::Gamma => "gamma",
            AugKind::Log => "log",
            AugKind::Sigmoid => "sigmoid",
            AugKind::AdaptiveHist => "adaptive_hist",
            AugKind::None => "none",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for AugKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(AugKind::Gamma),
            "log" => Ok(AugKind::Log),
            "sigmoid" => Ok(AugKind::Sigmoid),
            "adaptive_hist" | "clahe" => Ok(AugKind::AdaptiveHist),
            "none" => Ok(AugKind::None),
            other => Err(Error::invalid(format!("unknown augmentation '{other}'"))),
        }
    }
}

/// Which transform was applied, with what parameters, drawn from which seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugRecord {
    pub kind: AugKind,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl AugRecord {
    pub fn none(seed: u64) -> Self {
        AugRecord {
            kind: AugKind::None,
            params: BTreeMap::new(),
            seed,
        }
    }

    fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("{} record lacks '{name}'", self.kind)))
    }

    /// Re-applies the recorded transform.
    pub fn apply(&self, s: &Slice2D) -> Result<Slice2D> {
        match self.kind {
            AugKind::Gamma => gamma_adjust(s, self.param("gamma")?),
            AugKind::Log => log_adjust(s, self.param("gain")?),
            AugKind::Sigmoid => sigmoid_adjust(s, self.param("cutoff")?, self.param("gain")?),
            AugKind::AdaptiveHist => {
                let tiles = self.param("tiles")?;
                if tiles.fract() != 0.0 || tiles < 1.0 {
                    return Err(Error::invalid(format!("tile count {tiles}")));
                }
                adaptive_hist(s, self.param("clip_limit")?, tiles as usize)
            }
            AugKind::None => Ok(s.clone()),
        }
    }
}

/// `out = s^gamma`.
pub fn gamma_adjust(s: &Slice2D, gamma: f64) -> Result<Slice2D> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma {gamma} must be positive")));
    }
    Ok(s.map(|p| p.powf(gamma)))
}

/// `out = clip(gain * log2(1 + s), 0, 1)`.
pub fn log_adjust(s: &Slice2D, gain: f64) -> Result<Slice2D> {
    if !(gain > 0.0 && gain <= LOG_GAIN_MAX) {
        return Err(Error::invalid(format!("log gain {gain} outside (0, {LOG_GAIN_MAX}]")));
    }
    Ok(s.map(|p| gain * (1.0 + p).log2()))
}

/// `out = 1 / (1 + exp(gain * (cutoff - s)))`.
pub fn sigmoid_adjust(s: &Slice2D, cutoff: f64, gain: f64) -> Result<Slice2D> {
    let (clo, chi) = SIGMOID_CUTOFF_RANGE;
    let (glo, ghi) = SIGMOID_GAIN_RANGE;
    if !(clo..=chi).contains(&cutoff) || !(glo..=ghi).contains(&gain) {
        return Err(Error::invalid(format!(
            "sigmoid cutoff {cutoff} / gain {gain} outside [{clo}, {chi}] / [{glo}, {ghi}]"
        )));
    }
    Ok(s.map(|p| 1.0 / (1.0 + (gain * (cutoff - p)).exp())))
}

#[inline]
fn bin_of(p: f64) -> usize {
    ((p * CLAHE_BINS as f64) as usize).min(CLAHE_BINS - 1)
}

/// Equalization lookup for one tile: clipped histogram, excess spread over
/// all bins, normalized cumulative sum.
fn tile_mapping(s: &Slice2D, rows: (usize, usize), cols: (usize, usize), clip_limit: f64) -> [f64; CLAHE_BINS] {
    let mut hist = [0.0f64; CLAHE_BINS];
    for r in rows.0..rows.1 {
        for &p in &s.grid().row(r)[cols.0..cols.1] {
            hist[bin_of(p)] += 1.0;
        }
    }
    let total = ((rows.1 - rows.0) * (cols.1 - cols.0)) as f64;
    let clip = (clip_limit * total).max(1.0);
    // Spreading the excess can push bins over the limit again; a few rounds
    // shrink the overshoot geometrically.
    for _ in 0..16 {
        let excess: f64 = hist.iter().map(|&h| (h - clip).max(0.0)).sum();
        if excess <= 1e-9 * total {
            break;
        }
        let share = excess / CLAHE_BINS as f64;
        for h in hist.iter_mut() {
            *h = h.min(clip) + share;
        }
    }
    let mut map = [0.0; CLAHE_BINS];
    let mut acc = 0.0;
    for (m, h) in map.iter_mut().zip(hist.iter()) {
        acc += h;
        *m = (acc / total).min(1.0);
    }
    map
}

/// Tile boundaries along one axis; remainder pixels are spread so every
/// tile is non-empty.
fn tile_bounds(len: usize, tiles: usize) -> Vec<usize> {
    (0..=tiles).map(|t| t * len / tiles).collect()
}

/// For coordinate `x`, the two neighbouring tile indices and the weight of
/// the second, interpolating between tile centres.
fn blend_weights(x: usize, centers: &[f64]) -> (usize, usize, f64) {
    let x = x as f64;
    let last = centers.len() - 1;
    if x <= centers[0] {
        return (0, 0, 0.0);
    }
    if x >= centers[last] {
        return (last, last, 0.0);
    }
    let i = centers.partition_point(|&c| c <= x) - 1;
    let w = (x - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, w)
}

/// Contrast-limited adaptive histogram equalization on a `tiles x tiles` grid.
///
/// `clip_limit` is the per-bin cap as a fraction of the tile's pixel count
/// (at least one count). Tile mappings are blended bilinearly between tile
/// centres.
pub fn adaptive_hist(s: &Slice2D, clip_limit: f64, tiles: usize) -> Result<Slice2D> {
    if !(clip_limit > 0.0 && clip_limit <= 1.0) {
        return Err(Error::invalid(format!("clip limit {clip_limit} outside (0, 1]")));
    }
    if tiles == 0 || s.height() < tiles || s.width() < tiles {
        return Err(Error::invalid(format!(
            "{}x{} image is smaller than a {tiles}x{tiles} tile grid",
            s.height(),
            s.width()
        )));
    }
    let rb = tile_bounds(s.height(), tiles);
    let cb = tile_bounds(s.width(), tiles);
    let mut maps = Vec::with_capacity(tiles * tiles);
    for tr in 0..tiles {
        for tc in 0..tiles {
            maps.push(tile_mapping(s, (rb[tr], rb[tr + 1]), (cb[tc], cb[tc + 1]), clip_limit));
        }
    }
    let centers = |b: &[usize]| -> Vec<f64> { b.windows(2).map(|w| (w[0] + w[1]) as f64 / 2.0 - 0.5).collect() };
    let rc = centers(&rb);
    let cc = centers(&cb);
    let col_w: Vec<_> = (0..s.width()).map(|c| blend_weights(c, &cc)).collect();

    let mut out = s.grid().clone();
    for r in 0..s.height() {
        let (r0, r1, wr) = blend_weights(r, &rc);
        for (c, &(c0, c1, wc)) in col_w.iter().enumerate() {
            let b = bin_of(s.get(r, c));
            let m = |tr: usize, tc: usize| maps[tr * tiles + tc][b];
            let top = m(r0, c0) * (1.0 - wc) + m(r0, c1) * wc;
            let bottom = m(r1, c0) * (1.0 - wc) + m(r1, c1) * wc;
            out.set(r, c, top * (1.0 - wr) + bottom * wr);
        }
    }
    Ok(Slice2D::from_grid_clamped(out))
}

/// Draws one of the four transforms and its parameters, applies it, and
/// returns the record. With `enabled == false` nothing is drawn and the
/// slice passes through unchanged.
///
/// Draw order: kind, then the kind's parameters in the order
/// gamma | gain | cutoff, gain | clip_limit, tiles.
pub fn random_augment(s: &Slice2D, rng: &mut SeedRng, enabled: bool) -> Result<(Slice2D, AugRecord)> {
    let seed = rng.seed();
    if !enabled {
        return Ok((s.clone(), AugRecord::none(seed)));
    }
    let kind = AugKind::RANDOM[rng.index(4)];
    let mut params = BTreeMap::new();
    match kind {
        AugKind::Gamma => {
            params.insert("gamma".into(), rng.range(GAMMA_RANGE.0, GAMMA_RANGE.1));
        }
        AugKind::Log => {
            // (0, max]: flip the half-open unit draw
            params.insert("gain".into(), LOG_GAIN_MAX * (1.0 - rng.uniform()));
        }
        AugKind::Sigmoid => {
            params.insert(
                "cutoff".into(),
                rng.range(SIGMOID_CUTOFF_RANGE.0, SIGMOID_CUTOFF_RANGE.1),
            );
            params.insert("gain".into(), rng.range(SIGMOID_GAIN_RANGE.0, SIGMOID_GAIN_RANGE.1));
        }
        AugKind::AdaptiveHist => {
            params.insert("clip_limit".into(), rng.range(CLAHE_CLIP_RANGE.0, CLAHE_CLIP_RANGE.1));
            params.insert("tiles".into(), CLAHE_TILE_CHOICES[rng.index(3)] as f64);
        }
        AugKind::None => unreachable!(),
    }
    let record = AugRecord { kind, params, seed };
    let out = record.apply(s)?;
    Ok((out, record))
}

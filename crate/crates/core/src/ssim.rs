//! Structural similarity with a Gaussian window.
//!
//! Local statistics are Gaussian-weighted moments computed by separable
//! filtering in "same" mode with half-sample symmetric boundaries
//! (`... b a | a b c ... x y z | z y ...`); the reported value is the mean
//! of the full-size SSIM map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Grid2D, Slice2D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    pub window_size: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        SsimConfig {
            window_size: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.data_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.data_range).powi(2)
    }

    /// Normalized 1D Gaussian taps; the 2D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let r = (self.window_size / 2) as f64;
        let taps: Vec<f64> = (0..self.window_size)
            .map(|i| {
                let x = i as f64 - r;
                (-x * x / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.window_size == 0 || self.window_size.is_multiple_of(2) {
            return Err(Error::invalid(format!("window size {} must be odd", self.window_size)));
        }
        if !(self.sigma > 0.0 && self.data_range > 0.0 && self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::invalid(format!("invalid SSIM constants {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsimResult {
    pub mean: f64,
    pub map: Option<Grid2D>,
}

/// Half-sample symmetric index reflection; valid while the overshoot is at
/// most one period.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    j as usize
}

/// Separable "same" convolution with symmetric boundaries.
fn filter(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * row[reflect(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for (k, t) in taps.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - r, h);
            let src_row = &tmp[sy * w..(sy + 1) * w];
            for (o, s) in out[y * w..(y + 1) * w].iter_mut().zip(src_row) {
                *o += t * s;
            }
        }
    }
    out
}

/// SSIM between two slices, optionally with the per-pixel map.
pub fn ssim(a: &Slice2D, b: &Slice2D, cfg: &SsimConfig, with_map: bool) -> Result<SsimResult> {
    cfg.validate()?;
    let (h, w) = (a.height(), a.width());
    if (h, w) != (b.height(), b.width()) {
        return Err(Error::Shape(format!(
            "SSIM of {h}x{w} against {}x{}",
            b.height(),
            b.width()
        )));
    }
    if h < cfg.window_size || w < cfg.window_size {
        return Err(Error::Shape(format!(
            "{h}x{w} image smaller than the {} px window",
            cfg.window_size
        )));
    }
    let taps = cfg.kernel();
    let (pa, pb) = (a.pixels(), b.pixels());
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { pa.iter().zip(pb).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter(pa, h, w, &taps);
    let mu_b = filter(pb, h, w, &taps);
    let e_aa = filter(&prod(&|x, _| x * x), h, w, &taps);
    let e_bb = filter(&prod(&|_, y| y * y), h, w, &taps);
    let e_ab = filter(&prod(&|x, y| x * y), h, w, &taps);
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let mut map = Vec::with_capacity(h * w);
    for i in 0..h * w {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        map.push(num / den);
    }
    let mean = map.iter().sum::<f64>() / map.len() as f64;
    Ok(SsimResult {
        mean,
        map: with_map.then(|| Grid2D::new(h, w, map).expect("shape preserved")),
    })
}

/// Mean SSIM between two slices.
pub fn ssim_mean(a: &Slice2D, b: &Slice2D, cfg: &SsimConfig) -> Result<f64> {
    Ok(ssim(a, b, cfg, false)?.mean)
}

//! Library results checked against independent reference implementations.

#![allow(clippy::needless_range_loop)]

use ssimqa::eval::{linear_fit, PredictionRecord};
use ssimqa::image::{conform, Slice2D};
use ssimqa::ssim::{ssim, ssim_mean, SsimConfig};
use ssimqa::SeedRng;

fn random_slice(h: usize, w: usize, rng: &mut SeedRng) -> Slice2D {
    Slice2D::from_vec(h, w, (0..h * w).map(|_| rng.uniform()).collect()).unwrap()
}

fn formula_slice(h: usize, w: usize, f: impl Fn(f64, f64) -> f64) -> Slice2D {
    let px = (0..h * w).map(|i| f((i / w) as f64, (i % w) as f64)).collect();
    Slice2D::from_vec(h, w, px).unwrap()
}

/// Mirror index with period 2n, written independently of the library.
fn mirror(i: i64, n: i64) -> usize {
    let k = i.rem_euclid(2 * n);
    (if k < n { k } else { 2 * n - 1 - k }) as usize
}

/// Direct double-loop SSIM: explicit 2D window, two-pass moments per pixel.
fn naive_ssim(a: &Slice2D, b: &Slice2D) -> f64 {
    let (h, w) = (a.height() as i64, a.width() as i64);
    let mut g = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (u, row) in g.iter_mut().enumerate() {
        for (v, cell) in row.iter_mut().enumerate() {
            let (du, dv) = (u as f64 - 5.0, v as f64 - 5.0);
            *cell = (-(du * du + dv * dv) / (2.0 * 1.5 * 1.5)).exp();
            total += *cell;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut sum = 0.0;
    for i in 0..h {
        for j in 0..w {
            let at = |s: &Slice2D, u: usize, v: usize| s.get(mirror(i + u as i64 - 5, h), mirror(j + v as i64 - 5, w));
            let (mut ma, mut mb) = (0.0, 0.0);
            for u in 0..11 {
                for v in 0..11 {
                    let wt = g[u][v] / total;
                    ma += wt * at(a, u, v);
                    mb += wt * at(b, u, v);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for u in 0..11 {
                for v in 0..11 {
                    let wt = g[u][v] / total;
                    let (da, db) = (at(a, u, v) - ma, at(b, u, v) - mb);
                    va += wt * da * da;
                    vb += wt * db * db;
                    cov += wt * da * db;
                }
            }
            sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    sum / (h * w) as f64
}

#[test]
fn ssim_matches_naive_window_oracle() {
    let mut rng = SeedRng::new(404);
    let cfg = SsimConfig::default();
    for k in 0..10 {
        let a = random_slice(64, 64, &mut rng);
        // mix of unrelated, lightly perturbed and smooth pairs
        let b = match k % 3 {
            0 => random_slice(64, 64, &mut rng),
            1 => {
                let noise = random_slice(64, 64, &mut rng);
                let px = a.pixels().iter().zip(noise.pixels());
                Slice2D::from_vec(64, 64, px.map(|(p, n)| (p + 0.1 * (n - 0.5)).clamp(0.0, 1.0)).collect()).unwrap()
            }
            _ => formula_slice(64, 64, |r, c| 0.5 + 0.45 * (0.2 * r + 0.1 * c * k as f64).sin()),
        };
        let got = ssim_mean(&a, &b, &cfg).unwrap();
        let want = naive_ssim(&a, &b);
        assert!((got - want).abs() <= 1e-7, "pair {k}: {got} vs {want}");
    }
}

#[test]
fn ssim_map_matches_scikit_image_reference() {
    // structural_similarity(gaussian_weights=True, sigma=1.5,
    // use_sample_covariance=False, data_range=1, full=True); the full map is
    // compared because scikit-image crops the border before averaging
    let a = formula_slice(64, 48, |r, c| 0.5 + 0.4 * (0.3 * r).sin() * (0.2 * c).cos());
    let b = formula_slice(64, 48, |r, c| {
        (0.5 + 0.4 * (0.3 * r).sin() * (0.2 * c).cos() + 0.1 * (0.9 * r + 0.5 * c).sin()).clamp(0.0, 1.0)
    });
    let r = ssim(&a, &b, &SsimConfig::default(), true).unwrap();
    let map = r.map.unwrap();
    assert!((r.mean - 0.7811873532242775).abs() < 1e-9, "{}", r.mean);
    assert!((map.get(0, 0) - 0.9218855213530793).abs() < 1e-9);
    assert!((map.get(31, 20) - 0.8730771382941682).abs() < 1e-9);
    let mut cropped = 0.0;
    for i in 5..59 {
        for j in 5..43 {
            cropped += map.get(i, j);
        }
    }
    assert!((cropped / (54.0 * 38.0) - 0.7860118762551973).abs() < 1e-9);
}

fn wave(r: f64, c: f64) -> f64 {
    0.5 + 0.5 * (0.07 * r + 0.3).sin() * (0.11 * c).cos()
}

/// Tent-kernel resampler: every output pixel is a weighted sum over all
/// input pixels with weight `max(0, 1 - |x - xi|)` on each axis.
fn tent_resize(src: &Slice2D, oh: usize, ow: usize) -> Vec<f64> {
    let weights = |out: usize, inp: usize| -> Vec<Vec<f64>> {
        (0..out)
            .map(|d| {
                let x = ((d as f64 + 0.5) * inp as f64 / out as f64 - 0.5).clamp(0.0, inp as f64 - 1.0);
                (0..inp).map(|i| (1.0 - (x - i as f64).abs()).max(0.0)).collect()
            })
            .collect()
    };
    let wr = weights(oh, src.height());
    let wc = weights(ow, src.width());
    let mut out = Vec::with_capacity(oh * ow);
    for rw in &wr {
        for cw in &wc {
            let mut acc = 0.0;
            for (i, &a) in rw.iter().enumerate().filter(|(_, a)| **a > 0.0) {
                for (j, &b) in cw.iter().enumerate().filter(|(_, b)| **b > 0.0) {
                    acc += a * b * src.get(i, j);
                }
            }
            out.push(acc);
        }
    }
    out
}

#[test]
fn conform_300x200_matches_reference_resamplers() {
    let src = formula_slice(300, 200, wave);
    let out = conform(&src, 256);
    assert_eq!((out.height(), out.width()), (256, 256));
    // 171 content columns, 42 zero columns on the left and 43 on the right
    let content = |r: usize, c: usize| out.get(r, 42 + c);
    for r in 0..256 {
        for c in (0..42).chain(213..256) {
            assert_eq!(out.get(r, c), 0.0);
        }
    }

    let oracle = tent_resize(&src, 256, 171);
    let mad: f64 = oracle
        .iter()
        .enumerate()
        .map(|(i, v)| (content(i / 171, i % 171) - v).abs())
        .sum::<f64>()
        / oracle.len() as f64;
    assert!(mad <= 1e-3, "mean abs diff {mad}");

    // values from OpenCV resize(INTER_LINEAR) of the same float64 image
    let opencv = [
        (0, 0, 0.6505229507855805),
        (17, 33, 0.2813259858195814),
        (128, 85, 0.524781279696976),
        (200, 150, 0.12239198259609216),
        (255, 170, 0.15529634510803936),
        (100, 3, 0.8651891409762623),
    ];
    let mad = opencv.iter().map(|&(r, c, v)| (content(r, c) - v).abs()).sum::<f64>() / opencv.len() as f64;
    assert!(mad <= 1e-3, "mean abs diff vs OpenCV {mad}");
    let mean: f64 = (0..256 * 171).map(|i| content(i / 171, i % 171)).sum::<f64>() / (256.0 * 171.0);
    assert!((mean - 0.5001873202793784).abs() < 1e-3);
}

#[test]
fn linear_fit_matches_normal_equations() {
    let mut rng = SeedRng::new(77);
    let recs: Vec<PredictionRecord> = (0..500)
        .map(|i| {
            let t = rng.uniform();
            let p = 0.8 * t + 0.1 + 0.05 * (rng.uniform() - 0.5);
            PredictionRecord::new(format!("r{i}"), p, t)
        })
        .collect();
    // [n  Sx ] [b]   [Sy ]
    // [Sx Sxx] [a] = [Sxy], solved by Cramer's rule
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in &recs {
        let (x, y) = (r.ssim_true.unwrap(), r.ssim_pred);
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let fit = linear_fit(&recs).unwrap();
    assert!((fit.slope - slope).abs() < 1e-10, "{} vs {slope}", fit.slope);
    assert!((fit.intercept - intercept).abs() < 1e-10);
}

//! Centered, unitary 2D Fourier transform (DC at `(h / 2, w / 2)`).

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::image::Grid2D;

/// Row-major complex 2D array, used both for k-space and complex images.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    pub height: usize,
    pub width: usize,
    pub data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn from_real(g: &Grid2D) -> Self {
        ComplexGrid {
            height: g.height(),
            width: g.width(),
            data: g.data().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [Complex64] {
        &mut self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn magnitude(&self) -> Grid2D {
        Grid2D::new(self.height, self.width, self.data.iter().map(|z| z.norm()).collect()).expect("shape preserved")
    }

    pub fn real(&self) -> Grid2D {
        Grid2D::new(self.height, self.width, self.data.iter().map(|z| z.re).collect()).expect("shape preserved")
    }
}

enum Direction {
    Forward,
    Inverse,
}

fn transform(mut g: ComplexGrid, dir: Direction) -> ComplexGrid {
    let (h, w) = (g.height, g.width);
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = match dir {
        Direction::Forward => (planner.plan_fft_forward(w), planner.plan_fft_forward(h)),
        Direction::Inverse => (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h)),
    };
    row_fft.process(&mut g.data);
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for (r, v) in col.iter_mut().enumerate() {
            *v = g.data[r * w + c];
        }
        col_fft.process(&mut col);
        for (r, v) in col.iter().enumerate() {
            g.data[r * w + c] = *v;
        }
    }
    let scale = 1.0 / ((h * w) as f64).sqrt();
    for v in g.data.iter_mut() {
        *v *= scale;
    }
    g
}

/// Moves index `0` to `n / 2` along both axes.
fn shift(g: &ComplexGrid) -> ComplexGrid {
    let (h, w) = (g.height, g.width);
    let mut out = g.clone();
    for r in 0..h {
        for c in 0..w {
            out.data[((r + h / 2) % h) * w + (c + w / 2) % w] = g.data[r * w + c];
        }
    }
    out
}

/// Inverse of [`shift`], also for odd sizes.
fn unshift(g: &ComplexGrid) -> ComplexGrid {
    let (h, w) = (g.height, g.width);
    let mut out = g.clone();
    for r in 0..h {
        for c in 0..w {
            out.data[r * w + c] = g.data[((r + h / 2) % h) * w + (c + w / 2) % w];
        }
    }
    out
}

/// Centered unitary forward transform of a real image.
pub fn fft2(g: &Grid2D) -> ComplexGrid {
    fft2_complex(ComplexGrid::from_real(g))
}

pub fn fft2_complex(g: ComplexGrid) -> ComplexGrid {
    shift(&transform(g, Direction::Forward))
}

/// Inverse of [`fft2`]; returns the complex image.
pub fn ifft2(spectrum: &ComplexGrid) -> ComplexGrid {
    transform(unshift(spectrum), Direction::Inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRng;

    #[test]
    fn round_trip_random_images() {
        for seed in 0..50 {
            let mut rng = SeedRng::new(seed);
            let g = Grid2D::from_fn(64, 64, |_, _| rng.uniform());
            let back = ifft2(&fft2(&g));
            let err = back
                .data
                .iter()
                .zip(g.data())
                .map(|(z, &v)| (z - Complex64::new(v, 0.0)).norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-10, "seed {seed}: {err}");
        }
    }

    #[test]
    fn round_trip_odd_size() {
        let mut rng = SeedRng::new(1);
        let g = Grid2D::from_fn(15, 9, |_, _| rng.uniform());
        let back = ifft2(&fft2(&g)).real();
        for (a, b) in back.data().iter().zip(g.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let mut g = Grid2D::zeros(16, 12);
        g.set(3, 5, 1.0);
        let s = fft2(&g);
        let expect = 1.0 / (16.0 * 12.0f64).sqrt();
        for z in &s.data {
            assert!((z.norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_has_central_peak() {
        let g = Grid2D::from_fn(16, 12, |_, _| 0.5);
        let s = fft2(&g);
        for r in 0..16 {
            for c in 0..12 {
                let m = s.get(r, c).norm();
                if (r, c) == (8, 6) {
                    assert!((m - 0.5 * (16.0 * 12.0f64).sqrt()).abs() < 1e-10);
                } else {
                    assert!(m < 1e-12);
                }
            }
        }
    }

    #[test]
    fn parseval() {
        let mut rng = SeedRng::new(2);
        let g = Grid2D::from_fn(32, 20, |_, _| rng.uniform());
        let e_img: f64 = g.data().iter().map(|v| v * v).sum();
        let e_k: f64 = fft2(&g).data.iter().map(|z| z.norm_sqr()).sum();
        assert!((e_img - e_k).abs() < 1e-9 * e_img);
    }
}

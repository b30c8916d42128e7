//! Volume and slice data model, intensity normalization and spatial
//! conformance to the network input size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedRng;

/// Default in-plane size every slice is conformed to.
pub const CONFORM_TARGET: usize = 256;

/// Spacing ratio (max / min) up to which a volume counts as isotropic.
pub const ISOTROPY_TOLERANCE: f64 = 1.1;

/// Smallest extent accepted along any volume axis.
pub const MIN_VOLUME_DIM: usize = 8;

/// Plain row-major 2D array of `f64` with no range constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Grid2D {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!("empty image {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "{} values for a {height}x{width} image",
                data.len()
            )));
        }
        Ok(Grid2D { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Grid2D {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid2D { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.width + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}

/// A grayscale slice whose pixels all lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice2D(Grid2D);

impl Slice2D {
    /// Wraps `grid` after checking that every pixel is finite and in `[0, 1]`.
    pub fn new(grid: Grid2D) -> Result<Self> {
        grid.check_finite()?;
        if let Some(i) = grid.data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("pixel {i} = {} outside [0, 1]", grid.data[i])));
        }
        Ok(Slice2D(grid))
    }

    pub fn from_vec(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        Slice2D::new(Grid2D::new(height, width, pixels)?)
    }

    /// Builds a slice from values already known to be in range. The values
    /// are clamped so rounding noise cannot break the invariant.
    pub(crate) fn from_grid_clamped(mut grid: Grid2D) -> Self {
        for v in grid.data.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        Slice2D(grid)
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.0.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0.get(row, col)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.0
    }

    pub fn into_grid(self) -> Grid2D {
        self.0
    }

    /// Applies a pixelwise map; the result is clamped to `[0, 1]`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Slice2D {
        let data = self.0.data.iter().map(|&p| f(p)).collect();
        Slice2D::from_grid_clamped(Grid2D {
            height: self.0.height,
            width: self.0.width,
            data,
        })
    }

    /// Quantizes every pixel to the 16-bit grid `k / 65535`.
    pub fn quantize_u16(&self) -> Slice2D {
        self.map(|p| (p * 65535.0).round() / 65535.0)
    }

    pub fn mean(&self) -> f64 {
        self.0.data.iter().sum::<f64>() / self.0.data.len() as f64
    }
}

/// Min-max normalization to `[0, 1]`.
///
/// A constant image maps to all zeros. Non-finite input is rejected.
pub fn normalize(raw: &Grid2D) -> Result<Slice2D> {
    raw.check_finite()?;
    let (lo, hi) = raw
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let data = if span > 0.0 {
        raw.data.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; raw.data.len()]
    };
    Ok(Slice2D(Grid2D {
        height: raw.height,
        width: raw.width,
        data,
    }))
}

/// True when every pixel has the same value.
pub fn is_constant(s: &Slice2D) -> bool {
    let first = s.pixels()[0];
    s.pixels().iter().all(|&p| p == first)
}

/// Bilinear resampling with pixel-center alignment
/// (`src = (dst + 0.5) * in / out - 0.5`, clamped at the borders).
pub fn resize_bilinear(src: &Grid2D, out_h: usize, out_w: usize) -> Grid2D {
    let (in_h, in_w) = (src.height, src.width);
    let axis = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(inp - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let rows = axis(out_h, in_h);
    let cols = axis(out_w, in_w);
    Grid2D::from_fn(out_h, out_w, |r, c| {
        let (r0, r1, fr) = rows[r];
        let (c0, c1, fc) = cols[c];
        let top = src.get(r0, c0) * (1.0 - fc) + src.get(r0, c1) * fc;
        let bottom = src.get(r1, c0) * (1.0 - fc) + src.get(r1, c1) * fc;
        top * (1.0 - fr) + bottom * fr
    })
}

/// Output size after the downscale step of [`conform`].
pub fn conform_size(height: usize, width: usize, target: usize) -> (usize, usize) {
    let longest = height.max(width);
    if longest <= target {
        return (height, width);
    }
    // round half up of dim * target / longest, in integer arithmetic
    let scaled = |d: usize| ((2 * d * target + longest) / (2 * longest)).max(1);
    (scaled(height), scaled(width))
}

/// Fits a slice into a `target x target` frame.
///
/// Slices larger than the frame are bilinearly downscaled so the longest side
/// equals `target` (aspect ratio kept); the result is zero-padded
/// symmetrically, with the odd extra pixel on the high side.
pub fn conform(s: &Slice2D, target: usize) -> Slice2D {
    let (h, w) = conform_size(s.height(), s.width(), target);
    let scaled = if (h, w) == (s.height(), s.width()) {
        s.grid().clone()
    } else {
        resize_bilinear(s.grid(), h, w)
    };
    let top = (target - h) / 2;
    let left = (target - w) / 2;
    let mut out = Grid2D::zeros(target, target);
    for r in 0..h {
        out.data[(top + r) * target + left..(top + r) * target + left + w].copy_from_slice(scaled.row(r));
    }
    Slice2D::from_grid_clamped(out)
}

/// A 3D scalar volume; `data` is stored x-fastest (index `x + nx * (y + ny * z)`).
#[derive(Clone, Debug)]
pub struct Volume3D {
    id: String,
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<f32>,
}

impl Volume3D {
    pub fn new(id: impl Into<String>, dims: [usize; 3], spacing: [f64; 3], data: Vec<f32>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Shape(format!("zero extent in dims {dims:?}")));
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::Shape(format!("{} voxels for dims {dims:?}", data.len())));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::invalid(format!("spacing {spacing:?} must be positive")));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Volume3D {
            id: id.into(),
            dims,
            spacing,
            data,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn voxel(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[x + self.dims[0] * (y + self.dims[1] * z)]
    }

    pub fn is_isotropic(&self) -> bool {
        let max = self.spacing.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.spacing.iter().cloned().fold(f64::MAX, f64::min);
        max / min <= ISOTROPY_TOLERANCE
    }

    /// Axis with the largest voxel spacing (first one on ties).
    pub fn acquisition_axis(&self) -> usize {
        let mut best = 0;
        for a in 1..3 {
            if self.spacing[a] > self.spacing[best] {
                best = a;
            }
        }
        best
    }

    /// Raw (unnormalized) slice perpendicular to `axis`.
    ///
    /// Axis 0 gives rows = z, cols = y; axis 1 gives rows = z, cols = x;
    /// axis 2 gives rows = y, cols = x.
    pub fn slice(&self, axis: usize, index: usize) -> Result<Grid2D> {
        if axis > 2 || index >= self.dims[axis] {
            return Err(Error::invalid(format!(
                "slice ({axis}, {index}) outside dims {:?}",
                self.dims
            )));
        }
        let [nx, ny, nz] = self.dims;
        let grid = match axis {
            0 => Grid2D::from_fn(nz, ny, |z, y| self.voxel(index, y, z) as f64),
            1 => Grid2D::from_fn(nz, nx, |z, x| self.voxel(x, index, z) as f64),
            _ => Grid2D::from_fn(ny, nx, |y, x| self.voxel(x, y, index) as f64),
        };
        Ok(grid)
    }
}

/// Location of a slice inside a named volume.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceRef {
    pub volume_id: String,
    pub axis: usize,
    pub index: usize,
}

impl SliceRef {
    pub fn extract(&self, v: &Volume3D) -> Result<Slice2D> {
        normalize(&v.slice(self.axis, self.index)?)
    }
}

/// Draws a normalized slice from `v`.
///
/// Draw order: one word for the axis (always consumed, ignored for
/// anisotropic volumes, which use their acquisition axis), then one word for
/// the index inside the central 80% of that axis.
pub fn random_slice(v: &Volume3D, rng: &mut SeedRng) -> Result<(Slice2D, SliceRef)> {
    if let Some(&d) = v.dims.iter().find(|&&d| d < MIN_VOLUME_DIM) {
        return Err(Error::invalid(format!(
            "volume {} has extent {d} < {MIN_VOLUME_DIM}",
            v.id
        )));
    }
    let drawn_axis = rng.index(3);
    let axis = if v.is_isotropic() {
        drawn_axis
    } else {
        v.acquisition_axis()
    };
    let n = v.dims[axis];
    let margin = n / 10;
    let index = margin + rng.index(n - 2 * margin);
    let slice_ref = SliceRef {
        volume_id: v.id.clone(),
        axis,
        index,
    };
    Ok((slice_ref.extract(v)?, slice_ref))
}

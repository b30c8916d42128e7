//! Layered-ellipse head phantoms for self-contained testing.
//!
//! The base geometry is the 3D modified Shepp-Logan head; every volume gets
//! its own jitter of centres, radii and intensities plus a few small random
//! lesions and a smooth low-frequency texture so slices are not piecewise
//! constant.

use crate::image::{normalize, Grid2D, Slice2D, Volume3D};
use crate::rng::{mix_seed, SeedRng};

struct Ellipsoid {
    value: f64,
    radii: [f64; 3],
    centre: [f64; 3],
    phi_deg: f64,
}

// value, radii (a, b, c), centre (x0, y0, z0), rotation about z
const SHEPP_LOGAN_3D: [(f64, [f64; 3], [f64; 3], f64); 10] = [
    (1.0, [0.69, 0.92, 0.81], [0.0, 0.0, 0.0], 0.0),
    (-0.8, [0.6624, 0.874, 0.78], [0.0, -0.0184, 0.0], 0.0),
    (-0.2, [0.11, 0.31, 0.22], [0.22, 0.0, 0.0], -18.0),
    (-0.2, [0.16, 0.41, 0.28], [-0.22, 0.0, 0.0], 18.0),
    (0.1, [0.21, 0.25, 0.41], [0.0, 0.35, -0.15], 0.0),
    (0.1, [0.046, 0.046, 0.05], [0.0, 0.1, 0.25], 0.0),
    (0.1, [0.046, 0.046, 0.05], [0.0, -0.1, 0.25], 0.0),
    (0.1, [0.046, 0.023, 0.05], [-0.08, -0.605, 0.0], 0.0),
    (0.1, [0.023, 0.023, 0.02], [0.0, -0.606, 0.0], 0.0),
    (0.1, [0.023, 0.046, 0.02], [0.06, -0.605, 0.0], 0.0),
];

struct Phantom {
    shapes: Vec<Ellipsoid>,
    texture: Vec<([f64; 3], f64, f64)>,
}

impl Phantom {
    fn random(seed: u64) -> Self {
        let mut rng = SeedRng::new(seed);
        let mut shapes: Vec<Ellipsoid> = SHEPP_LOGAN_3D
            .iter()
            .enumerate()
            .map(|(i, &(value, radii, centre, phi_deg))| {
                // keep the skull/brain pair nested: jitter them together
                let j = if i < 2 { 0.0 } else { 1.0 };
                let mut r = radii;
                let mut c = centre;
                for k in 0..3 {
                    r[k] *= 1.0 + j * rng.range(-0.08, 0.08);
                    c[k] += j * rng.range(-0.02, 0.02);
                }
                Ellipsoid {
                    value: value * (1.0 + j * rng.range(-0.3, 0.3)),
                    radii: r,
                    centre: c,
                    phi_deg: phi_deg + j * rng.range(-5.0, 5.0),
                }
            })
            .collect();
        for _ in 0..3 {
            let rad = rng.range(0.03, 0.08);
            shapes.push(Ellipsoid {
                value: rng.range(-0.08, 0.12),
                radii: [rad, rad * rng.range(0.6, 1.4), rad * rng.range(0.6, 1.4)],
                centre: [rng.range(-0.4, 0.4), rng.range(-0.5, 0.5), rng.range(-0.4, 0.4)],
                phi_deg: rng.range(-90.0, 90.0),
            });
        }
        let texture = (0..4)
            .map(|_| {
                let k = [rng.range(-6.0, 6.0), rng.range(-6.0, 6.0), rng.range(-6.0, 6.0)];
                (k, rng.range(0.0, std::f64::consts::TAU), rng.range(0.005, 0.02))
            })
            .collect();
        Phantom { shapes, texture }
    }

    fn value(&self, p: [f64; 3]) -> f64 {
        let mut v = 0.0;
        for e in &self.shapes {
            let (s, c) = e.phi_deg.to_radians().sin_cos();
            let dx = p[0] - e.centre[0];
            let dy = p[1] - e.centre[1];
            let dz = p[2] - e.centre[2];
            let x = c * dx + s * dy;
            let y = -s * dx + c * dy;
            let q = (x / e.radii[0]).powi(2) + (y / e.radii[1]).powi(2) + (dz / e.radii[2]).powi(2);
            if q <= 1.0 {
                v += e.value;
            }
        }
        if v > 0.0 {
            let wobble: f64 = self
                .texture
                .iter()
                .map(|(k, phase, amp)| amp * (k[0] * p[0] + k[1] * p[1] + k[2] * p[2] + phase).sin())
                .sum();
            v += wobble;
        }
        v.max(0.0)
    }
}

fn coord(i: usize, n: usize) -> f64 {
    (2.0 * i as f64 + 1.0) / n as f64 - 1.0
}

/// A jittered 3D head phantom on `dims` voxels.
pub fn phantom_volume(id: impl Into<String>, dims: [usize; 3], spacing: [f64; 3], seed: u64) -> Volume3D {
    let ph = Phantom::random(seed);
    let [nx, ny, nz] = dims;
    let mut data = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                // image rows run top to bottom, so flip y to keep the head upright
                data.push(ph.value([coord(x, nx), -coord(y, ny), coord(z, nz)]) as f32);
            }
        }
    }
    Volume3D::new(id, dims, spacing, data).expect("phantom dims are valid")
}

/// The central axial plane of a jittered phantom, normalized.
pub fn phantom_slice(height: usize, width: usize, seed: u64) -> Slice2D {
    let ph = Phantom::random(seed);
    let g = Grid2D::from_fn(height, width, |r, c| {
        ph.value([coord(c, width), -coord(r, height), 0.0])
    });
    normalize(&g).expect("phantom values are finite")
}

/// `count` anisotropic volumes with `size`×`size` slices along the
/// acquisition axis. The thick axis cycles through z, y, x so every slice
/// orientation is represented.
pub fn phantom_set(count: usize, size: usize, seed: u64) -> Vec<Volume3D> {
    let thick = (size / 8).max(crate::image::MIN_VOLUME_DIM);
    (0..count)
        .map(|i| {
            let axis = 2 - i % 3;
            let mut dims = [size; 3];
            let mut spacing = [1.0; 3];
            dims[axis] = thick;
            spacing[axis] = 4.0;
            phantom_volume(format!("phantom_{i:03}"), dims, spacing, mix_seed(seed, i as u64))
        })
        .collect()
}

//! In-plane rigid motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Grid2D;

pub const MAX_ROTATION_DEG: f64 = 15.0;
pub const MAX_TRANSLATION_PX: f64 = 12.0;

/// Rotation about the image centre followed by a translation, applied at
/// the fraction `time_fraction` of the acquisition.
///
/// `translation_px` is `[rows, cols]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion2D {
    pub rotation_deg: f64,
    pub translation_px: [f64; 2],
    pub time_fraction: f64,
}

impl RigidMotion2D {
    pub fn validate(&self) -> Result<()> {
        let finite = self.rotation_deg.is_finite()
            && self.translation_px.iter().all(|t| t.is_finite())
            && self.time_fraction.is_finite();
        if !finite {
            return Err(Error::invalid(format!("non-finite motion {self:?}")));
        }
        if self.rotation_deg.abs() > MAX_ROTATION_DEG {
            return Err(Error::invalid(format!(
                "rotation {} deg exceeds {MAX_ROTATION_DEG}",
                self.rotation_deg
            )));
        }
        if self.translation_px.iter().any(|t| t.abs() > MAX_TRANSLATION_PX) {
            return Err(Error::invalid(format!(
                "translation {:?} px exceeds {MAX_TRANSLATION_PX}",
                self.translation_px
            )));
        }
        if !(self.time_fraction > 0.0 && self.time_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "time fraction {} outside (0, 1)",
                self.time_fraction
            )));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.rotation_deg == 0.0 && self.translation_px == [0.0, 0.0]
    }
}

/// Validates every motion and checks that time fractions strictly increase.
pub fn validate_trajectory(motions: &[RigidMotion2D]) -> Result<()> {
    for m in motions {
        m.validate()?;
    }
    if motions.windows(2).any(|w| w[1].time_fraction <= w[0].time_fraction) {
        return Err(Error::invalid("motion time fractions must strictly increase"));
    }
    Ok(())
}

/// Resamples `g` under `motion` with bilinear interpolation; samples falling
/// outside the image read as zero.
pub fn apply_rigid(g: &Grid2D, motion: &RigidMotion2D) -> Grid2D {
    if motion.is_identity() {
        return g.clone();
    }
    let (h, w) = (g.height(), g.width());
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let (sin, cos) = motion.rotation_deg.to_radians().sin_cos();
    let [ty, tx] = motion.translation_px;
    let sample = |y: f64, x: f64| -> f64 {
        let y0 = y.floor();
        let x0 = x.floor();
        let fy = y - y0;
        let fx = x - x0;
        let mut acc = 0.0;
        for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
            for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
                let yy = y0 + dy;
                let xx = x0 + dx;
                let weight = wy * wx;
                if weight != 0.0 && yy >= 0.0 && xx >= 0.0 && yy < h as f64 && xx < w as f64 {
                    acc += weight * g.get(yy as usize, xx as usize);
                }
            }
        }
        acc
    };
    Grid2D::from_fn(h, w, |r, c| {
        // inverse map: undo the translation, then rotate back about the centre
        let dy = r as f64 - cy - ty;
        let dx = c as f64 - cx - tx;
        let sy = cos * dy - sin * dx + cy;
        let sx = sin * dy + cos * dx + cx;
        sample(sy, sx)
    })
}

//! Retrospective in-plane motion corruption in k-space.
//!
//! Phase-encode lines are the rows of the slice and are assumed to be
//! acquired top to bottom. Two schemes are provided:
//!
//! * **Composite**: the acquisition is split at the motion time points into
//!   contiguous row blocks; block `i` of the composite spectrum comes from
//!   the spectrum of the slice after motion `i` (block 0 from the original).
//! * **LineReplace**: each motion event overwrites one contiguous run of
//!   rows of the original spectrum with the rows of the moved slice's
//!   spectrum. Rows in the central 8% of k-space are never replaced.
//!
//! Both return the normalized magnitude of the inverse transform. Each
//! [`CorruptionRecord`] carries every parameter needed to replay it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft2, ifft2};
use crate::image::{normalize, Slice2D};
use crate::motion::{apply_rigid, validate_trajectory, RigidMotion2D};
use crate::rng::SeedRng;

pub const MAX_SEVERITY: u8 = 5;
pub const MAX_COMPOSITE_MOTIONS: usize = 4;
pub const MAX_LINE_EVENTS: usize = 6;
pub const MAX_LINE_FRACTION: f64 = 0.5;
/// Fraction of k-space rows around the centre that line replacement skips.
pub const CENTRAL_EXCLUSION: f64 = 0.08;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorruptionAlgorithm {
    Composite,
    LineReplace,
    None,
}

impl std::str::FromStr for CorruptionAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "composite" => Ok(CorruptionAlgorithm::Composite),
            "lines" | "line_replace" => Ok(CorruptionAlgorithm::LineReplace),
            "none" => Ok(CorruptionAlgorithm::None),
            other => Err(Error::invalid(format!("unknown corruption algorithm '{other}'"))),
        }
    }
}

/// Half-open run of k-space rows `[start, end)` replaced by event `event`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub event: usize,
    pub start: usize,
    pub end: usize,
}

/// Parameter ranges implied by a severity level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeverityBand {
    pub max_rotation_deg: f64,
    pub max_translation_px: f64,
    pub motions: usize,
    pub line_fraction: f64,
}

impl SeverityBand {
    /// Severity `s` allows rotations up to `2s` degrees, translations up to
    /// `2s` px, `ceil(s / 2)` motions (or line events) and replaces a
    /// fraction `0.08 s` of the rows.
    pub fn for_severity(severity: u8) -> Result<Self> {
        if !(1..=MAX_SEVERITY).contains(&severity) {
            return Err(Error::invalid(format!(
                "severity {severity} outside 1..={MAX_SEVERITY}"
            )));
        }
        let s = severity as f64;
        Ok(SeverityBand {
            max_rotation_deg: 2.0 * s,
            max_translation_px: 2.0 * s,
            motions: (severity as usize).div_ceil(2),
            line_fraction: 0.08 * s,
        })
    }

    fn draw_motion(&self, rng: &mut SeedRng, time_fraction: f64) -> RigidMotion2D {
        let r = self.max_rotation_deg;
        let t = self.max_translation_px;
        RigidMotion2D {
            rotation_deg: rng.range(-r, r),
            translation_px: [rng.range(-t, t), rng.range(-t, t)],
            time_fraction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub algorithm: CorruptionAlgorithm,
    /// 1..=5; 0 for [`CorruptionAlgorithm::None`] and hand-built records.
    pub severity: u8,
    pub motions: Vec<RigidMotion2D>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affected_lines: Vec<LineSpan>,
    pub seed: u64,
}

impl CorruptionRecord {
    pub fn none(seed: u64) -> Self {
        CorruptionRecord {
            algorithm: CorruptionAlgorithm::None,
            severity: 0,
            motions: Vec::new(),
            affected_lines: Vec::new(),
            seed,
        }
    }

    /// Re-applies the recorded corruption to `s`.
    pub fn apply(&self, s: &Slice2D) -> Result<Slice2D> {
        match self.algorithm {
            CorruptionAlgorithm::Composite => motion_corrupt_composite(s, &self.motions),
            CorruptionAlgorithm::LineReplace => apply_line_replacement(s, &self.motions, &self.affected_lines),
            CorruptionAlgorithm::None => Ok(s.clone()),
        }
    }
}

fn block_boundaries(height: usize, motions: &[RigidMotion2D]) -> Vec<usize> {
    let mut b = Vec::with_capacity(motions.len() + 2);
    b.push(0);
    for m in motions {
        b.push(((m.time_fraction * height as f64).round() as usize).min(height));
    }
    b.push(height);
    b
}

/// Composite-spectrum corruption with `motions` (1 to 4, time-ordered).
pub fn motion_corrupt_composite(s: &Slice2D, motions: &[RigidMotion2D]) -> Result<Slice2D> {
    if motions.is_empty() || motions.len() > MAX_COMPOSITE_MOTIONS {
        return Err(Error::invalid(format!(
            "composite corruption takes 1..={MAX_COMPOSITE_MOTIONS} motions, got {}",
            motions.len()
        )));
    }
    validate_trajectory(motions)?;
    let h = s.height();
    let bounds = block_boundaries(h, motions);
    let mut composite = fft2(s.grid());
    for (i, m) in motions.iter().enumerate() {
        let (lo, hi) = (bounds[i + 1], bounds[i + 2]);
        if lo >= hi {
            continue;
        }
        let moved = fft2(&apply_rigid(s.grid(), m));
        for r in lo..hi {
            composite.row_mut(r).copy_from_slice(moved.row(r));
        }
    }
    normalize(&ifft2(&composite).magnitude())
}

/// Rows eligible for replacement: everything outside the central band.
pub fn replaceable_rows(height: usize) -> Vec<usize> {
    let excluded = ((CENTRAL_EXCLUSION * height as f64).ceil() as usize).min(height);
    let lo = (height / 2).saturating_sub(excluded / 2);
    let hi = (lo + excluded).min(height);
    (0..lo).chain(hi..height).collect()
}

/// Collapses sorted row indices into contiguous spans tagged with `event`.
fn spans_of(event: usize, rows: &[usize]) -> Vec<LineSpan> {
    let mut spans: Vec<LineSpan> = Vec::new();
    for &r in rows {
        match spans.last_mut() {
            Some(last) if last.end == r => last.end += 1,
            _ => spans.push(LineSpan {
                event,
                start: r,
                end: r + 1,
            }),
        }
    }
    spans
}

/// Overwrites the rows in `spans` with rows from the spectrum of the slice
/// moved by `motions[span.event]`.
pub fn apply_line_replacement(s: &Slice2D, motions: &[RigidMotion2D], spans: &[LineSpan]) -> Result<Slice2D> {
    if motions.is_empty() || motions.len() > MAX_LINE_EVENTS {
        return Err(Error::invalid(format!(
            "line replacement takes 1..={MAX_LINE_EVENTS} events, got {}",
            motions.len()
        )));
    }
    validate_trajectory(motions)?;
    let h = s.height();
    if let Some(bad) = spans
        .iter()
        .find(|sp| sp.start >= sp.end || sp.end > h || sp.event >= motions.len())
    {
        return Err(Error::invalid(format!("line span {bad:?} invalid for {h} rows")));
    }
    let mut spectrum = fft2(s.grid());
    for (event, m) in motions.iter().enumerate() {
        let mine: Vec<_> = spans.iter().filter(|sp| sp.event == event).collect();
        if mine.is_empty() {
            continue;
        }
        let moved = fft2(&apply_rigid(s.grid(), m));
        for sp in mine {
            for r in sp.start..sp.end {
                spectrum.row_mut(r).copy_from_slice(moved.row(r));
            }
        }
    }
    normalize(&ifft2(&spectrum).magnitude())
}

/// Plans line-replacement events without touching pixels.
///
/// The replaceable rows are cut into `events` equal consecutive segments;
/// event `i` gets one run of `round(line_fraction * height / events)` rows at
/// a random offset inside segment `i`, so runs never overlap and their order
/// follows acquisition time. The event's time fraction is the acquisition
/// time of its first row.
///
/// Draw order per event: rotation, row shift, column shift, run offset.
pub fn plan_line_events(
    height: usize,
    events: usize,
    line_fraction: f64,
    max_rotation_deg: f64,
    max_translation_px: f64,
    rng: &mut SeedRng,
) -> Result<(Vec<RigidMotion2D>, Vec<LineSpan>)> {
    if !(1..=MAX_LINE_EVENTS).contains(&events) {
        return Err(Error::invalid(format!("events {events} outside 1..={MAX_LINE_EVENTS}")));
    }
    if !(line_fraction > 0.0 && line_fraction <= MAX_LINE_FRACTION) {
        return Err(Error::invalid(format!(
            "line fraction {line_fraction} outside (0, {MAX_LINE_FRACTION}]"
        )));
    }
    let rows = replaceable_rows(height);
    let segment = rows.len() / events;
    let run = ((line_fraction * height as f64 / events as f64).round() as usize).clamp(1, segment.max(1));
    if segment == 0 {
        return Err(Error::invalid(format!("{height} rows cannot host {events} events")));
    }
    let mut motions = Vec::with_capacity(events);
    let mut spans = Vec::new();
    for event in 0..events {
        let r = max_rotation_deg;
        let t = max_translation_px;
        let rotation_deg = rng.range(-r, r);
        let translation_px = [rng.range(-t, t), rng.range(-t, t)];
        let offset = event * segment + rng.index(segment - run + 1);
        let chosen = &rows[offset..offset + run];
        motions.push(RigidMotion2D {
            rotation_deg,
            translation_px,
            time_fraction: (chosen[0] as f64 + 0.5) / height as f64,
        });
        spans.extend(spans_of(event, chosen));
    }
    Ok((motions, spans))
}

/// Line-replacement corruption with freshly drawn events.
pub fn motion_corrupt_lines(
    s: &Slice2D,
    events: usize,
    line_fraction: f64,
    max_rotation_deg: f64,
    max_translation_px: f64,
    rng: &mut SeedRng,
) -> Result<(Slice2D, CorruptionRecord)> {
    let seed = rng.seed();
    let (motions, spans) = plan_line_events(
        s.height(),
        events,
        line_fraction,
        max_rotation_deg,
        max_translation_px,
        rng,
    )?;
    let out = apply_line_replacement(s, &motions, &spans)?;
    Ok((
        out,
        CorruptionRecord {
            algorithm: CorruptionAlgorithm::LineReplace,
            severity: 0,
            motions,
            affected_lines: spans,
            seed,
        },
    ))
}

/// Draws a composite trajectory: motion `i` of `n` happens near
/// `(i + 1) / (n + 1)`, jittered by up to a quarter of the spacing.
///
/// Draw order per motion: rotation, row shift, column shift, time jitter.
pub fn draw_composite_motions(band: &SeverityBand, rng: &mut SeedRng) -> Vec<RigidMotion2D> {
    let n = band.motions;
    let step = 1.0 / (n + 1) as f64;
    (0..n)
        .map(|i| {
            let mut m = band.draw_motion(rng, 0.0);
            m.time_fraction = (i + 1) as f64 * step + rng.range(-step / 4.0, step / 4.0);
            m
        })
        .collect()
}

/// Options for [`corrupt_random`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorruptConfig {
    /// When false, slices pass through and the record says `None`.
    pub enabled: bool,
    /// Severity is drawn uniformly from `1..=max_severity`.
    pub max_severity: u8,
    /// Forces one algorithm instead of drawing it. The draw is still made.
    pub algorithm: Option<CorruptionAlgorithm>,
    /// Forces the severity level. The draw is still made.
    pub severity: Option<u8>,
}

impl Default for CorruptConfig {
    fn default() -> Self {
        CorruptConfig {
            enabled: true,
            max_severity: MAX_SEVERITY,
            algorithm: None,
            severity: None,
        }
    }
}

/// Draws an algorithm and a severity, then the parameters within the
/// severity band, and corrupts `s`.
///
/// Draw order: algorithm, severity, then the algorithm's own draws.
pub fn corrupt_random(s: &Slice2D, rng: &mut SeedRng, cfg: &CorruptConfig) -> Result<(Slice2D, CorruptionRecord)> {
    let seed = rng.seed();
    if !cfg.enabled {
        return Ok((s.clone(), CorruptionRecord::none(seed)));
    }
    if !(1..=MAX_SEVERITY).contains(&cfg.max_severity) {
        return Err(Error::invalid(format!(
            "max severity {} outside 1..={MAX_SEVERITY}",
            cfg.max_severity
        )));
    }
    let drawn_algorithm = if rng.below(2) == 0 {
        CorruptionAlgorithm::Composite
    } else {
        CorruptionAlgorithm::LineReplace
    };
    let drawn_severity = 1 + rng.below(cfg.max_severity as u64) as u8;
    let algorithm = cfg.algorithm.unwrap_or(drawn_algorithm);
    let severity = cfg.severity.unwrap_or(drawn_severity);
    let band = SeverityBand::for_severity(severity)?;
    let (out, motions, affected_lines) = match algorithm {
        CorruptionAlgorithm::Composite => {
            let motions = draw_composite_motions(&band, rng);
            (motion_corrupt_composite(s, &motions)?, motions, Vec::new())
        }
        CorruptionAlgorithm::LineReplace => {
            let (motions, spans) = plan_line_events(
                s.height(),
                band.motions,
                band.line_fraction,
                band.max_rotation_deg,
                band.max_translation_px,
                rng,
            )?;
            (apply_line_replacement(s, &motions, &spans)?, motions, spans)
        }
        CorruptionAlgorithm::None => return Ok((s.clone(), CorruptionRecord::none(seed))),
    };
    Ok((
        out,
        CorruptionRecord {
            algorithm,
            severity,
            motions,
            affected_lines,
            seed,
        },
    ))
}

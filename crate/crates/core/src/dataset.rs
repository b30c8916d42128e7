//! Labelled sample generation: pick a volume and slice, augment contrast,
//! corrupt, conform both images to the network input size, and label the
//! pair with SSIM.
//!
//! Sample `i` of a run with master seed `m` uses seed `mix_seed(m, i)` and
//! three derived streams of it: 0 for volume and slice selection, 1 for
//! augmentation, 2 for corruption. A sample therefore depends only on its
//! index, never on scheduling.
//!
//! Both conformed images are quantized to the 16-bit PNG grid before SSIM is
//! computed, so the label is exactly reproducible from the stored files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::augment::{random_augment, AugRecord};
use crate::binning::ClassScheme;
use crate::corrupt::{corrupt_random, CorruptConfig, CorruptionRecord};
use crate::error::{Error, Result};
use crate::image::{conform, is_constant, normalize, random_slice, Slice2D, SliceRef, Volume3D, CONFORM_TARGET};
use crate::io::{png_bytes, write_atomic};
use crate::manifest::{sample_id, to_line, LabeledSample, Manifest, ManifestHeader, VolumeInfo, MANIFEST_FORMAT};
use crate::parallel::{map_ordered, Execution};
use crate::rng::{mix_seed, SeedRng};
use crate::ssim::{ssim_mean, SsimConfig};

/// Slice draws per sample before the volume is declared degenerate.
pub const SLICE_ATTEMPTS: usize = 10;

const STREAM_SLICE: u64 = 0;
const STREAM_AUGMENT: u64 = 1;
const STREAM_CORRUPT: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub augment: bool,
    pub corrupt: CorruptConfig,
    pub target: usize,
    pub ssim: SsimConfig,
    pub classes: Option<ClassScheme>,
    /// Also store the clean (augmented, conformed) image of each sample.
    pub keep_clean: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            augment: true,
            corrupt: CorruptConfig::default(),
            target: CONFORM_TARGET,
            ssim: SsimConfig::default(),
            classes: None,
            keep_clean: false,
        }
    }
}

/// One generated sample, held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSample {
    pub index: u64,
    pub slice_ref: SliceRef,
    pub aug: AugRecord,
    pub corruption: CorruptionRecord,
    pub ssim_label: f64,
    /// Conformed, quantized clean image (the SSIM reference).
    pub clean: Slice2D,
    /// Conformed, quantized corrupted image.
    pub corrupted: Slice2D,
}

/// Per-sample seed.
pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
    mix_seed(master_seed, index)
}

fn finish(
    index: u64,
    slice_ref: SliceRef,
    augmented: &Slice2D,
    aug: AugRecord,
    corrupted: &Slice2D,
    corruption: CorruptionRecord,
    cfg: &GenConfig,
) -> Result<SynthSample> {
    let clean = conform(augmented, cfg.target).quantize_u16();
    let corrupted = conform(corrupted, cfg.target).quantize_u16();
    let ssim_label = ssim_mean(&clean, &corrupted, &cfg.ssim)?.clamp(0.0, 1.0);
    Ok(SynthSample {
        index,
        slice_ref,
        aug,
        corruption,
        ssim_label,
        clean,
        corrupted,
    })
}

/// Runs the full pipeline for sample `index`.
pub fn synthesize(volumes: &[Volume3D], index: u64, master_seed: u64, cfg: &GenConfig) -> Result<SynthSample> {
    if volumes.is_empty() {
        return Err(Error::invalid("no volumes to sample from"));
    }
    let seed = sample_seed(master_seed, index);
    let mut slice_rng = SeedRng::derive(seed, STREAM_SLICE);
    let volume = &volumes[slice_rng.index(volumes.len())];
    let mut picked = None;
    for _ in 0..SLICE_ATTEMPTS {
        let (slice, slice_ref) = random_slice(volume, &mut slice_rng)?;
        if !is_constant(&slice) {
            picked = Some((slice, slice_ref));
            break;
        }
    }
    let (slice, slice_ref) = picked.ok_or_else(|| {
        Error::invalid(format!(
            "volume '{}' gave {SLICE_ATTEMPTS} constant slices in a row",
            volume.id()
        ))
    })?;
    let (augmented, aug) = random_augment(&slice, &mut SeedRng::derive(seed, STREAM_AUGMENT), cfg.augment)?;
    let augmented = normalize(augmented.grid())?;
    let (corrupted, corruption) = corrupt_random(&augmented, &mut SeedRng::derive(seed, STREAM_CORRUPT), &cfg.corrupt)?;
    finish(index, slice_ref, &augmented, aug, &corrupted, corruption, cfg)
}

/// Rebuilds a sample from its manifest row using only the recorded
/// parameters (no random draws).
pub fn replay(volumes: &[Volume3D], row: &LabeledSample, cfg: &GenConfig) -> Result<SynthSample> {
    let volume = volumes
        .iter()
        .find(|v| v.id() == row.slice_ref.volume_id)
        .ok_or_else(|| Error::invalid(format!("volume '{}' not loaded", row.slice_ref.volume_id)))?;
    let slice = row.slice_ref.extract(volume)?;
    let augmented = normalize(row.aug.apply(&slice)?.grid())?;
    let corrupted = row.corruption.apply(&augmented)?;
    finish(
        row.index,
        row.slice_ref.clone(),
        &augmented,
        row.aug.clone(),
        &corrupted,
        row.corruption.clone(),
        cfg,
    )
}

/// Generation settings as recorded in the manifest header.
pub fn header_for(volumes: &[Volume3D], n: u64, master_seed: u64, cfg: &GenConfig) -> ManifestHeader {
    ManifestHeader {
        format: MANIFEST_FORMAT.to_string(),
        generator_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed,
        n,
        ssim_config: cfg.ssim,
        conform_target: cfg.target,
        phase_encode_axis: "rows".to_string(),
        augment: cfg.augment,
        corrupt: cfg.corrupt.enabled,
        max_severity: cfg.corrupt.max_severity,
        classes: cfg.classes.map(|c| c.to_string()),
        volumes: volumes
            .iter()
            .map(|v| VolumeInfo {
                id: v.id().to_string(),
                dims: v.dims(),
                spacing: v.spacing(),
            })
            .collect(),
    }
}

/// Generation settings recovered from a manifest header.
pub fn config_from_header(h: &ManifestHeader) -> Result<GenConfig> {
    Ok(GenConfig {
        augment: h.augment,
        corrupt: CorruptConfig {
            enabled: h.corrupt,
            max_severity: h.max_severity,
            ..CorruptConfig::default()
        },
        target: h.conform_target,
        ssim: h.ssim_config,
        classes: h.classes.as_deref().map(str::parse).transpose()?,
        keep_clean: false,
    })
}

fn image_name(index: u64) -> String {
    format!("images/{}.png", sample_id(index))
}

fn clean_name(index: u64) -> String {
    format!("images/{}_clean.png", sample_id(index))
}

fn to_row(s: &SynthSample, cfg: &GenConfig) -> Result<LabeledSample> {
    Ok(LabeledSample {
        id: sample_id(s.index),
        index: s.index,
        slice_ref: s.slice_ref.clone(),
        aug: s.aug.clone(),
        corruption: s.corruption.clone(),
        ssim_label: s.ssim_label,
        image_path: image_name(s.index),
        clean_path: cfg.keep_clean.then(|| clean_name(s.index)),
        class_label: cfg.classes.map(|c| c.bin_of(s.ssim_label)).transpose()?,
    })
}

/// Generates samples `0..n` in memory.
pub fn synthesize_many(
    volumes: &[Volume3D],
    n: u64,
    master_seed: u64,
    cfg: &GenConfig,
    exec: Execution,
) -> Result<Vec<SynthSample>> {
    let indices: Vec<u64> = (0..n).collect();
    map_ordered(exec, &indices, |&i| {
        synthesize(volumes, i, master_seed, cfg).map_err(|e| Error::Sample {
            index: i,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect()
}

pub const MANIFEST_NAME: &str = "manifest.jsonl";
const PARTIAL_NAME: &str = "rows.partial.jsonl";

/// Rows already finished by an interrupted run with the same header.
fn resume_rows(out_dir: &Path, header: &ManifestHeader) -> BTreeMap<u64, LabeledSample> {
    let Ok(text) = std::fs::read_to_string(out_dir.join(PARTIAL_NAME)) else {
        return BTreeMap::new();
    };
    let mut lines = text.lines();
    let same_run = lines
        .next()
        .and_then(|l| serde_json::from_str::<ManifestHeader>(l).ok())
        .is_some_and(|h| &h == header);
    if !same_run {
        return BTreeMap::new();
    }
    lines
        .filter_map(|l| serde_json::from_str::<LabeledSample>(l).ok())
        .filter(|r| r.index < header.n && out_dir.join(&r.image_path).is_file())
        .map(|r| (r.index, r))
        .collect()
}

/// Generates `n` samples into `out_dir` (PNG images plus `manifest.jsonl`).
///
/// Finished rows are appended to a partial log as they complete; rerunning
/// with the same inputs after an interruption only generates the missing
/// indices. The manifest itself is written atomically, in index order, so
/// its bytes do not depend on the execution strategy.
pub fn generate_dataset(
    volumes: &[Volume3D],
    n: u64,
    master_seed: u64,
    cfg: &GenConfig,
    out_dir: &Path,
    exec: Execution,
) -> Result<Manifest> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if volumes.is_empty() {
        return Err(Error::invalid("no volumes to sample from"));
    }
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let header = header_for(volumes, n, master_seed, cfg);
    let mut done = resume_rows(out_dir, &header);
    if !done.is_empty() {
        log::info!("resuming: {} of {n} samples already present", done.len());
    }

    let partial_path = out_dir.join(PARTIAL_NAME);
    let mut partial_text = to_line(&header)? + "\n";
    for row in done.values() {
        partial_text.push_str(&to_line(row)?);
        partial_text.push('\n');
    }
    write_atomic(&partial_path, partial_text.as_bytes())?;
    let partial = std::fs::OpenOptions::new()
        .append(true)
        .open(&partial_path)
        .map_err(|e| Error::io(&partial_path, e))?;
    let partial = Mutex::new(partial);

    let todo: Vec<u64> = (0..n).filter(|i| !done.contains_key(i)).collect();
    let produced = map_ordered(exec, &todo, |&i| -> Result<LabeledSample> {
        let wrap = |e: Error| Error::Sample {
            index: i,
            source: Box::new(e),
        };
        let s = synthesize(volumes, i, master_seed, cfg).map_err(wrap)?;
        let row = to_row(&s, cfg).map_err(wrap)?;
        write_atomic(&out_dir.join(&row.image_path), &png_bytes(&s.corrupted).map_err(wrap)?).map_err(wrap)?;
        if let Some(clean) = &row.clean_path {
            write_atomic(&out_dir.join(clean), &png_bytes(&s.clean).map_err(wrap)?).map_err(wrap)?;
        }
        let line = to_line(&row).map_err(wrap)? + "\n";
        let mut f = partial.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())
            .map_err(|e| wrap(Error::io(&partial_path, e)))?;
        Ok(row)
    });
    for row in produced {
        let row = row?;
        done.insert(row.index, row);
    }

    let manifest = Manifest {
        header,
        rows: done.into_values().collect(),
    };
    manifest.write(&out_dir.join(MANIFEST_NAME))?;
    std::fs::remove_file(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
    Ok(manifest)
}

/// Resolves a manifest-relative path.
pub fn resolve(manifest_path: &Path, relative: &str) -> PathBuf {
    manifest_path.parent().unwrap_or_else(|| Path::new(".")).join(relative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::read_png;
    use crate::phantom::phantom_volume;

    fn volumes() -> Vec<Volume3D> {
        vec![
            phantom_volume("iso", [48, 48, 40], [1.0; 3], 1),
            phantom_volume("aniso", [56, 48, 16], [0.5, 0.5, 3.0], 2),
        ]
    }

    fn small_cfg() -> GenConfig {
        GenConfig {
            target: 64,
            ..GenConfig::default()
        }
    }

    #[test]
    fn same_index_same_sample() {
        let v = volumes();
        let cfg = small_cfg();
        let a = synthesize(&v, 5, 77, &cfg).unwrap();
        let b = synthesize(&v, 5, 77, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(png_bytes(&a.corrupted).unwrap(), png_bytes(&b.corrupted).unwrap());
        let c = synthesize(&v, 6, 77, &cfg).unwrap();
        assert_ne!(a.corrupted, c.corrupted);
    }

    #[test]
    fn no_corruption_labels_one() {
        let v = volumes();
        let cfg = GenConfig {
            corrupt: CorruptConfig {
                enabled: false,
                ..CorruptConfig::default()
            },
            ..small_cfg()
        };
        for i in 0..10 {
            let s = synthesize(&v, i, 3, &cfg).unwrap();
            assert!((s.ssim_label - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn replay_matches_generation() {
        let v = volumes();
        let cfg = small_cfg();
        for i in 0..12 {
            let s = synthesize(&v, i, 11, &cfg).unwrap();
            let row = to_row(&s, &cfg).unwrap();
            let json = to_line(&row).unwrap();
            let row: LabeledSample = serde_json::from_str(&json).unwrap();
            assert_eq!(replay(&v, &row, &cfg).unwrap(), s);
        }
    }

    #[test]
    fn degenerate_volume_rejected() {
        let flat = Volume3D::new("flat", [16, 16, 16], [1.0; 3], vec![2.0; 16 * 16 * 16]).unwrap();
        let err = synthesize(&[flat], 0, 0, &small_cfg()).unwrap_err();
        assert!(err.to_string().contains("constant"));
    }

    #[test]
    fn dataset_files_and_audit() {
        let dir = tempfile::tempdir().unwrap();
        let v = volumes();
        let cfg = GenConfig {
            keep_clean: true,
            classes: Some(ClassScheme::EqualBins(3)),
            ..small_cfg()
        };
        let m = generate_dataset(&v, 12, 9, &cfg, dir.path(), Execution::Sequential).unwrap();
        assert_eq!(m.rows.len(), 12);
        let path = dir.path().join(MANIFEST_NAME);
        let back = Manifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_jsonl().unwrap(), std::fs::read_to_string(&path).unwrap());
        assert!(!dir.path().join(PARTIAL_NAME).exists());
        for row in &m.rows {
            let corrupted = read_png(&resolve(&path, &row.image_path)).unwrap();
            let clean = read_png(&resolve(&path, row.clean_path.as_ref().unwrap())).unwrap();
            let again = ssim_mean(&clean, &corrupted, &cfg.ssim).unwrap().clamp(0.0, 1.0);
            assert!((again - row.ssim_label).abs() < 1e-9);
            assert_eq!(
                row.class_label,
                Some(ClassScheme::EqualBins(3).bin_of(row.ssim_label).unwrap())
            );
        }
        assert_eq!(config_from_header(&m.header).unwrap().classes, cfg.classes);
    }

    #[test]
    fn resume_skips_finished_rows() {
        let dir = tempfile::tempdir().unwrap();
        let v = volumes();
        let cfg = small_cfg();
        let full = generate_dataset(&v, 6, 4, &cfg, dir.path(), Execution::Sequential).unwrap();

        // simulate an interruption after three samples
        let header = header_for(&v, 6, 4, &cfg);
        let mut text = to_line(&header).unwrap() + "\n";
        for row in &full.rows[..3] {
            text += &(to_line(row).unwrap() + "\n");
        }
        std::fs::write(dir.path().join(PARTIAL_NAME), text).unwrap();
        std::fs::remove_file(dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(resume_rows(dir.path(), &header).len(), 3);
        let resumed = generate_dataset(&v, 6, 4, &cfg, dir.path(), Execution::Sequential).unwrap();
        assert_eq!(resumed, full);

        // a different seed ignores the stale log
        let other = header_for(&v, 6, 5, &cfg);
        std::fs::write(dir.path().join(PARTIAL_NAME), to_line(&header).unwrap() + "\n").unwrap();
        assert!(resume_rows(dir.path(), &other).is_empty());
    }

    #[test]
    fn zero_samples_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(generate_dataset(&volumes(), 0, 0, &small_cfg(), dir.path(), Execution::Sequential).is_err());
        assert!(generate_dataset(&[], 3, 0, &small_cfg(), dir.path(), Execution::Sequential).is_err());
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ssimqa::augment::{random_augment, AugKind, AugRecord};
use ssimqa::binning::ClassScheme;
use ssimqa::corrupt::{corrupt_random, CorruptConfig, CorruptionAlgorithm, MAX_SEVERITY};
use ssimqa::dataset::{self, GenConfig};
use ssimqa::eval;
use ssimqa::image::{Slice2D, CONFORM_TARGET};
use ssimqa::io;
use ssimqa::manifest::{Manifest, VolumeInfo};
use ssimqa::phantom::phantom_set;
use ssimqa::ssim::SsimConfig;
use ssimqa::{Execution, SeedRng, Volume3D};

use crate::{Failure, SeedArg};

type Outcome = Result<(), Failure>;

fn read_slice(path: &Path) -> Result<Slice2D, Failure> {
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    Ok(if is_png {
        io::read_png(path)?
    } else {
        io::read_raw_slice(path)?
    })
}

fn write_slice(path: &Path, s: &Slice2D) -> Result<(), Failure> {
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        io::write_png(path, s)?;
    } else {
        io::write_raw_slice(path, s)?;
    }
    Ok(())
}

fn parse_scheme(s: &str) -> Result<ClassScheme, String> {
    s.parse().map_err(|e: ssimqa::Error| e.to_string())
}

fn parse_severity(s: &str) -> Result<u8, String> {
    let v: u8 = s.parse().map_err(|e| format!("{e}"))?;
    if (1..=MAX_SEVERITY).contains(&v) {
        Ok(v)
    } else {
        Err(format!("severity must be in 1..={MAX_SEVERITY}"))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Algorithm {
    Composite,
    Lines,
}

impl From<Algorithm> for CorruptionAlgorithm {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Composite => CorruptionAlgorithm::Composite,
            Algorithm::Lines => CorruptionAlgorithm::LineReplace,
        }
    }
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// Input image (.png, or raw f32 with a .json sidecar).
    #[arg(long)]
    input: PathBuf,
    /// Output image; the format follows the extension.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    seed: SeedArg,
    /// Force one algorithm instead of drawing it.
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    /// Force a severity level.
    #[arg(long, value_parser = parse_severity)]
    severity: Option<u8>,
    /// Upper bound for the drawn severity.
    #[arg(long, default_value_t = MAX_SEVERITY, value_parser = parse_severity)]
    max_severity: u8,
}

pub fn corrupt(a: CorruptArgs) -> Outcome {
    let s = read_slice(&a.input)?;
    let seed = a.seed.resolve();
    let cfg = CorruptConfig {
        enabled: true,
        max_severity: a.max_severity,
        algorithm: a.algorithm.map(Into::into),
        severity: a.severity,
    };
    let (out, record) = corrupt_random(&s, &mut SeedRng::new(seed), &cfg)?;
    write_slice(&a.out, &out)?;
    println!("{}", serde_json::to_string(&record).expect("records serialize"));
    Ok(())
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    seed: SeedArg,
    /// Apply this transform (gamma, log, sigmoid, clahe) with the given
    /// --param values instead of drawing one.
    #[arg(long)]
    kind: Option<String>,
    /// Transform parameter as name=value (gamma; gain; cutoff, gain;
    /// clip_limit, tiles).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

pub fn augment(a: AugmentArgs) -> Outcome {
    let s = read_slice(&a.input)?;
    let (out, record) = match &a.kind {
        Some(kind) => {
            let kind: AugKind = kind.parse()?;
            let mut params = BTreeMap::new();
            for p in &a.params {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| Failure::usage(format!("--param '{p}' is not name=value")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Failure::usage(format!("--param '{p}' has a non-numeric value")))?;
                params.insert(k.trim().to_string(), v);
            }
            let record = AugRecord { kind, params, seed: 0 };
            (record.apply(&s)?, record)
        }
        None => {
            if !a.params.is_empty() {
                return Err(Failure::usage("--param needs --kind"));
            }
            let seed = a.seed.resolve();
            random_augment(&s, &mut SeedRng::new(seed), true)?
        }
    };
    write_slice(&a.out, &out)?;
    println!("{}", serde_json::to_string(&record).expect("records serialize"));
    Ok(())
}

#[derive(Debug, Args)]
pub struct SsimArgs {
    /// Reference image.
    a: PathBuf,
    /// Distorted image.
    b: PathBuf,
    /// Also write the SSIM map, rescaled from [-1, 1] to [0, 1].
    #[arg(long)]
    map: Option<PathBuf>,
}

pub fn ssim(a: SsimArgs) -> Outcome {
    let x = read_slice(&a.a)?;
    let y = read_slice(&a.b)?;
    let r = ssimqa::ssim::ssim(&x, &y, &SsimConfig::default(), a.map.is_some())?;
    if let (Some(path), Some(map)) = (&a.map, r.map) {
        let scaled = map.data().iter().map(|v| (v + 1.0) / 2.0).collect();
        let s = Slice2D::from_vec(map.height(), map.width(), scaled).map_err(Failure::Core)?;
        write_slice(path, &s.map(|v| v.clamp(0.0, 1.0)))?;
    }
    println!("{:.6}", r.mean);
    Ok(())
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Directory of volumes (.nii, .nii.gz, or .json raw sidecars). Without
    /// it a built-in phantom set derived from the seed is used.
    #[arg(long)]
    volumes: Option<PathBuf>,
    /// Number of built-in phantoms.
    #[arg(long, default_value_t = 3)]
    phantoms: usize,
    /// In-plane size of the built-in phantoms.
    #[arg(long, default_value_t = 256)]
    phantom_size: usize,
    /// Number of samples.
    #[arg(long)]
    n: u64,
    #[command(flatten)]
    seed: SeedArg,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    no_augment: bool,
    #[arg(long)]
    no_corruption: bool,
    #[arg(long, default_value_t = MAX_SEVERITY, value_parser = parse_severity)]
    max_severity: u8,
    /// Also record class labels under this scheme (3, 5, 10 or clinical).
    #[arg(long, value_parser = parse_scheme)]
    classes: Option<ClassScheme>,
    /// Also store each clean reference image.
    #[arg(long)]
    keep_clean: bool,
    /// Conformed image size.
    #[arg(long, default_value_t = CONFORM_TARGET)]
    target: usize,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

const PHANTOM_PREFIX: &str = "phantom_";

fn builtin_phantoms(count: usize, size: usize, seed: u64) -> Result<Vec<Volume3D>, Failure> {
    if count == 0 {
        return Err(Failure::usage("--phantoms must be at least 1"));
    }
    if size < ssimqa::image::MIN_VOLUME_DIM {
        return Err(Failure::usage(format!(
            "--phantom-size must be at least {}",
            ssimqa::image::MIN_VOLUME_DIM
        )));
    }
    Ok(phantom_set(count, size, seed))
}

pub fn gen(a: GenArgs) -> Outcome {
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    if a.target == 0 {
        return Err(Failure::usage("--target must be at least 1"));
    }
    let seed = a.seed.resolve();
    let volumes = match &a.volumes {
        Some(dir) => io::load_volume_dir(dir)?,
        None => builtin_phantoms(a.phantoms, a.phantom_size, seed)?,
    };
    let cfg = GenConfig {
        augment: !a.no_augment,
        corrupt: CorruptConfig {
            enabled: !a.no_corruption,
            max_severity: a.max_severity,
            ..Default::default()
        },
        target: a.target,
        ssim: SsimConfig::default(),
        classes: a.classes,
        keep_clean: a.keep_clean,
    };
    log::info!("generating {} samples from {} volumes", a.n, volumes.len());
    let m = dataset::generate_dataset(&volumes, a.n, seed, &cfg, &a.out, Execution::with_workers(a.workers))?;
    println!("{}", a.out.join(dataset::MANIFEST_NAME).display());
    log::info!("wrote {} rows", m.rows.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Sample id, e.g. s000042.
    #[arg(long)]
    id: String,
    /// Volume directory used for generation; omit for built-in phantoms.
    #[arg(long)]
    volumes: Option<PathBuf>,
    /// Write the regenerated image here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Rebuilds the built-in phantom set a manifest was generated from.
fn phantoms_for(m: &Manifest) -> Result<Vec<Volume3D>, Failure> {
    let info = &m.header.volumes;
    if info.is_empty() || !info.iter().all(|v| v.id.starts_with(PHANTOM_PREFIX)) {
        return Err(Failure::usage(
            "manifest was not generated from built-in phantoms; pass --volumes",
        ));
    }
    let size = info[0].dims.iter().copied().max().unwrap_or(0);
    let rebuilt = builtin_phantoms(info.len(), size, m.header.master_seed)?;
    let same = rebuilt.iter().zip(info).all(|(v, i)| {
        &VolumeInfo {
            id: v.id().to_string(),
            dims: v.dims(),
            spacing: v.spacing(),
        } == i
    });
    if !same {
        return Err(Failure::usage(
            "built-in phantoms do not match the manifest; pass --volumes",
        ));
    }
    Ok(rebuilt)
}

pub fn replay(a: ReplayArgs) -> Outcome {
    let m = Manifest::read(&a.manifest)?;
    let row = m
        .row(&a.id)
        .ok_or_else(|| Failure::usage(format!("no row '{}' in manifest", a.id)))?;
    let volumes = match &a.volumes {
        Some(dir) => io::load_volume_dir(dir)?,
        None => phantoms_for(&m)?,
    };
    let cfg = dataset::config_from_header(&m.header)?;
    let s = dataset::replay(&volumes, row, &cfg)?;
    let bytes = io::png_bytes(&s.corrupted)?;
    let stored_path = dataset::resolve(&a.manifest, &row.image_path);
    let image_match = match std::fs::read(&stored_path) {
        Ok(stored) => Some(stored == bytes),
        Err(_) => None,
    };
    if let Some(out) = &a.out {
        io::write_atomic(out, &bytes)?;
    }
    let label_match = s.ssim_label == row.ssim_label;
    println!(
        "{}",
        serde_json::json!({
            "id": row.id,
            "ssim_label": s.ssim_label,
            "label_match": label_match,
            "image_match": image_match,
        })
    );
    if !label_match || image_match == Some(false) {
        return Err(Failure::usage(format!(
            "replay of '{}' does not match the manifest",
            a.id
        )));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BinArgs {
    /// Class scheme: 3, 5, 10 (equal-width bins) or clinical.
    #[arg(long, value_parser = parse_scheme)]
    classes: ClassScheme,
    /// Label every row of this manifest.
    #[arg(long, requires = "out")]
    manifest: Option<PathBuf>,
    /// Where to write the labelled manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SSIM values to classify; prints the class table when none are given.
    values: Vec<f64>,
}

pub fn bin(a: BinArgs) -> Outcome {
    let ranges = a.classes.class_ranges();
    if let Some(path) = &a.manifest {
        let out = a.out.as_ref().expect("clap enforces --out");
        let mut m = Manifest::read(path)?;
        for row in &mut m.rows {
            row.class_label = Some(a.classes.bin_of(row.ssim_label)?);
        }
        m.header.classes = Some(a.classes.to_string());
        m.write(out)?;
        println!("{}", out.display());
    } else if a.values.is_empty() {
        for (i, r) in ranges.iter().enumerate() {
            println!("{}\t{r}", i + 1);
        }
    }
    for v in &a.values {
        let c = a.classes.bin_of(*v)?;
        println!("{v}\t{c}\t{}", ranges[c - 1]);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalRegressionArgs {
    /// Prediction CSV with header id,ssim_pred.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
    /// Also draw scatter and residual-histogram SVGs.
    #[arg(long)]
    svg: bool,
}

pub fn eval_regression(a: EvalRegressionArgs) -> Outcome {
    let m = Manifest::read(&a.manifest)?;
    let preds = eval::join_predictions(&eval::read_predictions(&a.pred)?, Some(&m), None)?;
    let r = eval::regression_report(&preds)?;
    eval::emit_regression(&a.out, &r, &preds, a.svg)?;
    println!(
        "n={} mu={:.6} sigma={:.6} slope={:.6} intercept={:.6} rmse={:.6}",
        r.n, r.residuals.mu, r.residuals.sigma, r.fit.slope, r.fit.intercept, r.rmse
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalClassificationArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Class scheme: 3, 5, 10 or clinical.
    #[arg(long, value_parser = parse_scheme)]
    classes: ClassScheme,
    #[arg(long)]
    out: PathBuf,
}

pub fn eval_classification(a: EvalClassificationArgs) -> Outcome {
    let m = Manifest::read(&a.manifest)?;
    let preds = eval::join_predictions(&eval::read_predictions(&a.pred)?, Some(&m), None)?;
    let r = eval::classification_report(&preds, a.classes)?;
    eval::emit_classification(&a.out, &r)?;
    print!("{}", eval::format_table(&r));
    Ok(())
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pred: PathBuf,
    /// CSV with header id,subjective_class (classes 1 to 3).
    #[arg(long)]
    subjective: PathBuf,
}

pub fn agreement(a: AgreementArgs) -> Outcome {
    let subj = eval::read_subjective(&a.subjective)?;
    let preds = eval::join_predictions(&eval::read_predictions(&a.pred)?, None, Some(&subj))?;
    let rate = eval::agreement_rate(&preds)?;
    println!("agreement={rate:.2}% n={}", preds.len());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
pub enum VolumeFormat {
    Raw,
    Nifti,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of volumes.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// In-plane size; the thick axis gets size/8 voxels.
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_enum, default_value = "nifti")]
    format: VolumeFormat,
}

pub fn phantom(a: PhantomArgs) -> Outcome {
    let seed = a.seed.resolve();
    let volumes = builtin_phantoms(a.n, a.size, seed)?;
    std::fs::create_dir_all(&a.out).map_err(|e| {
        Failure::Core(ssimqa::Error::Io {
            path: a.out.clone(),
            source: e,
        })
    })?;
    for v in &volumes {
        let path = match a.format {
            VolumeFormat::Raw => io::write_raw_volume(&a.out, v)?,
            VolumeFormat::Nifti => {
                let p = a.out.join(format!("{}.nii.gz", v.id()));
                io::write_nifti(&p, v)?;
                p
            }
        };
        println!("{}", path.display());
    }
    Ok(())
}

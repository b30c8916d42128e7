//! Report files: JSON summaries, confusion and scatter CSVs, a plain-text
//! classification table and simple SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{ClassReport, PredictionRecord, RegressionReport};
use crate::error::{Error, Result};
use crate::io::write_atomic;

fn json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| Error::format("report", e))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Per-class table with accuracy, macro and weighted rows.
pub fn format_table(r: &ClassReport) -> String {
    let mut out = String::new();
    let label_w = r
        .ranges
        .iter()
        .enumerate()
        .map(|(i, range)| format!("{} {range}", i + 1).len())
        .max()
        .unwrap_or(0)
        .max(12);
    let _ = writeln!(
        out,
        "{:<label_w$} {:>9} {:>9} {:>9} {:>9}",
        "Class (SSIM)", "precision", "recall", "f1-score", "support"
    );
    for (i, c) in r.per_class.iter().enumerate() {
        let label = match r.ranges.get(i) {
            Some(range) => format!("{} {range}", i + 1),
            None => format!("{}", i + 1),
        };
        let _ = writeln!(
            out,
            "{label:<label_w$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            c.precision, c.recall, c.f1, c.support
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<label_w$} {:>9} {:>9} {:>9.2} {:>9}",
        "accuracy",
        "",
        "",
        r.accuracy,
        r.total()
    );
    for (name, a) in [("macro avg", &r.macro_avg), ("weighted avg", &r.weighted_avg)] {
        let _ = writeln!(
            out,
            "{name:<label_w$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            a.precision, a.recall, a.f1, a.support
        );
    }
    out
}

fn confusion_csv<T: std::fmt::Display>(m: &[Vec<T>]) -> String {
    let k = m.len();
    let mut out = String::from("true\\pred");
    for c in 1..=k {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (t, row) in m.iter().enumerate() {
        let _ = write!(out, "{}", t + 1);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes `classification_<scheme>.{json,txt}` and
/// `confusion_<scheme>{,_normalized}.csv`; returns the paths.
pub fn emit_classification(dir: &Path, r: &ClassReport) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let files = [
        (format!("classification_{}.json", r.scheme), json(r)?),
        (format!("classification_{}.txt", r.scheme), format_table(r).into_bytes()),
        (
            format!("confusion_{}.csv", r.scheme),
            confusion_csv(&r.confusion).into_bytes(),
        ),
        (
            format!("confusion_{}_normalized.csv", r.scheme),
            confusion_csv(&r.confusion_normalized).into_bytes(),
        ),
    ];
    files
        .into_iter()
        .map(|(name, bytes)| {
            let p = dir.join(name);
            write_atomic(&p, &bytes)?;
            Ok(p)
        })
        .collect()
}

const PLOT: f64 = 400.0;
const MARGIN: f64 = 40.0;

fn svg_open(out: &mut String, title: &str) {
    let size = PLOT + 2.0 * MARGIN;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
        size / 2.0
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
}

/// Predicted against true SSIM on the unit square, with the identity line
/// and the fitted line.
pub fn scatter_svg(preds: &[PredictionRecord], report: &RegressionReport) -> String {
    let px = |v: f64| MARGIN + PLOT * v.clamp(0.0, 1.0);
    let py = |v: f64| MARGIN + PLOT * (1.0 - v.clamp(0.0, 1.0));
    let mut out = String::new();
    svg_open(&mut out, "predicted vs ground-truth SSIM");
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for p in preds {
        if let Some(t) = p.ssim_true {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="steelblue" fill-opacity="0.5"/>"#,
                px(t),
                py(p.ssim_pred)
            );
        }
    }
    let f = report.fit;
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson"/>"#,
        px(0.0),
        py(f.intercept),
        px(1.0),
        py(f.intercept + f.slope)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">slope {:.4}, intercept {:.4}</text>"#,
        MARGIN + 8.0,
        MARGIN + 16.0,
        f.slope,
        f.intercept
    );
    out.push_str("</svg>\n");
    out
}

/// Residual histogram (density) with the fitted normal curve.
pub fn residual_histogram_svg(residuals: &[f64], report: &RegressionReport) -> String {
    const BINS: usize = 50;
    let s = report.residuals;
    let half = (4.0 * s.sigma)
        .max(residuals.iter().fold(0.0f64, |m, r| m.max(r.abs())))
        .max(1e-6);
    let (lo, hi) = (-half, half);
    let width = (hi - lo) / BINS as f64;
    let mut counts = [0usize; BINS];
    for &r in residuals {
        let b = (((r - lo) / width) as usize).min(BINS - 1);
        counts[b] += 1;
    }
    let n = residuals.len().max(1) as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let normal = |x: f64| {
        if s.sigma > 0.0 {
            (-(x - s.mu).powi(2) / (2.0 * s.sigma * s.sigma)).exp() / (s.sigma * (2.0 * std::f64::consts::PI).sqrt())
        } else {
            0.0
        }
    };
    let peak = density.iter().cloned().fold(normal(s.mu), f64::max).max(1e-12);
    let px = |x: f64| MARGIN + PLOT * (x - lo) / (hi - lo);
    let py = |d: f64| MARGIN + PLOT * (1.0 - d / (1.05 * peak));
    let mut out = String::new();
    svg_open(&mut out, "residuals (predicted - ground truth)");
    for (i, &d) in density.iter().enumerate() {
        let x0 = lo + i as f64 * width;
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue" fill-opacity="0.6"/>"#,
            px(x0),
            py(d),
            px(x0 + width) - px(x0),
            py(0.0) - py(d)
        );
    }
    let pts: Vec<String> = (0..=200)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            format!("{:.2},{:.2}", px(x), py(normal(x)))
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="crimson"/>"#,
        pts.join(" ")
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">mu = {:.4}, sigma = {:.4}, n = {}</text>"#,
        MARGIN + 8.0,
        MARGIN + 16.0,
        s.mu,
        s.sigma,
        s.n
    );
    out.push_str("</svg>\n");
    out
}

/// Writes `regression.json`, `scatter.csv` and, when `svg` is set,
/// `scatter.svg` and `residuals.svg`; returns the paths.
pub fn emit_regression(
    dir: &Path,
    report: &RegressionReport,
    preds: &[PredictionRecord],
    svg: bool,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut scatter = String::from("id,ssim_pred,ssim_true\n");
    let mut res = Vec::with_capacity(preds.len());
    for p in preds {
        let t = p
            .ssim_true
            .ok_or_else(|| Error::invalid(format!("'{}' has no ground truth", p.id)))?;
        let _ = writeln!(scatter, "{},{},{}", p.id, p.ssim_pred, t);
        res.push(p.ssim_pred - t);
    }
    let mut files = vec![
        ("regression.json", json(report)?),
        ("scatter.csv", scatter.into_bytes()),
    ];
    if svg {
        files.push(("scatter.svg", scatter_svg(preds, report).into_bytes()));
        files.push(("residuals.svg", residual_histogram_svg(&res, report).into_bytes()));
    }
    files
        .into_iter()
        .map(|(name, bytes)| {
            let p = dir.join(name);
            write_atomic(&p, &bytes)?;
            Ok(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::ClassScheme;
    use crate::eval::{classification_report, regression_report};
    use crate::rng::SeedRng;

    fn preds(n: usize) -> Vec<PredictionRecord> {
        let mut rng = SeedRng::new(1);
        (0..n)
            .map(|i| {
                let t = rng.uniform();
                PredictionRecord::new(format!("s{i}"), (t + rng.range(-0.05, 0.05)).clamp(0.0, 1.0), t)
            })
            .collect()
    }

    #[test]
    fn classification_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = classification_report(&preds(300), ClassScheme::EqualBins(5)).unwrap();
        let files = emit_classification(dir.path(), &r).unwrap();
        assert_eq!(files.len(), 4);
        let back: ClassReport = serde_json::from_slice(&std::fs::read(&files[0]).unwrap()).unwrap();
        assert_eq!(back, r);
        let csv = std::fs::read_to_string(&files[2]).unwrap();
        for (line, c) in csv.lines().skip(1).zip(&r.per_class) {
            let sum: u64 = line.split(',').skip(1).map(|v| v.parse::<u64>().unwrap()).sum();
            assert_eq!(sum, c.support);
        }
        let table = std::fs::read_to_string(&files[1]).unwrap();
        assert!(table.contains("weighted avg") && table.contains("macro avg") && table.contains("accuracy"));
    }

    #[test]
    fn regression_files_deterministic() {
        let p = preds(200);
        let r = regression_report(&p).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = emit_regression(a.path(), &r, &p, true).unwrap();
        let fb = emit_regression(b.path(), &r, &p, true).unwrap();
        assert_eq!(fa.len(), 4);
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        let back: RegressionReport = serde_json::from_slice(&std::fs::read(&fa[0]).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}

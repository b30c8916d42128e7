//! Prediction (`id,ssim_pred`) and subjective-rating (`id,subjective_class`)
//! CSV files.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PredictionRecord;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::manifest::Manifest;

#[derive(Serialize, Deserialize)]
struct PredRow {
    id: String,
    ssim_pred: f64,
}

#[derive(Deserialize)]
struct SubjectiveRow {
    id: String,
    subjective_class: usize,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, what: &'static str) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| Error::format(what, format!("{}: {e}", path.display()))))
        .collect()
}

/// Reads `id,ssim_pred` rows; predictions must be finite.
pub fn read_predictions(path: &Path) -> Result<Vec<(String, f64)>> {
    let rows: Vec<PredRow> = read_rows(path, "prediction CSV")?;
    rows.into_iter()
        .map(|r| {
            if r.ssim_pred.is_finite() {
                Ok((r.id, r.ssim_pred))
            } else {
                Err(Error::invalid(format!("prediction for '{}' is not finite", r.id)))
            }
        })
        .collect()
}

pub fn write_predictions(path: &Path, preds: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (id, p) in preds {
        w.serialize(PredRow {
            id: id.clone(),
            ssim_pred: *p,
        })
        .map_err(|e| Error::format("prediction CSV", e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("prediction CSV", e))?;
    write_atomic(path, &bytes)
}

/// Reads `id,subjective_class` rows with classes in 1..=3.
pub fn read_subjective(path: &Path) -> Result<HashMap<String, usize>> {
    let rows: Vec<SubjectiveRow> = read_rows(path, "subjective CSV")?;
    let mut out = HashMap::with_capacity(rows.len());
    for r in rows {
        if !(1..=3).contains(&r.subjective_class) {
            return Err(Error::invalid(format!(
                "subjective class {} for '{}' outside 1..=3",
                r.subjective_class, r.id
            )));
        }
        if out.insert(r.id.clone(), r.subjective_class).is_some() {
            return Err(Error::invalid(format!("duplicate subjective rating for '{}'", r.id)));
        }
    }
    Ok(out)
}

/// Attaches ground truth from `manifest` and ratings from `subjective` to
/// each prediction. Every prediction id must be known to each source given.
pub fn join_predictions(
    preds: &[(String, f64)],
    manifest: Option<&Manifest>,
    subjective: Option<&HashMap<String, usize>>,
) -> Result<Vec<PredictionRecord>> {
    let labels: Option<HashMap<&str, f64>> =
        manifest.map(|m| m.rows.iter().map(|r| (r.id.as_str(), r.ssim_label)).collect());
    let mut seen = std::collections::HashSet::new();
    preds
        .iter()
        .map(|(id, p)| {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate prediction for '{id}'")));
            }
            let ssim_true = labels
                .as_ref()
                .map(|l| {
                    l.get(id.as_str())
                        .copied()
                        .ok_or_else(|| Error::invalid(format!("'{id}' not in manifest")))
                })
                .transpose()?;
            let subjective_class = subjective
                .map(|s| {
                    s.get(id)
                        .copied()
                        .ok_or_else(|| Error::invalid(format!("'{id}' has no subjective rating")))
                })
                .transpose()?;
            Ok(PredictionRecord {
                id: id.clone(),
                ssim_pred: *p,
                ssim_true,
                subjective_class,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.csv");
        let preds = vec![("s000000".to_string(), 0.25), ("s000001".to_string(), 0.987654321)];
        write_predictions(&p, &preds).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("id,ssim_pred\n"));
        assert_eq!(read_predictions(&p).unwrap(), preds);
    }

    #[test]
    fn subjective_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("subj.csv");
        std::fs::write(&p, "id,subjective_class\na,1\nb,3\n").unwrap();
        assert_eq!(read_subjective(&p).unwrap()["b"], 3);
        std::fs::write(&p, "id,subjective_class\na,4\n").unwrap();
        assert!(read_subjective(&p).is_err());
        std::fs::write(&p, "id,subjective_class\na,1\na,2\n").unwrap();
        assert!(read_subjective(&p).is_err());
    }

    #[test]
    fn join_requires_known_ids() {
        let mut subj = HashMap::new();
        subj.insert("a".to_string(), 2);
        let preds = vec![("a".to_string(), 0.7)];
        let joined = join_predictions(&preds, None, Some(&subj)).unwrap();
        assert_eq!(joined[0].subjective_class, Some(2));
        let preds = vec![("b".to_string(), 0.7)];
        assert!(join_predictions(&preds, None, Some(&subj)).is_err());
        let dup = vec![("a".to_string(), 0.7), ("a".to_string(), 0.8)];
        assert!(join_predictions(&dup, None, None).is_err());
    }
}

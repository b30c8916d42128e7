//! JSON-lines dataset manifest: one header object, then one object per
//! sample in index order. Image paths are relative to the manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugRecord;
use crate::corrupt::CorruptionRecord;
use crate::error::{Error, Result};
use crate::image::SliceRef;
use crate::io::write_atomic;
use crate::ssim::SsimConfig;

pub const MANIFEST_FORMAT: &str = "ssimqa-manifest/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeInfo {
    pub id: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub generator_version: String,
    pub master_seed: u64,
    pub n: u64,
    pub ssim_config: SsimConfig,
    pub conform_target: usize,
    /// Always `"rows"`: k-space rows are the phase-encode lines.
    pub phase_encode_axis: String,
    pub augment: bool,
    pub corrupt: bool,
    pub max_severity: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<String>,
    pub volumes: Vec<VolumeInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub id: String,
    pub index: u64,
    pub slice_ref: SliceRef,
    pub aug: AugRecord,
    pub corruption: CorruptionRecord,
    pub ssim_label: f64,
    pub image_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_label: Option<usize>,
}

pub fn sample_id(index: u64) -> String {
    format!("s{index:06}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub rows: Vec<LabeledSample>,
}

pub(crate) fn to_line<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::format("manifest", e))
}

impl Manifest {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = to_line(&self.header)?;
        out.push('\n');
        for row in &self.rows {
            out.push_str(&to_line(row)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::format("manifest", "empty file"))?;
        let header: ManifestHeader =
            serde_json::from_str(first).map_err(|e| Error::format("manifest", format!("header: {e}")))?;
        if header.format != MANIFEST_FORMAT {
            return Err(Error::format("manifest", format!("unknown format '{}'", header.format)));
        }
        let rows = lines
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::format("manifest", format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<LabeledSample>>>()?;
        let mut ids: Vec<&str> = rows.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::format("manifest", format!("duplicate id '{}'", w[0])));
        }
        Ok(Manifest { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl()?.as_bytes())
    }

    pub fn row(&self, id: &str) -> Option<&LabeledSample> {
        self.rows.iter().find(|r| r.id == id)
    }
}

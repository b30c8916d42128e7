use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};

use super::nifti::read_nifti;
use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::image::Volume3D;

/// JSON sidecar of the raw volume format. The data file holds
/// `dims[0] * dims[1] * dims[2]` little-endian float32 values, x fastest,
/// and is named `<sidecar stem>.raw` unless `data` says otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

fn read_raw_volume(sidecar: &Path) -> Result<Volume3D> {
    let meta: RawSidecar = serde_json::from_slice(&read_file(sidecar)?)
        .map_err(|e| Error::format("volume sidecar", format!("{}: {e}", sidecar.display())))?;
    let data_path = match &meta.data {
        Some(name) => sidecar.with_file_name(name),
        None => sidecar.with_extension("raw"),
    };
    let bytes = read_file(&data_path)?;
    let n: usize = meta.dims.iter().product();
    if bytes.len() != 4 * n {
        return Err(Error::format(
            "raw volume",
            format!(
                "{}: {} bytes for dims {:?}",
                data_path.display(),
                bytes.len(),
                meta.dims
            ),
        ));
    }
    let data = bytes.chunks_exact(4).map(LittleEndian::read_f32).collect();
    Volume3D::new(meta.id, meta.dims, meta.spacing, data)
}

/// Writes `<dir>/<id>.raw` and `<dir>/<id>.json`; returns the sidecar path.
pub fn write_raw_volume(dir: &Path, v: &Volume3D) -> Result<PathBuf> {
    let mut bytes = vec![0u8; 4 * v.data().len()];
    for (chunk, &x) in bytes.chunks_exact_mut(4).zip(v.data()) {
        LittleEndian::write_f32(chunk, x);
    }
    write_atomic(&dir.join(format!("{}.raw", v.id())), &bytes)?;
    let side = RawSidecar {
        dims: v.dims(),
        spacing: v.spacing(),
        id: v.id().to_string(),
        data: None,
    };
    let path = dir.join(format!("{}.json", v.id()));
    let json = serde_json::to_vec_pretty(&side).map_err(|e| Error::format("volume sidecar", e))?;
    write_atomic(&path, &json)?;
    Ok(path)
}

fn is_volume_file(path: &Path) -> bool {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    name.ends_with(".nii") || name.ends_with(".nii.gz") || name.ends_with(".json")
}

/// Loads a volume from a NIfTI file or a raw-format JSON sidecar.
pub fn load_volume(path: &Path) -> Result<Volume3D> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    if name.ends_with(".json") {
        read_raw_volume(path)
    } else if name.ends_with(".nii") || name.ends_with(".nii.gz") {
        read_nifti(path)
    } else {
        Err(Error::invalid(format!(
            "{}: not a .nii, .nii.gz or .json volume",
            path.display()
        )))
    }
}

/// Loads every volume in `dir`, sorted by file name. Ids must be unique.
pub fn load_volume_dir(dir: &Path) -> Result<Vec<Volume3D>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_volume_file(p))
        .collect();
    paths.sort();
    let volumes = paths.iter().map(|p| load_volume(p)).collect::<Result<Vec<_>>>()?;
    let mut ids: Vec<&str> = volumes.iter().map(|v| v.id()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("duplicate volume id '{}'", w[0])));
    }
    if volumes.is_empty() {
        return Err(Error::invalid(format!("no volumes found in {}", dir.display())));
    }
    Ok(volumes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_nifti;
    use crate::phantom::phantom_volume;

    #[test]
    fn raw_round_trip_and_directory_scan() {
        let dir = tempfile::tempdir().unwrap();
        let a = phantom_volume("b_vol", [10, 9, 8], [1.0, 1.0, 1.0], 1);
        let b = phantom_volume("a_vol", [8, 8, 8], [0.7, 0.7, 4.4], 2);
        let side = write_raw_volume(dir.path(), &a).unwrap();
        write_nifti(&dir.path().join("a_vol.nii.gz"), &b).unwrap();
        let back = load_volume(&side).unwrap();
        assert_eq!(back.data(), a.data());
        let all = load_volume_dir(dir.path()).unwrap();
        let ids: Vec<_> = all.iter().map(|v| v.id().to_string()).collect();
        assert_eq!(ids, ["a_vol", "b_vol"]);
    }

    #[test]
    fn truncated_raw_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = phantom_volume("v", [8, 8, 8], [1.0; 3], 1);
        write_raw_volume(dir.path(), &a).unwrap();
        std::fs::write(dir.path().join("v.raw"), [0u8; 12]).unwrap();
        assert!(load_volume(&dir.path().join("v.json")).is_err());
    }

    #[test]
    fn nan_voxels_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = phantom_volume("v", [8, 8, 8], [1.0; 3], 1);
        write_raw_volume(dir.path(), &a).unwrap();
        let mut bytes = std::fs::read(dir.path().join("v.raw")).unwrap();
        LittleEndian::write_f32(&mut bytes[8..], f32::NAN);
        std::fs::write(dir.path().join("v.raw"), bytes).unwrap();
        assert!(matches!(
            load_volume(&dir.path().join("v.json")),
            Err(Error::NonFinite { index: 2 })
        ));
    }

    #[test]
    fn empty_dir_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_volume_dir(dir.path()).is_err());
    }
}

//! File formats: slices as 16-bit PNG or raw float32, volumes as NIfTI-1 or
//! raw float32 with a JSON sidecar.

mod nifti;
mod slice;
mod volume;

pub use nifti::{read_nifti, write_nifti};
pub use slice::{png_bytes, read_png, read_raw_slice, write_png, write_raw_slice};
pub use volume::{load_volume, load_volume_dir, write_raw_volume, RawSidecar};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

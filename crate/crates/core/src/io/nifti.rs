//! Minimal NIfTI-1 single-file (`.nii`, `.nii.gz`) support: scalar data
//! types, either byte order, intensity scaling. Only the first 3D volume of
//! higher-dimensional data is read.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::image::Volume3D;

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

/// Volume id from a NIfTI file name: the name without `.nii` / `.nii.gz`.
pub(crate) fn nifti_stem(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.trim_end_matches(".gz").trim_end_matches(".nii").to_string()
}

struct Header<'a> {
    bytes: &'a [u8],
    big_endian: bool,
}

impl Header<'_> {
    fn i16(&self, off: usize) -> i16 {
        if self.big_endian {
            BigEndian::read_i16(&self.bytes[off..])
        } else {
            LittleEndian::read_i16(&self.bytes[off..])
        }
    }

    fn f32(&self, off: usize) -> f32 {
        if self.big_endian {
            BigEndian::read_f32(&self.bytes[off..])
        } else {
            LittleEndian::read_f32(&self.bytes[off..])
        }
    }
}

fn decode(bytes: &[u8], big_endian: bool, datatype: i16, count: usize) -> Result<Vec<f64>> {
    macro_rules! read_all {
        ($size:expr, $le:expr, $be:expr) => {{
            let need = count * $size;
            if bytes.len() < need {
                return Err(Error::format(
                    "NIfTI",
                    format!("{} data bytes, need {need}", bytes.len()),
                ));
            }
            bytes[..need]
                .chunks_exact($size)
                .map(|c| if big_endian { $be(c) } else { $le(c) })
                .collect()
        }};
    }
    let v: Vec<f64> = match datatype {
        2 => read_all!(1, |c: &[u8]| c[0] as f64, |c: &[u8]| c[0] as f64),
        256 => read_all!(1, |c: &[u8]| c[0] as i8 as f64, |c: &[u8]| c[0] as i8 as f64),
        4 => read_all!(2, |c| LittleEndian::read_i16(c) as f64, |c| BigEndian::read_i16(c)
            as f64),
        512 => read_all!(2, |c| LittleEndian::read_u16(c) as f64, |c| BigEndian::read_u16(c)
            as f64),
        8 => read_all!(4, |c| LittleEndian::read_i32(c) as f64, |c| BigEndian::read_i32(c)
            as f64),
        768 => read_all!(4, |c| LittleEndian::read_u32(c) as f64, |c| BigEndian::read_u32(c)
            as f64),
        16 => read_all!(4, |c| LittleEndian::read_f32(c) as f64, |c| BigEndian::read_f32(c)
            as f64),
        64 => read_all!(8, LittleEndian::read_f64, BigEndian::read_f64),
        other => return Err(Error::format("NIfTI", format!("unsupported datatype {other}"))),
    };
    Ok(v)
}

/// Reads a single-file NIfTI-1 volume.
pub fn read_nifti(path: &Path) -> Result<Volume3D> {
    let raw = read_file(path)?;
    let bytes = if is_gz(path) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::format("NIfTI", format!("{}: {e}", path.display())))?;
        out
    } else {
        raw
    };
    if bytes.len() < HEADER_SIZE {
        return Err(Error::format("NIfTI", "file shorter than header"));
    }
    let big_endian = match (LittleEndian::read_i32(&bytes), BigEndian::read_i32(&bytes)) {
        (348, _) => false,
        (_, 348) => true,
        _ => return Err(Error::format("NIfTI", "sizeof_hdr is not 348")),
    };
    if &bytes[344..347] != b"n+1" {
        return Err(Error::format("NIfTI", "only single-file n+1 images are supported"));
    }
    let h = Header {
        bytes: &bytes,
        big_endian,
    };
    let ndim = h.i16(40);
    if !(2..=7).contains(&ndim) {
        return Err(Error::format("NIfTI", format!("dim[0] = {ndim}")));
    }
    let dim = |i: usize| -> usize {
        if i as i16 <= ndim {
            h.i16(40 + 2 * i).max(1) as usize
        } else {
            1
        }
    };
    let dims = [dim(1), dim(2), dim(3)];
    let pix = |i: usize| -> f64 {
        let v = h.f32(76 + 4 * i).abs() as f64;
        if v > 0.0 && v.is_finite() {
            v
        } else {
            1.0
        }
    };
    let spacing = [pix(1), pix(2), pix(3)];
    let datatype = h.i16(70);
    let offset = h.f32(108).max(HEADER_SIZE as f32) as usize;
    if offset > bytes.len() {
        return Err(Error::format("NIfTI", "vox_offset past end of file"));
    }
    let count = dims.iter().product();
    let mut values = decode(&bytes[offset..], big_endian, datatype, count)?;
    let slope = h.f32(112) as f64;
    let inter = h.f32(116) as f64;
    if slope != 0.0 && slope.is_finite() && inter.is_finite() {
        for v in values.iter_mut() {
            *v = *v * slope + inter;
        }
    }
    let data = values.into_iter().map(|v| v as f32).collect();
    Volume3D::new(nifti_stem(path), dims, spacing, data)
}

/// Writes a little-endian float32 NIfTI-1 file; gzip when the name ends in `.gz`.
pub fn write_nifti(path: &Path, v: &Volume3D) -> Result<()> {
    let mut bytes = vec![0u8; DATA_OFFSET + 4 * v.data().len()];
    LittleEndian::write_i32(&mut bytes[0..], HEADER_SIZE as i32);
    let dims = v.dims();
    let mut dim = [1i16; 8];
    dim[0] = 3;
    for i in 0..3 {
        dim[i + 1] = i16::try_from(dims[i])
            .map_err(|_| Error::invalid(format!("dimension {} too large for NIfTI-1", dims[i])))?;
    }
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut bytes[40 + 2 * i..], *d);
    }
    LittleEndian::write_i16(&mut bytes[70..], 16);
    LittleEndian::write_i16(&mut bytes[72..], 32);
    let mut pixdim = [1.0f32; 8];
    for i in 0..3 {
        pixdim[i + 1] = v.spacing()[i] as f32;
    }
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut bytes[76 + 4 * i..], *p);
    }
    LittleEndian::write_f32(&mut bytes[108..], DATA_OFFSET as f32);
    LittleEndian::write_f32(&mut bytes[112..], 1.0);
    bytes[123] = 10; // xyzt_units: mm, s
    bytes[344..348].copy_from_slice(b"n+1\0");
    for (chunk, &x) in bytes[DATA_OFFSET..].chunks_exact_mut(4).zip(v.data()) {
        LittleEndian::write_f32(chunk, x);
    }
    if is_gz(path) {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        bytes = enc.finish().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::phantom_volume;

    #[test]
    fn round_trip_plain_and_gz() {
        let dir = tempfile::tempdir().unwrap();
        let v = phantom_volume("x", [12, 10, 9], [0.5, 0.5, 3.0], 4);
        for name in ["head.nii", "head.nii.gz"] {
            let p = dir.path().join(name);
            write_nifti(&p, &v).unwrap();
            let back = read_nifti(&p).unwrap();
            assert_eq!(back.id(), "head");
            assert_eq!(back.dims(), v.dims());
            assert_eq!(back.spacing(), v.spacing());
            assert_eq!(back.data(), v.data());
        }
    }

    #[test]
    fn big_endian_int16_with_scaling() {
        let mut bytes = vec![0u8; DATA_OFFSET + 2 * 8];
        BigEndian::write_i32(&mut bytes[0..], 348);
        for (i, d) in [3i16, 2, 2, 2].iter().enumerate() {
            BigEndian::write_i16(&mut bytes[40 + 2 * i..], *d);
        }
        BigEndian::write_i16(&mut bytes[70..], 4);
        BigEndian::write_f32(&mut bytes[80..], 2.0);
        BigEndian::write_f32(&mut bytes[84..], 2.0);
        BigEndian::write_f32(&mut bytes[88..], 2.0);
        BigEndian::write_f32(&mut bytes[108..], DATA_OFFSET as f32);
        BigEndian::write_f32(&mut bytes[112..], 0.5);
        BigEndian::write_f32(&mut bytes[116..], 1.0);
        bytes[344..348].copy_from_slice(b"n+1\0");
        for i in 0..8 {
            BigEndian::write_i16(&mut bytes[DATA_OFFSET + 2 * i..], i as i16 - 2);
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("be.nii");
        std::fs::write(&p, &bytes).unwrap();
        let v = read_nifti(&p).unwrap();
        assert_eq!(v.spacing(), [2.0; 3]);
        assert_eq!(v.data(), &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5]);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.nii");
        std::fs::write(&p, vec![7u8; 400]).unwrap();
        assert!(read_nifti(&p).is_err());
        std::fs::write(&p, vec![0u8; 10]).unwrap();
        assert!(read_nifti(&p).is_err());
    }
}

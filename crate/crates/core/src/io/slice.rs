use std::io::Cursor;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::image::{Grid2D, Slice2D};

/// Encodes a slice as 16-bit grayscale PNG, `value = round(p * 65535)`.
pub fn png_bytes(s: &Slice2D) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, s.width() as u32, s.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc.write_header().map_err(|e| Error::format("PNG", e))?;
        let mut data = vec![0u8; 2 * s.pixels().len()];
        for (chunk, &p) in data.chunks_exact_mut(2).zip(s.pixels()) {
            let v = (p * 65535.0).round() as u16;
            chunk.copy_from_slice(&v.to_be_bytes());
        }
        writer.write_image_data(&data).map_err(|e| Error::format("PNG", e))?;
    }
    Ok(out)
}

pub fn write_png(path: &Path, s: &Slice2D) -> Result<()> {
    write_atomic(path, &png_bytes(s)?)
}

/// Reads an 8- or 16-bit grayscale PNG into `[0, 1]`.
pub fn read_png(path: &Path) -> Result<Slice2D> {
    let bytes = read_file(path)?;
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::format("PNG", e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("PNG", "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::format("PNG", e))?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::format(
            "PNG",
            format!("{}: expected grayscale, found {:?}", path.display(), info.color_type),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let pixels: Vec<f64> = match info.bit_depth {
        png::BitDepth::Sixteen => (0..h)
            .flat_map(|r| {
                let line = &buf[r * info.line_size..r * info.line_size + 2 * w];
                line.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
                    .collect::<Vec<_>>()
            })
            .collect(),
        png::BitDepth::Eight => (0..h)
            .flat_map(|r| {
                buf[r * info.line_size..r * info.line_size + w]
                    .iter()
                    .map(|&b| b as f64 / 255.0)
                    .collect::<Vec<_>>()
            })
            .collect(),
        other => {
            return Err(Error::format("PNG", format!("unsupported bit depth {other:?}")));
        }
    };
    Slice2D::new(Grid2D::new(h, w, pixels)?)
}

#[derive(Serialize, Deserialize)]
struct SliceSidecar {
    height: usize,
    width: usize,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("json")
}

/// Writes little-endian row-major float32 pixels plus a `{height, width}`
/// JSON sidecar next to it.
pub fn write_raw_slice(path: &Path, s: &Slice2D) -> Result<()> {
    let mut bytes = vec![0u8; 4 * s.pixels().len()];
    for (chunk, &p) in bytes.chunks_exact_mut(4).zip(s.pixels()) {
        LittleEndian::write_f32(chunk, p as f32);
    }
    write_atomic(path, &bytes)?;
    let side = serde_json::to_vec(&SliceSidecar {
        height: s.height(),
        width: s.width(),
    })
    .map_err(|e| Error::format("sidecar", e))?;
    write_atomic(&sidecar_path(path), &side)
}

pub fn read_raw_slice(path: &Path) -> Result<Slice2D> {
    let side: SliceSidecar =
        serde_json::from_slice(&read_file(&sidecar_path(path))?).map_err(|e| Error::format("sidecar", e))?;
    let bytes = read_file(path)?;
    if bytes.len() != 4 * side.height * side.width {
        return Err(Error::format(
            "raw slice",
            format!("{} bytes for {}x{}", bytes.len(), side.height, side.width),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| LittleEndian::read_f32(c) as f64)
        .collect();
    Slice2D::new(Grid2D::new(side.height, side.width, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::phantom_slice;

    #[test]
    fn png_round_trip_is_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let s = phantom_slice(20, 30, 1);
        let p = dir.path().join("a.png");
        write_png(&p, &s).unwrap();
        let back = read_png(&p).unwrap();
        assert_eq!((back.height(), back.width()), (20, 30));
        assert_eq!(back, s.quantize_u16());
        // quantized slices survive exactly
        write_png(&p, &back).unwrap();
        assert_eq!(read_png(&p).unwrap(), back);
    }

    #[test]
    fn raw_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = phantom_slice(12, 17, 2);
        let p = dir.path().join("a.raw");
        write_raw_slice(&p, &s).unwrap();
        let back = read_raw_slice(&p).unwrap();
        for (a, b) in back.pixels().iter().zip(s.pixels()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_png(Path::new("/nonexistent/x.png")).unwrap_err();
        assert!(err.is_io());
    }
}

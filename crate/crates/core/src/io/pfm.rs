//! Portable float map reader/writer.
//!
//! Header: `Pf` (one channel) or `PF` (three channels), a `width height`
//! line and a scale line whose sign gives the byte order (negative means
//! little-endian). Rows follow as 32-bit floats, bottom row first.
//! In memory, rows are stored top-down.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, Point3};
use crate::surface_normal::NormalField;

#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Top-down, row-major, channels interleaved.
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedFormat(format!("{channels} channels")));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{channels} image needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }
}

fn header_line(reader: &mut impl BufRead) -> Result<String> {
    let mut line = Vec::new();
    let n = reader.read_until(b'\n', &mut line)?;
    if n == 0 {
        return Err(Error::Malformed("unexpected end of header".into()));
    }
    String::from_utf8(line)
        .map(|s| s.trim().to_string())
        .map_err(|_| Error::Malformed("non-text header".into()))
}

pub fn read_pfm(reader: impl Read) -> Result<PfmImage> {
    let mut reader = BufReader::new(reader);
    let channels = match header_line(&mut reader)?.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::Malformed(format!("bad magic {other:?}"))),
    };
    let dims = header_line(&mut reader)?;
    let mut it = dims.split_whitespace().map(str::parse::<usize>);
    let (width, height) = match (it.next(), it.next(), it.next()) {
        (Some(Ok(w)), Some(Ok(h)), None) if w > 0 && h > 0 => (w, h),
        _ => return Err(Error::Malformed(format!("bad dimensions line {dims:?}"))),
    };
    let scale_line = header_line(&mut reader)?;
    let scale: f64 = scale_line
        .parse()
        .map_err(|_| Error::Malformed(format!("bad scale line {scale_line:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Malformed(format!("bad scale {scale}")));
    }
    let little = scale < 0.0;

    let row_len = width * channels;
    let mut bytes = vec![0u8; row_len * height * 4];
    reader
        .read_exact(&mut bytes)
        .map_err(|_| Error::Malformed("truncated payload".into()))?;
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let data = values.chunks_exact(row_len).rev().flatten().copied().collect();
    PfmImage::new(width, height, channels, data)
}

/// Writes little-endian, bottom row first.
pub fn write_pfm(writer: impl Write, image: &PfmImage) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let magic = if image.channels == 3 { "PF" } else { "Pf" };
    write!(w, "{magic}\n{} {}\n-1.0\n", image.width, image.height)?;
    let row_len = image.width * image.channels;
    for row in image.data.chunks_exact(row_len).rev() {
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pfm_file(path: impl AsRef<Path>) -> Result<PfmImage> {
    read_pfm(File::open(path)?)
}

pub fn write_pfm_file(path: impl AsRef<Path>, image: &PfmImage) -> Result<()> {
    write_pfm(File::create(path)?, image)
}

/// Depth maps are single-channel; NaN, infinite and non-positive values
/// become invalid pixels.
pub fn depth_from_pfm(image: &PfmImage) -> Result<DepthMap> {
    if image.channels != 1 {
        return Err(Error::UnsupportedFormat("three-channel PF is not a depth map".into()));
    }
    DepthMap::new(image.width, image.height, image.data.iter().map(|&v| f64::from(v)).collect())
}

/// Invalid pixels are written as 0.
pub fn depth_to_pfm(depth: &DepthMap) -> PfmImage {
    PfmImage {
        width: depth.width(),
        height: depth.height(),
        channels: 1,
        data: depth.data().iter().map(|&v| v as f32).collect(),
    }
}

pub fn grid_to_pfm(width: usize, height: usize, values: &[f64]) -> Result<PfmImage> {
    PfmImage::new(width, height, 1, values.iter().map(|&v| v as f32).collect())
}

pub fn read_depth_pfm(path: impl AsRef<Path>) -> Result<DepthMap> {
    depth_from_pfm(&read_pfm_file(path)?)
}

pub fn write_depth_pfm(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    write_pfm_file(path, &depth_to_pfm(depth))
}

/// Normal maps use three-channel PFM with channels `(nx, ny, nz)`.
pub fn normals_from_pfm(image: &PfmImage) -> Result<NormalField> {
    if image.channels != 3 {
        return Err(Error::UnsupportedFormat("normal maps need three channels".into()));
    }
    let vectors = image
        .data
        .chunks_exact(3)
        .map(|c| Point3::new(f64::from(c[0]), f64::from(c[1]), f64::from(c[2])))
        .collect();
    NormalField::from_vectors(image.width, image.height, vectors)
}

pub fn normals_to_pfm(field: &NormalField) -> PfmImage {
    let data = field.normals.iter().flat_map(|n| [n.x as f32, n.y as f32, n.z as f32]).collect();
    PfmImage { width: field.width, height: field.height, channels: 3, data }
}

/// Headerless little-endian f32 depth, top row first.
pub fn read_raw_depth(path: impl AsRef<Path>, width: usize, height: usize) -> Result<DepthMap> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != width * height * 4 {
        return Err(Error::Malformed(format!(
            "raw depth has {} bytes, expected {} for {width}x{height}",
            bytes.len(),
            width * height * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
        .collect();
    DepthMap::new(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(image: &PfmImage) -> PfmImage {
        let mut buf = Vec::new();
        write_pfm(&mut buf, image).unwrap();
        read_pfm(&buf[..]).unwrap()
    }

    #[test]
    fn two_by_two_roundtrip() {
        let depth = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let back = depth_from_pfm(&roundtrip(&depth_to_pfm(&depth))).unwrap();
        assert_eq!(back, depth);
    }

    #[test]
    fn rows_are_stored_bottom_up() {
        let image = PfmImage::new(1, 2, 1, vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_pfm(&mut buf, &image).unwrap();
        let header = b"Pf\n1 2\n-1.0\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(&buf[header.len()..header.len() + 4], &2.0f32.to_le_bytes());
    }

    #[test]
    fn big_endian_read() {
        let mut buf = b"Pf\n2 1\n1.0\n".to_vec();
        buf.extend_from_slice(&1.5f32.to_be_bytes());
        buf.extend_from_slice(&(-2.0f32).to_be_bytes());
        let img = read_pfm(&buf[..]).unwrap();
        assert_eq!(img.data, vec![1.5, -2.0]);
    }

    #[test]
    fn color_variant_rejected_for_depth() {
        let img = PfmImage::new(1, 1, 3, vec![0.0, 0.0, 1.0]).unwrap();
        let back = roundtrip(&img);
        assert_eq!(back, img);
        assert!(matches!(depth_from_pfm(&back), Err(Error::UnsupportedFormat(_))));
        let normals = normals_from_pfm(&back).unwrap();
        assert_eq!(normals.normals[0], Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn nan_pixels_are_invalid() {
        let img = PfmImage::new(2, 1, 1, vec![f32::NAN, 2.0]).unwrap();
        let depth = depth_from_pfm(&roundtrip(&img)).unwrap();
        assert_eq!(depth.mask(), &[false, true]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_pfm(&b"P6\n1 1\n-1\n"[..]), Err(Error::Malformed(_))));
        assert!(matches!(read_pfm(&b"Pf\n1\n-1\n"[..]), Err(Error::Malformed(_))));
        assert!(matches!(read_pfm(&b"Pf\n1 1\n0\n\0\0\0\0"[..]), Err(Error::Malformed(_))));
        assert!(matches!(read_pfm(&b"Pf\n2 2\n-1\n\0\0\0\0"[..]), Err(Error::Malformed(_))));
        assert!(matches!(read_pfm(&b""[..]), Err(Error::Malformed(_))));
    }

    #[test]
    fn raw_depth() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.raw");
        let bytes: Vec<u8> = [1.0f32, 0.0, 2.5].iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(&path, bytes).unwrap();
        let d = read_raw_depth(&path, 3, 1).unwrap();
        assert_eq!(d.data(), &[1.0, 0.0, 2.5]);
        assert!(read_raw_depth(&path, 2, 1).is_err());
    }
}

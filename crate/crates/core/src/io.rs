//! Image file formats: grayscale PNG and the raw `ANIM` float format.
//!
//! `ANIM` layout (little-endian): 4-byte magic `ANIM`, `u32` width, `u32`
//! height, one reserved `u32` (written as 0, ignored on read), then
//! `width * height` row-major `f64` samples.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};

use crate::error::{Error, Result};
use crate::grid::Image;

pub const ANIM_MAGIC: &[u8; 4] = b"ANIM";
pub const ANIM_HEADER_LEN: usize = 16;

pub fn encode_anim(image: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(ANIM_HEADER_LEN + 8 * image.samples().len());
    out.extend_from_slice(ANIM_MAGIC);
    out.extend_from_slice(&(image.width() as u32).to_le_bytes());
    out.extend_from_slice(&(image.height() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in image.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_anim(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < ANIM_HEADER_LEN || &bytes[..4] != ANIM_MAGIC {
        return Err(Error::Format("missing ANIM header".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (width, height) = (word(4), word(8));
    let payload = &bytes[ANIM_HEADER_LEN..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("ANIM dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "ANIM payload is {} bytes, expected {expected} for {width}x{height}",
            payload.len()
        )));
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(width, height, samples)
}

/// Decodes an 8- or 16-bit grayscale PNG, mapping gray levels linearly to
/// `[0, 1]`.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::Format(format!("png: {e}")))?;
    let (width, height, samples): (u32, u32, Vec<f64>) = match decoded {
        DynamicImage::ImageLuma8(buf) => (
            buf.width(),
            buf.height(),
            buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageLuma16(buf) => (
            buf.width(),
            buf.height(),
            buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        ),
        other => {
            return Err(Error::Format(format!(
                "only grayscale PNG is supported, got {:?}",
                other.color()
            )))
        }
    };
    Image::new(width as usize, height as usize, samples)
}

/// Encodes a 16-bit grayscale PNG, stretching `[min, max]` of the samples to
/// the full gray range (a constant image maps to black).
pub fn encode_png(image: &Image) -> Result<Vec<u8>> {
    let (lo, hi) = image
        .samples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let levels: Vec<u16> = image
        .samples()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 65535.0).round() as u16
            } else {
                0
            }
        })
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(image.width() as u32, image.height() as u32, levels)
            .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageLuma16(buf)
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Format(format!("png: {e}")))?;
    Ok(out.into_inner())
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Reads a `.png` or `.anim` file (chosen by extension; anything that is not
/// `.png` is parsed as `ANIM`).
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_png(path) {
        decode_png(&bytes)
    } else {
        decode_anim(&bytes)
    }
}

pub fn write_image(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_png(path) {
        encode_png(image)?
    } else {
        encode_anim(image)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anim_header_layout() {
        let img = Image::from_fn(9, 8, |r, c| r as f64 - 0.5 * c as f64).unwrap();
        let bytes = encode_anim(&img);
        assert_eq!(&bytes[..4], b"ANIM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 9);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
        assert_eq!(bytes.len(), 16 + 72 * 8);
        assert_eq!(decode_anim(&bytes).unwrap(), img);
    }

    #[test]
    fn anim_rejects_truncated_payload() {
        let img = Image::filled(8, 8, 1.0).unwrap();
        let mut bytes = encode_anim(&img);
        bytes.pop();
        assert!(matches!(decode_anim(&bytes), Err(Error::Format(_))));
        assert!(decode_anim(b"NOPE").is_err());
    }

    #[test]
    fn png_round_trip_maps_to_unit_range() {
        let img = Image::from_fn(10, 8, |r, c| (r * 10 + c) as f64).unwrap();
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back.shape(), img.shape());
        assert_eq!(back.get(0, 0), 0.0);
        assert_eq!(back.get(7, 9), 1.0);
        let expected = 37.0 / 79.0;
        assert!((back.get(3, 7) - expected).abs() < 1.0 / 65535.0);
    }

    #[test]
    fn eight_bit_png_is_scaled_by_255() {
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
            ImageBuffer::from_fn(8, 8, |x, y| Luma([(x * 30 + y) as u8]));
        let mut bytes = Cursor::new(Vec::new());
        DynamicImage::ImageLuma8(buf)
            .write_to(&mut bytes, ImageFormat::Png)
            .unwrap();
        let img = decode_png(bytes.get_ref()).unwrap();
        assert!((img.get(2, 3) - 92.0 / 255.0).abs() < 1e-12);
    }
}

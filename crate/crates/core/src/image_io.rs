//! 16-bit depth and 8-bit mask PNG files.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::geometry::{BinaryMask, DepthImage};

fn open(path: &Path) -> Result<DynamicImage> {
    let reader = image::ImageReader::open(path)?;
    reader
        .decode()
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// Reads a single-channel 16-bit PNG of millimeter depths.
pub fn read_depth_png(path: impl AsRef<Path>) -> Result<DepthImage> {
    let path = path.as_ref();
    match open(path)? {
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            DepthImage::new(w, h, buf.into_raw())
        }
        other => Err(Error::Image(format!(
            "{}: depth must be 16-bit grayscale, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

pub fn write_depth_png(path: impl AsRef<Path>, depth: &DepthImage) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width, depth.height, depth.values.clone())
            .ok_or_else(|| Error::invalid("depth buffer size mismatch"))?;
    buf.save(path.as_ref())
        .map_err(|e| Error::Image(format!("{}: {e}", path.as_ref().display())))
}

/// Reads an 8-bit PNG mask; any nonzero pixel is part of the object.
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = open(path)?;
    let (w, h) = (img.width(), img.height());
    let values = img
        .into_luma8()
        .into_raw()
        .into_iter()
        .map(|p| p != 0)
        .collect();
    BinaryMask::new(w, h, values)
}

pub fn write_mask_png(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let raw = mask
        .values
        .iter()
        .map(|&m| if m { 255u8 } else { 0 })
        .collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width, mask.height, raw)
            .ok_or_else(|| Error::invalid("mask buffer size mismatch"))?;
    buf.save(path.as_ref())
        .map_err(|e| Error::Image(format!("{}: {e}", path.as_ref().display())))
}

//! PNG persistence for pixel grids.

use crate::imaging::{Bgr, BinaryMask, RawImage};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Codec {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: image has zero width or height")]
    Empty { path: String },
}

pub fn read_png(path: &Path) -> Result<RawImage, ImageIoError> {
    let codec = |source| ImageIoError::Codec {
        path: path.display().to_string(),
        source,
    };
    let rgb = image::open(path).map_err(codec)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.pixels().map(|p| Bgr([p[2], p[1], p[0]])).collect();
    RawImage::from_vec(w as usize, h as usize, data).map_err(|_| ImageIoError::Empty {
        path: path.display().to_string(),
    })
}

pub fn write_png(path: &Path, image: &RawImage) -> Result<(), ImageIoError> {
    let mut buf = Vec::with_capacity(image.width() * image.height() * 3);
    for p in image.as_slice() {
        let [b, g, r] = p.0;
        buf.extend_from_slice(&[r, g, b]);
    }
    image::save_buffer(
        path,
        &buf,
        image.width() as u32,
        image.height() as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|source| ImageIoError::Codec {
        path: path.display().to_string(),
        source,
    })
}

/// Single-channel debug export, 0 and 255.
pub fn write_mask_png(path: &Path, mask: &BinaryMask) -> Result<(), ImageIoError> {
    let buf: Vec<u8> = mask.as_slice().iter().map(|&c| if c { 255 } else { 0 }).collect();
    image::save_buffer(
        path,
        &buf,
        mask.width() as u32,
        mask.height() as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|source| ImageIoError::Codec {
        path: path.display().to_string(),
        source,
    })
}

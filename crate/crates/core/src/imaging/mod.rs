//! Pixel grids and the low-level operators the bounding pipeline is built from.
//!
//! Coordinates follow one convention everywhere: `x` is the column, `y` is the
//! row, and grids are stored row-major.

mod color;
mod geometry;
mod morphology;
mod resample;

pub use color::{bgr_to_hsv, bgr_to_hsv_pixel, hsv_to_bgr, hsv_to_bgr_pixel, in_range};
pub use geometry::{bounding_rect, centroid, crop, pad};
pub use morphology::{close, dilate, erode, StructuringElement};
pub use resample::{resize_by, resize_to, shorter_side_crop};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImagingError {
    #[error("mask has no nonzero cell")]
    EmptyMask,
    #[error("window {window:?} exceeds image extent {width}x{height}")]
    OutOfBounds {
        window: Rect,
        width: usize,
        height: usize,
    },
    #[error("invalid dimensions {width}x{height}: {reason}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        reason: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// A pixel in blue, green, red channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Bgr(pub [u8; 3]);

impl Bgr {
    pub const WHITE: Bgr = Bgr([255, 255, 255]);

    pub fn new(b: u8, g: u8, r: u8) -> Self {
        Bgr([b, g, r])
    }
}

/// A pixel in the half-degree hue convention: `h` in `[0, 180]`, `s` and `v`
/// in `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Hsv {
    pub h: u8,
    pub s: u8,
    pub v: u8,
}

impl Hsv {
    pub const WHITE: Hsv = Hsv { h: 0, s: 0, v: 255 };
    pub const MAX_HUE: u8 = 180;

    pub fn new(h: u8, s: u8, v: u8) -> Self {
        Hsv { h, s, v }
    }
}

/// Pixel types that can live in an image grid which gets padded and resampled.
pub trait Pixel: Copy + PartialEq + Send + Sync + std::fmt::Debug {
    /// Fill value used for whitespace padding.
    const WHITESPACE: Self;

    fn channels(&self) -> [u8; 3];
    fn from_channels(c: [u8; 3]) -> Self;
}

impl Pixel for Bgr {
    const WHITESPACE: Self = Bgr::WHITE;

    fn channels(&self) -> [u8; 3] {
        self.0
    }

    fn from_channels(c: [u8; 3]) -> Self {
        Bgr(c)
    }
}

impl Pixel for Hsv {
    const WHITESPACE: Self = Hsv::WHITE;

    fn channels(&self) -> [u8; 3] {
        [self.h, self.s, self.v]
    }

    fn from_channels(c: [u8; 3]) -> Self {
        Hsv {
            h: c[0].min(Hsv::MAX_HUE),
            s: c[1],
            v: c[2],
        }
    }
}

/// Row-major grid with at least one row and one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type RawImage = Grid<Bgr>;
pub type HsvImage = Grid<Hsv>;
pub type BinaryMask = Grid<bool>;

impl<T: Copy> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Grid {
            width,
            height,
            data: vec![value; width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(ImagingError::InvalidDimensions {
                width,
                height,
                reason: "buffer length does not match width * height",
            });
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Iterate `(x, y, value)` in row-major order.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i % w, i / w, v))
    }
}

impl BinaryMask {
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&c| c).count()
    }

    pub fn complement(&self) -> BinaryMask {
        self.map(|c| !c)
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(ImagingError::InvalidDimensions {
            width,
            height,
            reason: "width and height must be at least 1",
        });
    }
    Ok(())
}

/// Inclusive lower and upper HSV thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HsvBounds {
    pub lower: [u8; 3],
    pub upper: [u8; 3],
}

impl HsvBounds {
    /// High effective atomic number band: blue through violet hues with
    /// moderate saturation and value.
    pub const METALLIC: HsvBounds = HsvBounds {
        lower: [90, 100, 100],
        upper: [180, 255, 255],
    };

    pub fn new(lower: [u8; 3], upper: [u8; 3]) -> std::result::Result<Self, String> {
        let b = HsvBounds { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.lower[0] > Hsv::MAX_HUE || self.upper[0] > Hsv::MAX_HUE {
            return Err(format!("hue bound exceeds {}", Hsv::MAX_HUE));
        }
        for i in 0..3 {
            if self.lower[i] > self.upper[i] {
                return Err(format!(
                    "lower bound {:?} exceeds upper bound {:?} in channel {i}",
                    self.lower, self.upper
                ));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Hsv) -> bool {
        let c = p.channels();
        (0..3).all(|i| self.lower[i] <= c[i] && c[i] <= self.upper[i])
    }

    /// True when every pixel inside `self` is also inside `other`.
    pub fn is_subset_of(&self, other: &HsvBounds) -> bool {
        (0..3).all(|i| other.lower[i] <= self.lower[i] && self.upper[i] <= other.upper[i])
    }

    pub fn intersects(&self, other: &HsvBounds) -> bool {
        (0..3).all(|i| self.lower[i] <= other.upper[i] && other.lower[i] <= self.upper[i])
    }
}

impl Default for HsvBounds {
    fn default() -> Self {
        HsvBounds::METALLIC
    }
}

/// Axis-aligned rectangle; `x`/`y` are column/row offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    /// Containment for real-valued points, treating the rect as the closed
    /// span of pixel indices `[x, x + w - 1]`.
    pub fn contains_point(&self, cx: f64, cy: f64) -> bool {
        cx >= self.x as f64
            && cx <= (self.right() - 1) as f64
            && cy >= self.y as f64
            && cy <= (self.bottom() - 1) as f64
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }
}

/// Unweighted mean position of a mask's nonzero cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub cx: f64,
    pub cy: f64,
}

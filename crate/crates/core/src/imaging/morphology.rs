//! Binary erosion, dilation and closing with square all-ones structuring
//! elements.
//!
//! Erosion is `{p : p + b in X for all b in B}` and dilation is the Minkowski
//! sum `{x + b : x in X, b in B}`, so for even sizes the dilation footprint is
//! the reflection of the erosion footprint. Outside the frame the mask is 0.

use super::BinaryMask;
use serde::{Deserialize, Serialize};

/// The n x n all-ones matrix `J_n`, anchored at `(anchor, anchor)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    size: usize,
    anchor: usize,
}

impl StructuringElement {
    /// `J_n` with the anchor at `floor(n / 2)`. Panics if `n == 0`.
    pub fn square(n: usize) -> Self {
        assert!(n >= 1, "structuring element size must be positive");
        StructuringElement {
            size: n,
            anchor: n / 2,
        }
    }

    pub fn with_anchor(n: usize, anchor: usize) -> Self {
        assert!(n >= 1 && anchor < n, "anchor must lie inside the element");
        StructuringElement { size: n, anchor }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// Offsets covered by the element along one axis, inclusive.
    pub fn offsets(&self) -> (i64, i64) {
        let a = self.anchor as i64;
        (-a, self.size as i64 - 1 - a)
    }

    /// The point reflection `-B`.
    pub fn reflected(&self) -> Self {
        StructuringElement {
            size: self.size,
            anchor: self.size - 1 - self.anchor,
        }
    }
}

/// Summed-area table over a mask, one extra row and column of zeros.
struct Integral {
    width: usize,
    height: usize,
    sums: Vec<u32>,
}

impl Integral {
    fn new(mask: &BinaryMask) -> Self {
        let (w, h) = (mask.width(), mask.height());
        let stride = w + 1;
        let mut sums = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut run = 0u32;
            for (x, &c) in mask.row(y).iter().enumerate() {
                run += c as u32;
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + run;
            }
        }
        Integral {
            width: w,
            height: h,
            sums,
        }
    }

    /// Ones inside the inclusive window, clipped to the frame.
    fn count(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> u32 {
        let cx0 = x0.max(0) as usize;
        let cy0 = y0.max(0) as usize;
        let cx1 = (x1 + 1).min(self.width as i64);
        let cy1 = (y1 + 1).min(self.height as i64);
        if cx1 <= cx0 as i64 || cy1 <= cy0 as i64 {
            return 0;
        }
        let (cx1, cy1) = (cx1 as usize, cy1 as usize);
        let s = self.width + 1;
        self.sums[cy1 * s + cx1] + self.sums[cy0 * s + cx0]
            - self.sums[cy0 * s + cx1]
            - self.sums[cy1 * s + cx0]
    }
}

/// Cell is 1 iff every cell under the element's footprint is 1.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let integral = Integral::new(mask);
    let (lo, hi) = se.offsets();
    let full = (se.size() * se.size()) as u32;
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        integral.count(x + lo, x + hi, y + lo, y + hi) == full
    })
    .expect("dimensions come from a valid mask")
}

/// Cell is 1 iff some cell under the reflected footprint is 1.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let integral = Integral::new(mask);
    let (lo, hi) = se.reflected().offsets();
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        integral.count(x + lo, x + hi, y + lo, y + hi) > 0
    })
    .expect("dimensions come from a valid mask")
}

/// Morphological closing: dilation followed by erosion.
///
/// The intermediate dilation is not truncated at the frame edge: the mask is
/// embedded in a zero canvas wide enough to hold the whole dilation, closed
/// there, and cropped back. This keeps closing extensive and idempotent for
/// content that touches the border.
pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let margin = se.size();
    let (w, h) = (mask.width(), mask.height());
    let canvas = BinaryMask::from_fn(w + 2 * margin, h + 2 * margin, |x, y| {
        x >= margin && y >= margin && x < w + margin && y < h + margin && mask.get(x - margin, y - margin)
    })
    .expect("canvas is larger than a valid mask");
    let closed = erode(&dilate(&canvas, se), se);
    BinaryMask::from_fn(w, h, |x, y| closed.get(x + margin, y + margin))
        .expect("dimensions come from a valid mask")
}

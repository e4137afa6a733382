use super::{BinaryMask, Centroid, Grid, ImagingError, Pixel, Rect, Result};

pub fn centroid(mask: &BinaryMask) -> Result<Centroid> {
    let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
    for (x, y, v) in mask.enumerate() {
        if v {
            sx += x as u64;
            sy += y as u64;
            n += 1;
        }
    }
    if n == 0 {
        return Err(ImagingError::EmptyMask);
    }
    Ok(Centroid {
        cx: sx as f64 / n as f64,
        cy: sy as f64 / n as f64,
    })
}

/// Minimum upright rectangle covering every nonzero cell.
pub fn bounding_rect(mask: &BinaryMask) -> Result<Rect> {
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for (x, y, v) in mask.enumerate() {
        if !v {
            continue;
        }
        bounds = Some(match bounds {
            None => (x, x, y, y),
            Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
        });
    }
    let (x0, x1, y0, y1) = bounds.ok_or(ImagingError::EmptyMask)?;
    Ok(Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
}

/// Surrounds the image with whitespace.
pub fn pad<P: Pixel>(image: &Grid<P>, top: usize, bottom: usize, left: usize, right: usize) -> Grid<P> {
    let w = image.width() + left + right;
    let h = image.height() + top + bottom;
    Grid::from_fn(w, h, |x, y| {
        let inside = x >= left && x < left + image.width() && y >= top && y < top + image.height();
        if inside {
            image.get(x - left, y - top)
        } else {
            P::WHITESPACE
        }
    })
    .expect("padded dimensions are at least the source dimensions")
}

pub fn crop<T: Copy>(image: &Grid<T>, window: Rect) -> Result<Grid<T>> {
    if !window.fits_in(image.width(), image.height()) {
        return Err(ImagingError::OutOfBounds {
            window,
            width: image.width(),
            height: image.height(),
        });
    }
    Grid::from_fn(window.w, window.h, |x, y| image.get(window.x + x, window.y + y))
}

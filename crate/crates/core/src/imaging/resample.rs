use super::{crop, Grid, ImagingError, Pixel, Rect, Result};

/// Source coordinate and blend weight for one destination index, sampling at
/// pixel centers.
fn source_taps(dst: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    let s = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5).clamp(0.0, (src_len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, s - i0 as f64)
}

/// Bilinear resampling to an explicit `width x height`.
pub fn resize_to<P: Pixel>(image: &Grid<P>, width: usize, height: usize) -> Result<Grid<P>> {
    if width == 0 || height == 0 {
        return Err(ImagingError::InvalidDimensions {
            width,
            height,
            reason: "resize target must be at least 1x1",
        });
    }
    if width == image.width() && height == image.height() {
        return Ok(image.clone());
    }
    let cols: Vec<_> = (0..width)
        .map(|x| source_taps(x, image.width(), width))
        .collect();
    let rows: Vec<_> = (0..height)
        .map(|y| source_taps(y, image.height(), height))
        .collect();
    Grid::from_fn(width, height, |x, y| {
        let (x0, x1, fx) = cols[x];
        let (y0, y1, fy) = rows[y];
        let (p00, p10) = (image.get(x0, y0).channels(), image.get(x1, y0).channels());
        let (p01, p11) = (image.get(x0, y1).channels(), image.get(x1, y1).channels());
        let mut out = [0u8; 3];
        for c in 0..3 {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            out[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
        }
        P::from_channels(out)
    })
}

/// Scales both axes by `num / den`, flooring each target dimension and never
/// going below one pixel.
pub fn resize_by<P: Pixel>(image: &Grid<P>, num: usize, den: usize) -> Result<Grid<P>> {
    if num == 0 || den == 0 {
        return Err(ImagingError::InvalidDimensions {
            width: image.width(),
            height: image.height(),
            reason: "resize factor must be a positive ratio",
        });
    }
    let w = (image.width() * num / den).max(1);
    let h = (image.height() * num / den).max(1);
    resize_to(image, w, h)
}

/// Scales so the shorter side equals `target`, then centre-crops the longer
/// side, producing a `target x target` image.
pub fn shorter_side_crop<P: Pixel>(image: &Grid<P>, target: usize) -> Result<Grid<P>> {
    let (w, h) = (image.width(), image.height());
    let short = w.min(h);
    let scale = |len: usize| (((len * target) as f64 / short as f64).round() as usize).max(target);
    let (sw, sh) = if w <= h {
        (target, scale(h))
    } else {
        (scale(w), target)
    };
    let scaled = resize_to(image, sw, sh)?;
    let window = Rect::new((sw - target) / 2, (sh - target) / 2, target, target);
    crop(&scaled, window)
}

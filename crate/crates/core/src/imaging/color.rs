use super::{BinaryMask, Bgr, HsvBounds, HsvImage, Hsv, RawImage};

const SHIFT: u32 = 12;

/// `round(255 * 2^12 / i)`; index 0 unused.
const fn sat_div_table() -> [i64; 256] {
    let mut t = [0i64; 256];
    let mut i = 1;
    while i < 256 {
        t[i] = ((255i64 << (SHIFT + 1)) / i as i64 + 1) >> 1;
        i += 1;
    }
    t
}

/// `round(30 * 2^12 / i)`: hue in half-degrees per unit of `num / delta`.
const fn hue_div_table() -> [i64; 256] {
    let mut t = [0i64; 256];
    let mut i = 1;
    while i < 256 {
        t[i] = ((30i64 << (SHIFT + 1)) / i as i64 + 1) >> 1;
        i += 1;
    }
    t
}

const SAT_DIV: [i64; 256] = sat_div_table();
const HUE_DIV: [i64; 256] = hue_div_table();

/// Converts one pixel with 12-bit fixed-point reciprocals, matching the
/// common 8-bit BGR to HSV convention bit for bit: `H` in `[0, 180)`,
/// `S = 255 (V - min) / V`, `V = max`.
pub fn bgr_to_hsv_pixel(p: Bgr) -> Hsv {
    let [b, g, r] = p.0.map(i64::from);
    let v = b.max(g).max(r);
    let delta = v - b.min(g).min(r);
    let round = 1i64 << (SHIFT - 1);
    let s = (delta * SAT_DIV[v as usize] + round) >> SHIFT;
    let num = if v == r {
        g - b
    } else if v == g {
        b - r + 2 * delta
    } else {
        r - g + 4 * delta
    };
    let mut h = (num * HUE_DIV[delta as usize] + round) >> SHIFT;
    if h < 0 {
        h += Hsv::MAX_HUE as i64;
    }
    Hsv::new(h as u8, s as u8, v as u8)
}

pub fn bgr_to_hsv(image: &RawImage) -> HsvImage {
    image.map(bgr_to_hsv_pixel)
}

/// Inverse of [`bgr_to_hsv_pixel`] up to 8-bit quantization.
pub fn hsv_to_bgr_pixel(p: Hsv) -> Bgr {
    let h = (p.h as f64 * 2.0) % 360.0;
    let s = p.s as f64 / 255.0;
    let v = p.v as f64 / 255.0;
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |u: f64| ((u + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Bgr([q(b1), q(g1), q(r1)])
}

pub fn hsv_to_bgr(image: &HsvImage) -> RawImage {
    image.map(hsv_to_bgr_pixel)
}

/// Marks pixels whose three channels all lie inside the inclusive bounds.
pub fn in_range(image: &HsvImage, bounds: &HsvBounds) -> BinaryMask {
    image.map(|p| bounds.contains(p))
}

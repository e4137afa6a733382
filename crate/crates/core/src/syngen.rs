//! Deterministic synthetic false-colour scenes with known threat geometry.
//!
//! Threats are painted from HSV values inside the metallic band; background
//! and clutter are painted from values outside it. Every painted or jittered
//! pixel is checked after the round trip to BGR, so thresholding a generated
//! scene with [`HsvBounds::METALLIC`] marks exactly the threat footprint.

use crate::dataset::{write_manifest, ClassLabel, DatasetError, DatasetManifest, ImageRecord};
use crate::imaging::{
    bgr_to_hsv_pixel, dilate, erode, hsv_to_bgr_pixel, BinaryMask, Bgr, Centroid, Hsv, HsvBounds, RawImage, Rect,
    StructuringElement,
};
use crate::io::{write_png, ImageIoError};
use crate::seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SyngenError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThreatShape {
    Ellipse,
    Rectangle,
    LPolyomino,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degenerate {
    /// No threat at all.
    Empty,
    /// Rows sheared sideways, as from a scanner belt glitch.
    Distorted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub threat_shape: ThreatShape,
    /// Rectangle the threat shape is inscribed in.
    pub threat_bbox: Rect,
    pub threat_band: HsvBounds,
    pub clutter_count: usize,
    pub clutter_band: HsvBounds,
    /// Fraction of pixels that receive value jitter.
    pub noise_level: f64,
    pub degenerate: Option<Degenerate>,
}

/// Orange and green organic responses, all hues below the metallic band.
pub const ORGANIC_BAND: HsvBounds = HsvBounds {
    lower: [8, 90, 120],
    upper: [75, 255, 250],
};

const NOISE_AMPLITUDE: i16 = 16;
const MAX_COLOUR_TRIES: usize = 16;

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SyngenError> {
        let bad = |m: String| Err(SyngenError::InvalidSpec(m));
        if self.width == 0 || self.height == 0 {
            return bad("image must be at least 1x1".into());
        }
        self.threat_band.validate().map_err(SyngenError::InvalidSpec)?;
        self.clutter_band.validate().map_err(SyngenError::InvalidSpec)?;
        if !self.threat_band.is_subset_of(&HsvBounds::METALLIC) {
            return bad(format!("threat band {:?} is not inside the metallic band", self.threat_band));
        }
        if self.clutter_band.intersects(&HsvBounds::METALLIC) {
            return bad(format!("clutter band {:?} overlaps the metallic band", self.clutter_band));
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return bad(format!("noise level {} outside [0, 1]", self.noise_level));
        }
        if self.degenerate != Some(Degenerate::Empty) && (self.threat_bbox.w < 6 || self.threat_bbox.h < 6) {
            return bad(format!("threat bbox {:?} is smaller than 6x6", self.threat_bbox));
        }
        if self.degenerate != Some(Degenerate::Empty) && !self.threat_bbox.fits_in(self.width, self.height) {
            return bad(format!(
                "threat bbox {:?} does not fit in {}x{}",
                self.threat_bbox, self.width, self.height
            ));
        }
        Ok(())
    }

    /// Random non-degenerate scene whose threat lies well inside the frame.
    pub fn sample(rng: &mut impl Rng, width: usize, height: usize, threat_band: HsvBounds, noise_level: f64) -> Self {
        let shape = match rng.gen_range(0..3) {
            0 => ThreatShape::Ellipse,
            1 => ThreatShape::Rectangle,
            _ => ThreatShape::LPolyomino,
        };
        let w = rng.gen_range(20..=(width / 2).max(21));
        let h = rng.gen_range(16..=(height / 2).max(17));
        let (w, h) = (w.min(width - 8), h.min(height - 8));
        let x = rng.gen_range(4..=width - w - 4);
        let y = rng.gen_range(4..=height - h - 4);
        SceneSpec {
            width,
            height,
            threat_shape: shape,
            threat_bbox: Rect::new(x, y, w, h),
            threat_band,
            clutter_count: rng.gen_range(0..=4),
            clutter_band: ORGANIC_BAND,
            noise_level,
            degenerate: None,
        }
    }
}

/// Exact geometry of what was painted in the metallic band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub threat_bbox: Option<Rect>,
    pub threat_centroid: Option<Centroid>,
    pub threat_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_id: String,
    pub class_label: ClassLabel,
    pub imagegroup_id: String,
    pub scene: SceneTruth,
}

fn shape_footprint(shape: ThreatShape, r: Rect, width: usize, height: usize) -> BinaryMask {
    BinaryMask::from_fn(width, height, |x, y| {
        if !r.contains(x, y) {
            return false;
        }
        let (lx, ly) = (x - r.x, y - r.y);
        match shape {
            ThreatShape::Rectangle => true,
            ThreatShape::Ellipse => {
                let (a, b) = (r.w as f64 / 2.0, r.h as f64 / 2.0);
                let dx = (lx as f64 + 0.5 - a) / a;
                let dy = (ly as f64 + 0.5 - b) / b;
                dx * dx + dy * dy <= 1.0
            }
            // upper-right quadrant removed
            ThreatShape::LPolyomino => !(ly < r.h / 2 && lx >= r.w / 2),
        }
    })
    .expect("scene dimensions validated")
}

/// Opening by `J_3`: drops every part thinner than 3 px, so each threat pixel
/// lies in a 3x3 block of the footprint and a `J_3` erosion trims exactly one
/// pixel from each side of the bounding box.
fn open_footprint(mask: &BinaryMask) -> BinaryMask {
    let j3 = StructuringElement::square(3);
    dilate(&erode(mask, &j3), &j3)
}

fn sample_hsv(rng: &mut impl Rng, band: &HsvBounds) -> Hsv {
    Hsv::new(
        rng.gen_range(band.lower[0]..=band.upper[0]),
        rng.gen_range(band.lower[1]..=band.upper[1]),
        rng.gen_range(band.lower[2]..=band.upper[2]),
    )
}

fn band_centre(band: &HsvBounds) -> Hsv {
    let mid = |i: usize| ((band.lower[i] as u16 + band.upper[i] as u16) / 2) as u8;
    Hsv::new(mid(0), mid(1), mid(2))
}

fn metallic(p: Bgr) -> bool {
    HsvBounds::METALLIC.contains(bgr_to_hsv_pixel(p))
}

/// Draws a colour from `band` whose BGR quantization lands on the wanted side
/// of the metallic band.
fn pick_colour(rng: &mut impl Rng, band: &HsvBounds, want_metallic: bool) -> Result<Bgr, SyngenError> {
    for _ in 0..MAX_COLOUR_TRIES {
        let c = hsv_to_bgr_pixel(sample_hsv(rng, band));
        if metallic(c) == want_metallic {
            return Ok(c);
        }
    }
    let c = hsv_to_bgr_pixel(band_centre(band));
    if metallic(c) == want_metallic {
        Ok(c)
    } else {
        Err(SyngenError::InvalidSpec(format!(
            "band {band:?} has no colour that stays on the required side of the metallic band after quantization"
        )))
    }
}

fn paint_clutter(rng: &mut ChaCha8Rng, image: &mut RawImage, band: &HsvBounds) -> Result<(), SyngenError> {
    let (w, h) = (image.width(), image.height());
    let cw = rng.gen_range(1..=(w / 4).max(1));
    let ch = rng.gen_range(1..=(h / 4).max(1));
    let r = Rect::new(rng.gen_range(0..=w - cw), rng.gen_range(0..=h - ch), cw, ch);
    let shape = if rng.gen_bool(0.5) {
        ThreatShape::Ellipse
    } else {
        ThreatShape::Rectangle
    };
    let colour = pick_colour(rng, band, false)?;
    let footprint = shape_footprint(shape, r, w, h);
    for (x, y, inside) in footprint.enumerate() {
        if inside {
            image.set(x, y, colour);
        }
    }
    Ok(())
}

/// Shifts row `y` right by a smooth periodic offset; vacated cells become
/// `fill`.
fn shear_rows<T: Copy>(grid: &crate::imaging::Grid<T>, amplitude: f64, period: f64, fill: T) -> crate::imaging::Grid<T> {
    let offsets: Vec<i64> = (0..grid.height())
        .map(|y| (amplitude * (std::f64::consts::TAU * y as f64 / period).sin()).round() as i64)
        .collect();
    crate::imaging::Grid::from_fn(grid.width(), grid.height(), |x, y| {
        let src = x as i64 - offsets[y];
        if src >= 0 && (src as usize) < grid.width() {
            grid.get(src as usize, y)
        } else {
            fill
        }
    })
    .expect("same dimensions as the source")
}

fn jitter(rng: &mut impl Rng, p: Bgr) -> Bgr {
    Bgr(p.0.map(|c| (c as i16 + rng.gen_range(-NOISE_AMPLITUDE..=NOISE_AMPLITUDE)).clamp(0, 255) as u8))
}

fn footprint_truth(mask: &BinaryMask) -> SceneTruth {
    SceneTruth {
        threat_bbox: crate::imaging::bounding_rect(mask).ok(),
        threat_centroid: crate::imaging::centroid(mask).ok(),
        threat_pixels: mask.count_ones(),
    }
}

/// Renders a scene. The same `(spec, seed)` always produces identical pixels.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<(RawImage, SceneTruth), SyngenError> {
    spec.validate()?;
    let mut rng = seed::rng(seed, seed::streams::SCENE);
    let (w, h) = (spec.width, spec.height);
    let mut image = RawImage::filled(w, h, Bgr::WHITE).expect("validated dimensions");
    for _ in 0..spec.clutter_count {
        paint_clutter(&mut rng, &mut image, &spec.clutter_band)?;
    }

    let mut footprint = BinaryMask::filled(w, h, false).expect("validated dimensions");
    if spec.degenerate != Some(Degenerate::Empty) {
        footprint = open_footprint(&shape_footprint(spec.threat_shape, spec.threat_bbox, w, h));
        let base = pick_colour(&mut rng, &spec.threat_band, true)?;
        for (x, y, inside) in footprint.enumerate() {
            if inside {
                let c = hsv_to_bgr_pixel(sample_hsv(&mut rng, &spec.threat_band));
                image.set(x, y, if metallic(c) { c } else { base });
            }
        }
    }

    if spec.degenerate == Some(Degenerate::Distorted) {
        let amplitude = (w as f64 / 20.0).max(2.0);
        let period = (h as f64 / 2.0).max(4.0);
        image = shear_rows(&image, amplitude, period, Bgr::WHITE);
        footprint = shear_rows(&footprint, amplitude, period, false);
    }

    if spec.noise_level > 0.0 {
        for y in 0..h {
            for x in 0..w {
                if rng.gen_bool(spec.noise_level) {
                    let p = image.get(x, y);
                    let q = jitter(&mut rng, p);
                    if metallic(q) == footprint.get(x, y) {
                        image.set(x, y, q);
                    }
                }
            }
        }
    }
    Ok((image, footprint_truth(&footprint)))
}

/// Threat colour band for each class. Classes 0 to 3 use distinct hues; class
/// 4 shares the hue of class 0 with a lower saturation.
pub fn class_band(class: ClassLabel) -> HsvBounds {
    let (h, s) = match class {
        ClassLabel::AssaultRifle => (101, (205, 250)),
        ClassLabel::Revolver => (124, (205, 250)),
        ClassLabel::SelfLoadingPistol => (147, (205, 250)),
        ClassLabel::Shotgun => (169, (205, 250)),
        ClassLabel::SubMachineGun => (101, (130, 155)),
    };
    HsvBounds {
        lower: [h - 5, s.0, 150],
        upper: [h + 5, s.1, 250],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub width: usize,
    pub height: usize,
    pub views_per_group: usize,
    pub noise_level: f64,
    /// Probability that a view is replaced by an empty acquisition.
    pub empty_rate: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            width: 160,
            height: 120,
            views_per_group: 3,
            noise_level: 0.05,
            empty_rate: 0.0,
        }
    }
}

/// One image of a corpus before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedImage {
    pub image_id: String,
    pub imagegroup_id: String,
    pub class: ClassLabel,
    pub spec: SceneSpec,
    pub scene_seed: u64,
}

/// Moves the group's base threat for one view: a translation plus, on odd
/// views, a quarter turn of the bounding box when it still fits.
fn perturb_view(rng: &mut impl Rng, base: &SceneSpec, view: usize) -> SceneSpec {
    let mut spec = base.clone();
    let mut r = base.threat_bbox;
    if view % 2 == 1 && r.h + 8 <= base.width && r.w + 8 <= base.height {
        std::mem::swap(&mut r.w, &mut r.h);
    }
    let jitter = |rng: &mut dyn rand::RngCore, pos: usize, len: usize, frame: usize| {
        let lo = (pos as i64 - 10).max(4);
        let hi = (pos as i64 + 10).min(frame as i64 - len as i64 - 4);
        if lo >= hi {
            ((frame - len) / 2) as usize
        } else {
            rng.gen_range(lo..=hi) as usize
        }
    };
    r.x = jitter(rng, r.x, r.w, base.width);
    r.y = jitter(rng, r.y, r.h, base.height);
    spec.threat_bbox = r;
    spec.clutter_count = rng.gen_range(0..=4);
    spec
}

pub fn plan_corpus(class_counts: &[(ClassLabel, usize)], corpus: &CorpusSpec, seed: u64) -> Result<Vec<PlannedImage>, SyngenError> {
    if corpus.views_per_group == 0 {
        return Err(SyngenError::InvalidSpec("views per group must be positive".into()));
    }
    if corpus.width < 48 || corpus.height < 40 {
        return Err(SyngenError::InvalidSpec("corpus images must be at least 48x40".into()));
    }
    let corpus_seed = seed::derive(seed, seed::streams::CORPUS);
    let mut planned = Vec::new();
    for &(class, count) in class_counts {
        let mut rng = seed::rng(corpus_seed, class.id() as u64);
        let band = class_band(class);
        let groups = count.div_ceil(corpus.views_per_group);
        for g in 0..groups {
            let group_id = format!("c{}_g{:04}", class.id(), g);
            let base = SceneSpec::sample(&mut rng, corpus.width, corpus.height, band, corpus.noise_level);
            let views = corpus.views_per_group.min(count - g * corpus.views_per_group);
            for v in 0..views {
                let mut spec = perturb_view(&mut rng, &base, v);
                if corpus.empty_rate > 0.0 && rng.gen_bool(corpus.empty_rate.min(1.0)) {
                    spec.degenerate = Some(Degenerate::Empty);
                }
                planned.push(PlannedImage {
                    image_id: format!("{group_id}_v{v}"),
                    imagegroup_id: group_id.clone(),
                    class,
                    spec,
                    scene_seed: rng.gen(),
                });
            }
        }
    }
    Ok(planned)
}

pub struct Corpus {
    pub manifest: DatasetManifest,
    pub truths: Vec<GroundTruth>,
    pub manifest_path: PathBuf,
}

/// Renders every planned image to `<out_dir>/<image_id>.png` and writes
/// `<out_dir>/manifest.csv`.
pub fn generate_corpus(
    class_counts: &[(ClassLabel, usize)],
    corpus: &CorpusSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<Corpus, SyngenError> {
    use rayon::prelude::*;

    let planned = plan_corpus(class_counts, corpus, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|source| SyngenError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let truths = planned
        .par_iter()
        .map(|p| {
            let (image, scene) = generate_scene(&p.spec, p.scene_seed)?;
            write_png(&out_dir.join(format!("{}.png", p.image_id)), &image)?;
            Ok(GroundTruth {
                image_id: p.image_id.clone(),
                class_label: p.class,
                imagegroup_id: p.imagegroup_id.clone(),
                scene,
            })
        })
        .collect::<Result<Vec<_>, SyngenError>>()?;
    let records = planned
        .iter()
        .map(|p| ImageRecord {
            image_id: p.image_id.clone(),
            path: PathBuf::from(format!("{}.png", p.image_id)),
            class: p.class,
            imagegroup_id: p.imagegroup_id.clone(),
        })
        .collect();
    let manifest = DatasetManifest::new(records, format!("synthetic corpus, seed {seed}"))?.with_base_dir(out_dir);
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &manifest)?;
    Ok(Corpus {
        manifest,
        truths,
        manifest_path,
    })
}

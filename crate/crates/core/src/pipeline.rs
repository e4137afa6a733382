//! Maximal information bounding.
//!
//! Pass one thresholds each scan to its metallic response, cleans the mask
//! with an erosion followed by a closing, and records the response's centroid
//! and bounding rectangle. The mean rectangle size over the corpus becomes a
//! single fixed window. Pass two pads each scan by half a window on every
//! side, cuts the window anchored at the centroid, and halves it.

use crate::dataset::DatasetManifest;
use crate::imaging::{
    bgr_to_hsv, bounding_rect, centroid, close, crop, erode, in_range, pad, resize_by, shorter_side_crop, Centroid,
    HsvBounds, RawImage, Rect, StructuringElement,
};
use crate::io::{read_png, write_png};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no image produced a metallic response; the mean window is undefined")]
    NoContributors,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub hsv_bounds: HsvBounds,
    /// Side of the erosion element (`J_3`).
    pub erode_size: usize,
    /// Side of the closing element (`J_10`).
    pub close_size: usize,
    /// Output scale as `[numerator, denominator]`.
    pub resize_factor: [usize; 2],
    /// Also emit a square `target x target` crop (224 or 299).
    pub network_input: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            hsv_bounds: HsvBounds::METALLIC,
            erode_size: 3,
            close_size: 10,
            resize_factor: [1, 2],
            network_input: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        self.hsv_bounds.validate().map_err(PipelineError::InvalidConfig)?;
        if self.erode_size == 0 || self.close_size == 0 {
            return bad("structuring element sizes must be positive".into());
        }
        if self.resize_factor[0] == 0 || self.resize_factor[1] == 0 {
            return bad("resize factor must be a positive ratio".into());
        }
        if let Some(n) = self.network_input {
            if n != 224 && n != 299 {
                return bad(format!("network input must be 224 or 299, got {n}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassOneRecord {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub centroid: Option<Centroid>,
    pub brect: Option<Rect>,
    pub empty_mask: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWindow {
    pub w: f64,
    pub h: f64,
    pub count: usize,
}

impl MeanWindow {
    /// Integer window dimensions, rounded up.
    pub fn dims(&self) -> (usize, usize) {
        ((self.w.ceil() as usize).max(1), (self.h.ceil() as usize).max(1))
    }
}

/// The cleaned metallic mask: `(inRange(hsv) ⊖ J_erode) • J_close`.
pub fn response_mask(image: &RawImage, cfg: &PipelineConfig) -> crate::imaging::BinaryMask {
    let mask = in_range(&bgr_to_hsv(image), &cfg.hsv_bounds);
    let eroded = erode(&mask, &StructuringElement::square(cfg.erode_size));
    close(&eroded, &StructuringElement::square(cfg.close_size))
}

pub fn analyze_image(image_id: &str, image: &RawImage, cfg: &PipelineConfig) -> PassOneRecord {
    let morphed = response_mask(image, cfg);
    let (centroid, brect) = match (centroid(&morphed), bounding_rect(&morphed)) {
        (Ok(c), Ok(r)) => (Some(c), Some(r)),
        _ => (None, None),
    };
    PassOneRecord {
        image_id: image_id.to_string(),
        width: image.width(),
        height: image.height(),
        empty_mask: centroid.is_none(),
        centroid,
        brect,
    }
}

/// Arithmetic mean of the non-empty records' rectangle sizes.
pub fn compute_mean_window(records: &[PassOneRecord]) -> Result<MeanWindow, PipelineError> {
    let (sw, sh, n) = records
        .iter()
        .filter_map(|r| r.brect)
        .fold((0u64, 0u64, 0usize), |(sw, sh, n), b| (sw + b.w as u64, sh + b.h as u64, n + 1));
    if n == 0 {
        return Err(PipelineError::NoContributors);
    }
    Ok(MeanWindow {
        w: sw as f64 / n as f64,
        h: sh as f64 / n as f64,
        count: n,
    })
}

/// Sequential form `mean += (x - mean) / (count + 1)`.
pub fn running_mean_window(records: &[PassOneRecord]) -> Result<MeanWindow, PipelineError> {
    let mut mw = MeanWindow {
        w: 0.0,
        h: 0.0,
        count: 0,
    };
    for b in records.iter().filter_map(|r| r.brect) {
        let k = 1.0 / (mw.count as f64 + 1.0);
        mw.w += k * (b.w as f64 - mw.w);
        mw.h += k * (b.h as f64 - mw.h);
        mw.count += 1;
    }
    if mw.count == 0 {
        return Err(PipelineError::NoContributors);
    }
    Ok(mw)
}

/// Pads by half the window on each side and cuts the window whose origin, in
/// padded coordinates, is the rounded centroid. Records without a response use
/// the image centre.
pub fn extract_window(image: &RawImage, rec: &PassOneRecord, mw: &MeanWindow, cfg: &PipelineConfig) -> RawImage {
    let (ww, wh) = mw.dims();
    let (top, bottom) = (wh / 2, wh.div_ceil(2));
    let (left, right) = (ww / 2, ww.div_ceil(2));
    let c = rec.centroid.unwrap_or(Centroid {
        cx: (image.width() - 1) as f64 / 2.0,
        cy: (image.height() - 1) as f64 / 2.0,
    });
    let ox = (c.cx.round() as usize).min(image.width() - 1);
    let oy = (c.cy.round() as usize).min(image.height() - 1);
    let padded = pad(image, top, bottom, left, right);
    let window = crop(&padded, Rect::new(ox, oy, ww, wh)).expect("padding always contains the window");
    let [num, den] = cfg.resize_factor;
    resize_by(&window, num, den).expect("config validated")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedImage {
    pub image_id: String,
    /// File names relative to the output directory.
    pub output: PathBuf,
    pub network_output: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub image_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub config: PipelineConfig,
    pub mean_window: MeanWindow,
    pub window_dims: [usize; 2],
    pub output_dims: [usize; 2],
    pub colour_space: String,
    pub records: Vec<PassOneRecord>,
    pub empty_masks: Vec<String>,
    pub outputs: Vec<ProcessedImage>,
    pub failures: Vec<RecordFailure>,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub elapsed_seconds: f64,
}

pub fn network_output_name(image_id: &str, target: usize) -> String {
    format!("{image_id}_{target}.png")
}

/// Runs both passes over a manifest, writing `<output_dir>/<image_id>.png`
/// (and `<image_id>_<target>.png` when a network input size is set). Read and
/// write failures are collected per record.
pub fn preprocess_corpus(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    output_dir: &Path,
) -> Result<PreprocessReport, PipelineError> {
    cfg.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(output_dir).map_err(|source| PipelineError::Io {
        path: output_dir.display().to_string(),
        source,
    })?;

    let pass_one: Vec<Result<PassOneRecord, RecordFailure>> = manifest
        .records()
        .par_iter()
        .map(|r| {
            let image = read_png(&manifest.resolve(r)).map_err(|e| RecordFailure {
                image_id: r.image_id.clone(),
                error: e.to_string(),
            })?;
            Ok(analyze_image(&r.image_id, &image, cfg))
        })
        .collect();
    let mut failures = Vec::new();
    let mut records = Vec::new();
    for r in pass_one {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let mean_window = compute_mean_window(&records)?;
    let (ww, wh) = mean_window.dims();
    let [num, den] = cfg.resize_factor;
    let output_dims = [(ww * num / den).max(1), (wh * num / den).max(1)];

    let by_id: std::collections::HashMap<&str, &crate::dataset::ImageRecord> =
        manifest.records().iter().map(|r| (r.image_id.as_str(), r)).collect();
    let pass_two: Vec<Result<ProcessedImage, RecordFailure>> = records
        .par_iter()
        .map(|rec| {
            let fail = |e: String| RecordFailure {
                image_id: rec.image_id.clone(),
                error: e,
            };
            let source = by_id[rec.image_id.as_str()];
            let image = read_png(&manifest.resolve(source)).map_err(|e| fail(e.to_string()))?;
            let out = extract_window(&image, rec, &mean_window, cfg);
            let output = PathBuf::from(format!("{}.png", rec.image_id));
            write_png(&output_dir.join(&output), &out).map_err(|e| fail(e.to_string()))?;
            let network_output = match cfg.network_input {
                Some(target) => {
                    let square = shorter_side_crop(&out, target).map_err(|e| fail(e.to_string()))?;
                    let path = PathBuf::from(network_output_name(&rec.image_id, target));
                    write_png(&output_dir.join(&path), &square).map_err(|e| fail(e.to_string()))?;
                    Some(path)
                }
                None => None,
            };
            Ok(ProcessedImage {
                image_id: rec.image_id.clone(),
                output,
                network_output,
                width: out.width(),
                height: out.height(),
            })
        })
        .collect();
    let mut outputs = Vec::new();
    for r in pass_two {
        match r {
            Ok(p) => outputs.push(p),
            Err(f) => failures.push(f),
        }
    }

    Ok(PreprocessReport {
        config: cfg.clone(),
        mean_window,
        window_dims: [ww, wh],
        output_dims,
        colour_space: "BGR".to_string(),
        empty_masks: records.iter().filter(|r| r.empty_mask).map(|r| r.image_id.clone()).collect(),
        records,
        outputs,
        failures,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

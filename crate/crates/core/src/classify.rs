//! Classifier seam: a nearest-centroid colour-histogram baseline, a timing
//! stub, and ingestion of predictions produced elsewhere.

use crate::dataset::{ClassLabel, DatasetManifest};
use crate::imaging::{bgr_to_hsv_pixel, Hsv, HsvBounds, RawImage};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};
use thiserror::Error;

pub const SCORE_TOLERANCE: f64 = 1e-6;
pub const HIST_BINS: usize = 8;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("image is {got_w}x{got_h} but classifier '{name}' expects {want}")]
    SizeMismatch {
        name: String,
        want: String,
        got_w: usize,
        got_h: usize,
    },
    #[error("no training example for class {0}")]
    MissingClass(u8),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: image '{image_id}' is not in the manifest")]
    UnknownImage { line: u64, image_id: String },
    #[error("line {line}: {reason}")]
    ScoreInvariantViolation { line: u64, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSize {
    /// Square network input, e.g. 224 or 299.
    Square(usize),
    /// Whatever size the classifier was fitted on.
    Native,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub image_id: String,
    pub predicted: ClassLabel,
    pub scores: Option<[f64; ClassLabel::COUNT]>,
}

/// Checks non-negativity, unit sum and that `predicted` is a maximal score.
pub fn check_scores(predicted: ClassLabel, scores: &[f64; ClassLabel::COUNT]) -> Result<(), String> {
    if let Some(s) = scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(format!("score {s} is negative or not finite"));
    }
    let sum: f64 = scores.iter().sum();
    if (sum - 1.0).abs() > SCORE_TOLERANCE {
        return Err(format!("scores sum to {sum}, expected 1"));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if scores[predicted.index()] < max {
        return Err(format!("predicted class {} is not the argmax of the scores", predicted.id()));
    }
    Ok(())
}

/// Index of the largest score, lowest index on ties.
pub fn argmax(scores: &[f64; ClassLabel::COUNT]) -> ClassLabel {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    ClassLabel::ALL[best]
}

pub trait Classifier: Sync {
    fn name(&self) -> &str;

    fn input_size(&self) -> InputSize;

    /// Label and optional class scores for one pre-sized image. Never sees the
    /// true label.
    fn classify(&self, image: &RawImage) -> Result<(ClassLabel, Option<[f64; ClassLabel::COUNT]>), ClassifyError>;

    fn predict(&self, image_id: &str, image: &RawImage) -> Result<Prediction, ClassifyError> {
        let (predicted, scores) = self.classify(image)?;
        Ok(Prediction {
            image_id: image_id.to_string(),
            predicted,
            scores,
        })
    }
}

fn check_square(name: &str, size: usize, image: &RawImage) -> Result<(), ClassifyError> {
    if image.width() != size || image.height() != size {
        return Err(ClassifyError::SizeMismatch {
            name: name.to_string(),
            want: format!("{size}x{size}"),
            got_w: image.width(),
            got_h: image.height(),
        });
    }
    Ok(())
}

fn hist_cell(p: Hsv) -> usize {
    let h = p.h as usize * HIST_BINS / 181;
    let s = p.s as usize * HIST_BINS / 256;
    let v = p.v as usize * HIST_BINS / 256;
    (h * HIST_BINS + s) * HIST_BINS + v
}

fn normalized(mut hist: Vec<f64>, n: usize) -> Vec<f64> {
    hist.iter_mut().for_each(|c| *c /= n as f64);
    hist
}

/// Normalized 8x8x8 HSV histogram, flattened as `h * 64 + s * 8 + v`.
pub fn hsv_histogram(image: &RawImage) -> Vec<f64> {
    let mut hist = vec![0.0; HIST_BINS * HIST_BINS * HIST_BINS];
    for &p in image.as_slice() {
        hist[hist_cell(bgr_to_hsv_pixel(p))] += 1.0;
    }
    normalized(hist, image.as_slice().len())
}

/// [`hsv_histogram`] restricted to pixels inside `bounds`, so the share of
/// background in a crop does not move the feature. Falls back to the whole
/// frame when no pixel is inside.
pub fn response_histogram(image: &RawImage, bounds: &HsvBounds) -> Vec<f64> {
    let mut hist = vec![0.0; HIST_BINS * HIST_BINS * HIST_BINS];
    let mut n = 0;
    for &p in image.as_slice() {
        let hsv = bgr_to_hsv_pixel(p);
        if bounds.contains(hsv) {
            hist[hist_cell(hsv)] += 1.0;
            n += 1;
        }
    }
    if n == 0 {
        return hsv_histogram(image);
    }
    normalized(hist, n)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest class-mean response histogram under L2, lowest class id on ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineClassifier {
    name: String,
    input_size: InputSize,
    bounds: HsvBounds,
    native_dims: Option<(usize, usize)>,
    centroids: Vec<(ClassLabel, Vec<f64>)>,
}

impl BaselineClassifier {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_input_size(mut self, size: InputSize) -> Self {
        self.input_size = size;
        self
    }

    pub fn bounds(&self) -> &HsvBounds {
        &self.bounds
    }

    pub fn centroids(&self) -> &[(ClassLabel, Vec<f64>)] {
        &self.centroids
    }

    /// Squared distance from the image's histogram to each class mean.
    pub fn distances(&self, image: &RawImage) -> Vec<(ClassLabel, f64)> {
        let feat = response_histogram(image, &self.bounds);
        self.centroids
            .iter()
            .map(|(c, m)| (*c, squared_distance(&feat, m)))
            .collect()
    }
}

impl Classifier for BaselineClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_size(&self) -> InputSize {
        self.input_size
    }

    fn classify(&self, image: &RawImage) -> Result<(ClassLabel, Option<[f64; ClassLabel::COUNT]>), ClassifyError> {
        match self.input_size {
            InputSize::Square(n) => check_square(&self.name, n, image)?,
            InputSize::Native => {
                if let Some((w, h)) = self.native_dims {
                    if (image.width(), image.height()) != (w, h) {
                        return Err(ClassifyError::SizeMismatch {
                            name: self.name.clone(),
                            want: format!("{w}x{h}"),
                            got_w: image.width(),
                            got_h: image.height(),
                        });
                    }
                }
            }
        }
        let mut best: Option<(ClassLabel, f64)> = None;
        for (c, d) in self.distances(image) {
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((c, d));
            }
        }
        Ok((best.expect("fitted classifier has centroids").0, None))
    }
}

/// Fits the baseline on all five classes.
pub fn fit_baseline(train: &[(RawImage, ClassLabel)]) -> Result<BaselineClassifier, ClassifyError> {
    fit_baseline_for(train, &ClassLabel::ALL)
}

/// Fits the baseline over the listed classes; every one needs an example.
pub fn fit_baseline_for(
    train: &[(RawImage, ClassLabel)],
    classes: &[ClassLabel],
) -> Result<BaselineClassifier, ClassifyError> {
    let bounds = HsvBounds::METALLIC;
    let mut classes = classes.to_vec();
    classes.sort();
    classes.dedup();
    let mut centroids = Vec::new();
    for &class in &classes {
        let feats: Vec<Vec<f64>> = train
            .iter()
            .filter(|(_, c)| *c == class)
            .map(|(img, _)| response_histogram(img, &bounds))
            .collect();
        if feats.is_empty() {
            return Err(ClassifyError::MissingClass(class.id()));
        }
        let mut mean = vec![0.0; feats[0].len()];
        for f in &feats {
            mean.iter_mut().zip(f).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= feats.len() as f64);
        centroids.push((class, mean));
    }
    let first = train.first().map(|(img, _)| (img.width(), img.height()));
    let uniform = train.iter().all(|(img, _)| Some((img.width(), img.height())) == first);
    Ok(BaselineClassifier {
        name: "baseline".to_string(),
        input_size: InputSize::Native,
        bounds,
        native_dims: if uniform { first } else { None },
        centroids,
    })
}

/// Busy-waits for a fixed time per image and always answers one class.
#[derive(Debug, Clone)]
pub struct StubClassifier {
    pub name: String,
    pub delay: Duration,
    pub answer: ClassLabel,
}

impl StubClassifier {
    pub fn new(delay: Duration) -> Self {
        StubClassifier {
            name: "stub".to_string(),
            delay,
            answer: ClassLabel::AssaultRifle,
        }
    }
}

impl Classifier for StubClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_size(&self) -> InputSize {
        InputSize::Native
    }

    fn classify(&self, _image: &RawImage) -> Result<(ClassLabel, Option<[f64; ClassLabel::COUNT]>), ClassifyError> {
        let start = Instant::now();
        while start.elapsed() < self.delay {
            std::hint::spin_loop();
        }
        Ok((self.answer, None))
    }
}

/// Reads `image_id,predicted_class[,s0..s4]` rows and validates them against
/// the manifest.
pub fn load_predictions(path: &Path, manifest: &DatasetManifest) -> Result<Vec<Prediction>, ClassifyError> {
    let file = File::open(path).map_err(|source| ClassifyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| ClassifyError::Parse { line: 1, message: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let expected_full = ["image_id", "predicted_class", "s0", "s1", "s2", "s3", "s4"];
    let has_scores = match header.len() {
        2 if header == expected_full[..2] => false,
        7 if header == expected_full => true,
        _ => {
            return Err(ClassifyError::Parse {
                line: 1,
                message: format!("unexpected header {}", header.join(",")),
            })
        }
    };
    let known = manifest.truths();
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| ClassifyError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parse = |message: String| ClassifyError::Parse { line, message };
        let fields: Vec<&str> = row.iter().map(str::trim).collect();
        let want = if has_scores { 7 } else { 2 };
        if fields.len() != want && fields.len() != 2 {
            return Err(parse(format!("expected {want} fields, found {}", fields.len())));
        }
        let image_id = fields[0].to_string();
        let class_id: u8 = fields[1]
            .parse()
            .map_err(|_| parse(format!("predicted_class '{}' is not an integer", fields[1])))?;
        let predicted = ClassLabel::from_id(class_id).ok_or_else(|| parse(format!("unknown class id {class_id}")))?;
        if !known.contains_key(&image_id) {
            return Err(ClassifyError::UnknownImage { line, image_id });
        }
        let scores = if fields.len() == 7 {
            let mut s = [0.0; ClassLabel::COUNT];
            for (i, f) in fields[2..].iter().enumerate() {
                s[i] = f.parse().map_err(|_| parse(format!("score '{f}' is not a number")))?;
            }
            check_scores(predicted, &s).map_err(|reason| ClassifyError::ScoreInvariantViolation { line, reason })?;
            Some(s)
        } else {
            None
        };
        out.push(Prediction {
            image_id,
            predicted,
            scores,
        });
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<(), ClassifyError> {
    let with_scores = predictions.iter().any(|p| p.scores.is_some());
    let mut out = String::from(if with_scores {
        "image_id,predicted_class,s0,s1,s2,s3,s4\n"
    } else {
        "image_id,predicted_class\n"
    });
    for p in predictions {
        out.push_str(&format!("{},{}", p.image_id, p.predicted.id()));
        if let Some(s) = p.scores {
            for v in s {
                out.push_str(&format!(",{v}"));
            }
        }
        out.push('\n');
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|source| ClassifyError::Io {
            path: path.display().to_string(),
            source,
        })
}

use crate::classify::{Classifier, ClassifyError};
use crate::imaging::RawImage;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

pub const DEFAULT_ITERATIONS: usize = 500;

/// `mean_per_image_ms = 1000 * total_elapsed_s / (iterations * samples)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub classifier: String,
    pub iterations: usize,
    pub samples_per_iteration: usize,
    pub total_elapsed_s: f64,
    pub mean_per_image_ms: f64,
}

impl TimingReport {
    pub fn from_elapsed(classifier: &str, iterations: usize, samples: usize, total: Duration) -> Self {
        let total_elapsed_s = total.as_secs_f64();
        TimingReport {
            classifier: classifier.to_string(),
            iterations,
            samples_per_iteration: samples,
            total_elapsed_s,
            mean_per_image_ms: 1000.0 * total_elapsed_s / (iterations * samples) as f64,
        }
    }
}

/// Runs the classifier over the whole test set `iterations` times on the
/// calling thread and averages the wall-clock time per image. Images must
/// already be at the classifier's input size.
pub fn measure_inference(
    classifier: &dyn Classifier,
    testset: &[RawImage],
    iterations: usize,
) -> Result<TimingReport, ClassifyError> {
    assert!(!testset.is_empty() && iterations > 0, "timing needs images and iterations");
    let started = Instant::now();
    for _ in 0..iterations {
        for image in testset {
            std::hint::black_box(classifier.classify(std::hint::black_box(image))?);
        }
    }
    Ok(TimingReport::from_elapsed(
        classifier.name(),
        iterations,
        testset.len(),
        started.elapsed(),
    ))
}

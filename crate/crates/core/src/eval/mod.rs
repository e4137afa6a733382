//! Classification evaluation: confusion matrices, one-vs-all metrics,
//! inference timing and the consecutive-epoch early-stopping monitor.

mod early_stop;
mod report;
mod timing;

pub use early_stop::{Decision, EarlyStopState, StopReason, DEFAULT_PATIENCE, DEFAULT_UPPER_LIMIT};
pub use report::{evaluation_report, EvaluationReport};
pub use timing::{measure_inference, TimingReport, DEFAULT_ITERATIONS};

use crate::classify::Prediction;
use crate::dataset::ClassLabel;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no ground truth for image '{0}'")]
    MissingTruth(String),
    #[error("class {class}: one-vs-all {side} side is empty")]
    DegenerateDenominator { class: u8, side: &'static str },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("loss {0} is not finite")]
    NonFiniteLoss(f64),
}

/// `cells[t][p]` counts samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    cells: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            cells: vec![vec![0; k]; k],
        }
    }

    /// Panics unless `cells` is square.
    pub fn from_cells(cells: Vec<Vec<u64>>) -> Self {
        let k = cells.len();
        assert!(cells.iter().all(|r| r.len() == k), "confusion matrix must be square");
        ConfusionMatrix { cells }
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.cells[truth][predicted] += 1;
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.cells[truth][predicted]
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.cells[i][i]).sum()
    }

    pub fn row_sum(&self, t: usize) -> u64 {
        self.cells[t].iter().sum()
    }

    pub fn col_sum(&self, p: usize) -> u64 {
        self.cells.iter().map(|r| r[p]).sum()
    }
}

pub fn confusion_matrix(
    predictions: &[Prediction],
    truths: &HashMap<String, ClassLabel>,
) -> Result<ConfusionMatrix, EvalError> {
    let mut cm = ConfusionMatrix::new(ClassLabel::COUNT);
    for p in predictions {
        let t = truths
            .get(&p.image_id)
            .ok_or_else(|| EvalError::MissingTruth(p.image_id.clone()))?;
        cm.add(t.index(), p.predicted.index());
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneVsAll {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl OneVsAll {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Treats `class` as positive and every other class as negative.
pub fn one_vs_all(cm: &ConfusionMatrix, class: usize) -> OneVsAll {
    let tp = cm.get(class, class);
    let fn_ = cm.row_sum(class) - tp;
    let fp = cm.col_sum(class) - tp;
    OneVsAll {
        tp,
        fn_,
        fp,
        tn: cm.total() - tp - fn_ - fp,
    }
}

/// Percentages kept at full precision; see [`round2`] for display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClassMetrics {
    pub class_id: u8,
    #[serde(flatten)]
    pub counts: OneVsAll,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub ber: f64,
}

pub fn per_class_metrics(class_id: u8, c: OneVsAll) -> Result<PerClassMetrics, EvalError> {
    if c.tp + c.fn_ == 0 {
        return Err(EvalError::DegenerateDenominator { class: class_id, side: "positive" });
    }
    if c.tn + c.fp == 0 {
        return Err(EvalError::DegenerateDenominator { class: class_id, side: "negative" });
    }
    let sensitivity = 100.0 * c.tp as f64 / (c.tp + c.fn_) as f64;
    let specificity = 100.0 * c.tn as f64 / (c.tn + c.fp) as f64;
    Ok(PerClassMetrics {
        class_id,
        counts: c,
        sensitivity,
        specificity,
        accuracy: 100.0 * (c.tp + c.tn) as f64 / c.total() as f64,
        ber: 100.0 - (sensitivity + specificity) / 2.0,
    })
}

/// `100 * trace / total`.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    match cm.total() {
        0 => Err(EvalError::EmptyMatrix),
        n => Ok(100.0 * cm.trace() as f64 / n as f64),
    }
}

/// Two decimal places, halves rounded up. The tiny offset absorbs binary
/// representation error on values such as `x.xx5`.
pub fn round2(x: f64) -> f64 {
    ((x * 100.0) + 0.5 + 1e-7).floor() / 100.0
}

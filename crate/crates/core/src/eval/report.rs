use super::{one_vs_all, overall_accuracy, per_class_metrics, round2, ConfusionMatrix, EvalError, PerClassMetrics, TimingReport};
use crate::dataset::ClassLabel;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Values are stored at full precision; only [`EvaluationReport::render_table`]
/// rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub samples: u64,
    pub overall_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub classes: Vec<PerClassMetrics>,
    /// Classes whose one-vs-all metrics are undefined on this test set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined_classes: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingReport>,
}

pub fn evaluation_report(
    model: &str,
    cm: &ConfusionMatrix,
    timing: Option<TimingReport>,
) -> Result<EvaluationReport, EvalError> {
    let mut classes = Vec::new();
    let mut undefined_classes = Vec::new();
    for c in 0..cm.k() {
        match per_class_metrics(c as u8, one_vs_all(cm, c)) {
            Ok(m) => classes.push(m),
            Err(EvalError::DegenerateDenominator { class, .. }) => undefined_classes.push(class),
            Err(e) => return Err(e),
        }
    }
    Ok(EvaluationReport {
        model: model.to_string(),
        samples: cm.total(),
        overall_accuracy: overall_accuracy(cm)?,
        confusion: cm.clone(),
        classes,
        undefined_classes,
        timing,
    })
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text table, percentages at two decimals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model: {}  samples: {}", self.model, self.samples);
        let _ = writeln!(
            out,
            "{:<5} {:>5} {:>5} {:>5} {:>5} {:>9} {:>9} {:>9} {:>9}",
            "Class", "TP", "TN", "FP", "FN", "Sens(%)", "Spec(%)", "Acc(%)", "BER(%)"
        );
        for m in &self.classes {
            let c = m.counts;
            let _ = writeln!(
                out,
                "{:<5} {:>5} {:>5} {:>5} {:>5} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
                m.class_id,
                c.tp,
                c.tn,
                c.fp,
                c.fn_,
                round2(m.sensitivity),
                round2(m.specificity),
                round2(m.accuracy),
                round2(m.ber)
            );
        }
        for &c in &self.undefined_classes {
            let _ = writeln!(out, "{c:<5} (no samples on one side; metrics undefined)");
        }
        let _ = writeln!(out, "overall accuracy (%): {:.2}", round2(self.overall_accuracy));
        if let Some(t) = &self.timing {
            let _ = writeln!(
                out,
                "mean inference per image (ms): {:.4} over {} iterations of {} images",
                t.mean_per_image_ms, t.iterations, t.samples_per_iteration
            );
        }
        let _ = writeln!(out, "class key:");
        for c in ClassLabel::ALL {
            let _ = writeln!(out, "  {} = {}", c.id(), c.name());
        }
        out
    }
}

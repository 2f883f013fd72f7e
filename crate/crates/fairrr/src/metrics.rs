//! Utility and group-disparity metrics over binary predictions.
//!
//! Disparities are signed differences, group A=1 rate minus group A=0 rate;
//! take absolute values only for table-style reporting. Calibration relies on
//! the sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::FairnessMetric;

/// Accuracy, f1 and the three signed disparities of one prediction vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub f1: f64,
    /// Demographic-parity difference: positive-prediction rate gap.
    pub ddp: f64,
    /// Equality-of-opportunity difference: true-positive rate gap.
    pub deo: f64,
    /// Predictive-equality difference: false-positive rate gap.
    pub dpe: f64,
}

impl EvaluationReport {
    /// Signed disparity for the chosen metric.
    pub fn disparity(&self, metric: FairnessMetric) -> f64 {
        match metric {
            FairnessMetric::DemographicParity => self.ddp,
            FairnessMetric::EqualityOfOpportunity => self.deo,
            FairnessMetric::PredictiveEquality => self.dpe,
        }
    }
}

fn check_lengths(pred: &[u8], labels: &[u8]) -> Result<()> {
    if pred.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "pred ({}) and labels ({}) differ in length",
            pred.len(),
            labels.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("empty prediction vector".into()));
    }
    Ok(())
}

/// Fraction of agreeing entries.
pub fn accuracy(pred: &[u8], labels: &[u8]) -> Result<f64> {
    check_lengths(pred, labels)?;
    let agree = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(agree as f64 / pred.len() as f64)
}

/// f1 score of the positive class, 2TP/(2TP+FP+FN); 0 when the denominator
/// vanishes.
pub fn f1(pred: &[u8], labels: &[u8]) -> Result<f64> {
    check_lengths(pred, labels)?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fne = 0usize;
    for (&p, &y) in pred.iter().zip(labels) {
        match (p, y) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fne += 1,
            _ => {}
        }
    }
    let den = 2 * tp + fp + fne;
    if den == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / den as f64)
}

/// Positive-prediction rate of `pred` restricted to rows where `keep` holds;
/// `None` when no row qualifies.
fn conditional_rate(pred: &[u8], keep: impl Fn(usize) -> bool) -> Option<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for (i, &p) in pred.iter().enumerate() {
        if keep(i) {
            total += 1;
            hits += p as usize;
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Signed disparity of the chosen metric: group A=1 conditional rate minus
/// group A=0. Conditioning is on nothing (DP), Y=1 (EO) or Y=0 (PE).
pub fn disparity(
    metric: FairnessMetric,
    pred: &[u8],
    labels: &[u8],
    sensitive: &[u8],
) -> Result<f64> {
    check_lengths(pred, labels)?;
    check_lengths(pred, sensitive)?;
    let cond_y: Option<u8> = match metric {
        FairnessMetric::DemographicParity => None,
        FairnessMetric::EqualityOfOpportunity => Some(1),
        FairnessMetric::PredictiveEquality => Some(0),
    };
    let mut rates = [0.0f64; 2];
    for a in [1u8, 0] {
        let rate =
            conditional_rate(pred, |i| sensitive[i] == a && cond_y.is_none_or(|y| labels[i] == y));
        match rate {
            Some(r) => rates[a as usize] = r,
            None => {
                let cell = match cond_y {
                    None => format!("A={a}"),
                    Some(y) => format!("A={a}, Y={y}"),
                };
                return Err(Error::UndefinedMetric(format!(
                    "{metric} disparity undefined: no rows with {cell}"
                )));
            }
        }
    }
    Ok(rates[1] - rates[0])
}

/// All five metrics in one pass over the predictions.
pub fn evaluate_all(pred: &[u8], labels: &[u8], sensitive: &[u8]) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        accuracy: accuracy(pred, labels)?,
        f1: f1(pred, labels)?,
        ddp: disparity(FairnessMetric::DemographicParity, pred, labels, sensitive)?,
        deo: disparity(FairnessMetric::EqualityOfOpportunity, pred, labels, sensitive)?,
        dpe: disparity(FairnessMetric::PredictiveEquality, pred, labels, sensitive)?,
    })
}

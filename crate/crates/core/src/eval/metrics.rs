use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion-matrix metrics. Rows of `confusion` are true classes, columns
/// predicted ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub support: Vec<u64>,
    /// Plain fraction correct.
    pub accuracy: f64,
    /// Mean recall over classes with nonzero support.
    pub weighted_accuracy: f64,
    pub ppv: Vec<f64>,
    pub sensitivity: Vec<f64>,
    pub macro_ppv: f64,
    pub macro_sensitivity: f64,
    /// Cells whose denominator was zero and were reported as 0.
    pub undefined: Vec<String>,
}

pub fn compute_metrics(
    predicted: &[usize],
    actual: &[usize],
    classes: &[String],
) -> Result<MetricsReport> {
    if predicted.len() != actual.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::invalid("metrics need at least one sample"));
    }
    let c = classes.len();
    if let Some(bad) = predicted.iter().chain(actual).find(|&&k| k >= c) {
        return Err(Error::invalid(format!(
            "class index {bad} out of range for {c} classes"
        )));
    }
    let mut confusion = vec![vec![0u64; c]; c];
    for (&p, &a) in predicted.iter().zip(actual) {
        confusion[a][p] += 1;
    }
    let support: Vec<u64> = confusion.iter().map(|row| row.iter().sum()).collect();
    let predicted_count: Vec<u64> = (0..c)
        .map(|j| confusion.iter().map(|r| r[j]).sum())
        .collect();
    let mut undefined = Vec::new();
    let ratio = |num: u64, den: u64, what: &str, undefined: &mut Vec<String>| {
        if den == 0 {
            undefined.push(what.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let mut ppv = Vec::with_capacity(c);
    let mut sensitivity = Vec::with_capacity(c);
    for k in 0..c {
        let tp = confusion[k][k];
        ppv.push(ratio(
            tp,
            predicted_count[k],
            &format!("ppv:{}", classes[k]),
            &mut undefined,
        ));
        sensitivity.push(ratio(
            tp,
            support[k],
            &format!("sensitivity:{}", classes[k]),
            &mut undefined,
        ));
    }
    let present: Vec<usize> = (0..c).filter(|&k| support[k] > 0).collect();
    let mean_over = |v: &[f64]| present.iter().map(|&k| v[k]).sum::<f64>() / present.len() as f64;
    let correct: u64 = (0..c).map(|k| confusion[k][k]).sum();
    Ok(MetricsReport {
        classes: classes.to_vec(),
        accuracy: correct as f64 / actual.len() as f64,
        weighted_accuracy: mean_over(&sensitivity),
        macro_ppv: mean_over(&ppv),
        macro_sensitivity: mean_over(&sensitivity),
        confusion,
        support,
        ppv,
        sensitivity,
        undefined,
    })
}

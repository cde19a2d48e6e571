use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pipeline::{OutcomeClass, RunRecord};

/// RelErr values at or below this count as exact.
pub const ZERO_TOLERANCE: f64 = 1e-9;

/// `|s - g| / |g|`; 0 when both are 0; `None` when only `g` is 0.
pub fn relative_error(s: f64, g: f64) -> Option<f64> {
    if g == 0.0 {
        return (s == 0.0).then_some(0.0);
    }
    Some((s - g).abs() / g.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n_total: usize,
    pub n_exec: usize,
    pub success_rate: f64,
    pub n_ce: usize,
    pub n_re: usize,
    pub relerr_mean: Option<f64>,
    pub relerr_median: Option<f64>,
    /// Sample standard deviation; needs two values.
    pub relerr_std: Option<f64>,
    pub n_zero: usize,
    /// Solved records whose ground truth is 0 while the objective is not.
    pub n_undefined: usize,
    /// The defined RelErr values in record order.
    #[serde(skip)]
    pub relerrs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no ground truth for problem '{problem}'")]
pub struct MissingGroundTruth {
    pub problem: String,
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Midpoint of the two central values for even lengths.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Counts and RelErr statistics over `records`. Ground truth comes from
/// `ground_truths`, falling back to the value stored in the record.
pub fn summarize(records: &[RunRecord], ground_truths: &BTreeMap<String, f64>) -> Result<MetricsSummary, MissingGroundTruth> {
    let (mut n_exec, mut n_ce, mut n_re, mut n_zero, mut n_undefined) = (0, 0, 0, 0, 0);
    let mut relerrs = Vec::new();
    for r in records {
        match r.class() {
            OutcomeClass::CompileError => n_ce += 1,
            OutcomeClass::RuntimeError => n_re += 1,
            OutcomeClass::Solved => {
                n_exec += 1;
                let g = ground_truths
                    .get(&r.problem_id)
                    .copied()
                    .or(r.ground_truth)
                    .ok_or_else(|| MissingGroundTruth {
                        problem: r.problem_id.clone(),
                    })?;
                let s = r.objective.expect("solved records carry an objective");
                match relative_error(s, g) {
                    Some(e) => {
                        if e <= ZERO_TOLERANCE {
                            n_zero += 1;
                        }
                        relerrs.push(e);
                    }
                    None => n_undefined += 1,
                }
            }
        }
    }
    let n_total = records.len();
    Ok(MetricsSummary {
        n_total,
        n_exec,
        success_rate: if n_total == 0 { 0.0 } else { n_exec as f64 / n_total as f64 },
        n_ce,
        n_re,
        relerr_mean: mean(&relerrs),
        relerr_median: median(&relerrs),
        relerr_std: sample_std(&relerrs),
        n_zero,
        n_undefined,
        relerrs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_conventions() {
        assert_eq!(relative_error(10.0, 10.0), Some(0.0));
        assert!((relative_error(11.0, 10.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(relative_error(-9.0, -10.0), Some(0.1));
        assert_eq!(relative_error(3.0, 0.0), None);
        assert_eq!(relative_error(0.0, 0.0), Some(0.0));
    }

    #[test]
    fn order_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
        assert_eq!(sample_std(&[1.0]), None);
        assert!((sample_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap() - 2.138_089_935_299_395).abs() < 1e-12);
    }
}

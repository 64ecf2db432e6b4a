//! Hold-out validation by absolute percentage error.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::od::FlowSeries;

use super::regression::{predict, RegressionFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSample {
    pub date: NaiveDate,
    pub period: usize,
    pub actual: f64,
    pub predicted: f64,
    /// 100 · |predicted − actual| / actual.
    pub ape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: Vec<ValidationSample>,
    pub maximum_error: f64,
    pub minimum_error: f64,
    pub mean_error: f64,
    /// Hold-out entries skipped because the actual count was zero.
    pub excluded_zero_actuals: usize,
}

pub fn absolute_percentage_error(predicted: f64, actual: f64) -> f64 {
    100.0 * (predicted - actual).abs() / actual
}

pub fn validate_mape(fit: &RegressionFit, holdout: &FlowSeries) -> Result<ValidationReport> {
    let mut samples = Vec::with_capacity(holdout.entries.len());
    let mut excluded = 0;
    for e in &holdout.entries {
        if e.count == 0 {
            excluded += 1;
            continue;
        }
        let actual = e.count as f64;
        let predicted = predict(fit, e.period)?;
        samples.push(ValidationSample {
            date: e.date,
            period: e.period,
            actual,
            predicted,
            ape: absolute_percentage_error(predicted, actual),
        });
    }
    if samples.is_empty() {
        return Err(Error::Empty(format!(
            "hold-out has no usable samples ({excluded} zero actuals excluded)"
        )));
    }
    let apes = samples.iter().map(|s| s.ape);
    let maximum_error = apes.clone().fold(f64::NEG_INFINITY, f64::max);
    let minimum_error = apes.clone().fold(f64::INFINITY, f64::min);
    let mean_error = apes.sum::<f64>() / samples.len() as f64;
    Ok(ValidationReport { samples, maximum_error, minimum_error, mean_error, excluded_zero_actuals: excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::od::{FlowDirection, FlowEntry};
    use crate::stats::regression::fit_observations;

    fn series(entries: &[(usize, u64)]) -> FlowSeries {
        let date: NaiveDate = "2011-10-20".parse().unwrap();
        FlowSeries {
            direction: FlowDirection::Outbound,
            periods_per_day: 12,
            entries: entries.iter().map(|&(period, count)| FlowEntry { date, period, count }).collect(),
        }
    }

    fn constant_fit(level: f64) -> RegressionFit {
        let obs: Vec<(usize, f64)> = (0..2).flat_map(|_| (1..=12).map(move |p| (p, level))).collect();
        fit_observations(&obs, 12).unwrap()
    }

    #[test]
    fn ten_percent_error() {
        let r = validate_mape(&constant_fit(110.0), &series(&[(3, 100)])).unwrap();
        assert!((r.mean_error - 10.0).abs() < 1e-9);
        assert_eq!(r.samples.len(), 1);
    }

    #[test]
    fn perfect_prediction() {
        let r = validate_mape(&constant_fit(50.0), &series(&[(1, 50), (7, 50), (12, 50)])).unwrap();
        assert!(r.maximum_error < 1e-9 && r.minimum_error < 1e-9 && r.mean_error < 1e-9);
    }

    #[test]
    fn zero_actuals_excluded_and_empty_rejected() {
        let r = validate_mape(&constant_fit(10.0), &series(&[(1, 0), (2, 20)])).unwrap();
        assert_eq!(r.excluded_zero_actuals, 1);
        assert!((r.mean_error - 50.0).abs() < 1e-9);
        assert!(matches!(validate_mape(&constant_fit(10.0), &series(&[])), Err(Error::Empty(_))));
        assert!(validate_mape(&constant_fit(10.0), &series(&[(4, 0)])).is_err());
    }

    #[test]
    fn ordering_of_summary() {
        let r = validate_mape(&constant_fit(100.0), &series(&[(1, 80), (2, 100), (3, 160), (4, 45)])).unwrap();
        assert!(r.minimum_error <= r.mean_error && r.mean_error <= r.maximum_error);
        assert!((r.maximum_error - 122.222_222_222_222_2).abs() < 1e-9);
    }
}

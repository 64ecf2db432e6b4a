//! JSON export of a fitted model in the layout of a spreadsheet regression
//! summary: regression statistics, ANOVA block, coefficient table, and an
//! optional validation block.

use serde::{Deserialize, Serialize};

use crate::od::FlowDirection;
use crate::serde_f64;

use super::anova::AnovaResult;
use super::regression::{Coefficient, RegressionFit};
use super::validation::ValidationReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionStatistics {
    #[serde(with = "serde_f64")]
    pub multiple_r: f64,
    #[serde(with = "serde_f64")]
    pub r_square: f64,
    #[serde(with = "serde_f64")]
    pub adjusted_r_square: f64,
    pub standard_error: f64,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
    #[serde(with = "serde_f64")]
    pub f: f64,
    #[serde(with = "serde_f64")]
    pub significance_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalRow {
    pub df: usize,
    pub ss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaBlock {
    pub regression: RegressionRow,
    pub residual: ResidualRow,
    pub total: TotalRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationBlock {
    pub maximum_error: f64,
    pub minimum_error: f64,
    pub mean_error: f64,
    pub samples: usize,
    pub excluded_zero_actuals: usize,
}

impl From<&ValidationReport> for ValidationBlock {
    fn from(v: &ValidationReport) -> Self {
        Self {
            maximum_error: v.maximum_error,
            minimum_error: v.minimum_error,
            mean_error: v.mean_error,
            samples: v.samples.len(),
            excluded_zero_actuals: v.excluded_zero_actuals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub direction: Option<FlowDirection>,
    pub regression_statistics: RegressionStatistics,
    pub anova: AnovaBlock,
    /// Intercept first, then t₁ … t₍ₚ₋₁₎.
    pub coefficients: Vec<Coefficient>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screening: Option<AnovaResult>,
}

impl FitReport {
    pub fn new(fit: &RegressionFit, validation: Option<&ValidationReport>, screening: Option<&AnovaResult>) -> Self {
        let s = &fit.statistics;
        Self {
            direction: fit.direction,
            regression_statistics: RegressionStatistics {
                multiple_r: s.multiple_r,
                r_square: s.r_square,
                adjusted_r_square: s.adjusted_r_square,
                standard_error: s.standard_error,
                observations: s.observations,
            },
            anova: AnovaBlock {
                regression: RegressionRow {
                    df: s.df_reg,
                    ss: s.ss_reg,
                    ms: s.ms_reg,
                    f: s.f,
                    significance_f: s.significance_f,
                },
                residual: ResidualRow { df: s.df_res, ss: s.ss_res, ms: s.ms_res },
                total: TotalRow { df: s.df_total, ss: s.ss_total },
            },
            coefficients: std::iter::once(fit.intercept.clone()).chain(fit.dummies.iter().cloned()).collect(),
            validation: validation.map(ValidationBlock::from),
            screening: screening.cloned(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::regression::reference_outbound_fit;

    #[test]
    fn report_layout() {
        let r = FitReport::new(&reference_outbound_fit(), None, None);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["regression_statistics"]["observations"], 311);
        assert_eq!(v["anova"]["residual"]["df"], 299);
        assert_eq!(v["anova"]["total"]["df"], 310);
        assert_eq!(v["coefficients"][0]["term"], "intercept");
        assert_eq!(v["coefficients"][11]["term"], "t11");
        assert!(v.get("validation").is_none());
        let back: FitReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}

//! Statistical core: two-factor ANOVA screening, dummy-variable OLS with
//! inferential statistics, distribution tails and MAPE validation.

pub mod anova;
pub mod distributions;
pub mod regression;
pub mod report;
pub mod special;
pub mod validation;

pub use anova::{two_way_anova, AnovaGrid, AnovaResult};
pub use distributions::{tail_probability_f, tail_probability_t};
pub use regression::{compute_fit_statistics, fit_dummy_regression, predict, FitStatistics, RegressionFit};
pub use validation::{validate_mape, ValidationReport};

/// Default significance level for the screening and coefficient tests.
pub const DEFAULT_ALPHA: f64 = 0.05;

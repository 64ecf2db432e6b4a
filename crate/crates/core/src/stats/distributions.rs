//! Student-t and Fisher-F tail probabilities.

use crate::error::{Error, Result};

use super::special::ln_reg_inc_beta;

/// Natural log of the two-sided Student-t p-value, ln 2·P(T ≥ |t|).
pub fn ln_tail_probability_t(t: f64, df: f64) -> Result<f64> {
    if df.is_nan() || df < 1.0 || df.is_infinite() {
        return Err(Error::Argument(format!("t distribution needs df >= 1, got {df}")));
    }
    if t.is_nan() {
        return Err(Error::Argument("t statistic is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let t2 = t * t;
    let denom = df + t2;
    // 2·P(T ≥ |t|) = I_{df/(df+t²)}(df/2, 1/2)
    Ok(ln_reg_inc_beta(df / 2.0, 0.5, df / denom, t2 / denom))
}

/// Two-sided Student-t p-value 2·P(T ≥ |t|).
pub fn tail_probability_t(t: f64, df: f64) -> Result<f64> {
    ln_tail_probability_t(t, df).map(f64::exp)
}

/// Natural log of the upper-tail F probability P(F' ≥ f).
pub fn ln_tail_probability_f(f: f64, df1: f64, df2: f64) -> Result<f64> {
    if !(df1 >= 1.0 && df2 >= 1.0) || df1.is_infinite() || df2.is_infinite() {
        return Err(Error::Argument(format!("F distribution needs dfs >= 1, got ({df1}, {df2})")));
    }
    if f.is_nan() || f < 0.0 {
        return Err(Error::Argument(format!("F statistic must be >= 0, got {f}")));
    }
    if f.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let num = df1 * f;
    let denom = df2 + num;
    // P(F' ≥ f) = I_{df2/(df2+df1 f)}(df2/2, df1/2)
    Ok(ln_reg_inc_beta(df2 / 2.0, df1 / 2.0, df2 / denom, num / denom))
}

/// Upper-tail F probability P(F' ≥ f).
pub fn tail_probability_f(f: f64, df1: f64, df2: f64) -> Result<f64> {
    ln_tail_probability_f(f, df1, df2).map(f64::exp)
}

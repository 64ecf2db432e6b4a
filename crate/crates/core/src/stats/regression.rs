//! Dummy-variable least squares for period-binned flows.
//!
//! Flow = b₁t₁ + … + b₍ₚ₋₁₎t₍ₚ₋₁₎ + b₍ₚ₎ where tⱼ is the indicator of period
//! j and the last period is the reference level absorbed by the intercept.
//! The system is solved by Householder QR; standard errors come from
//! (XᵀX)⁻¹ = R⁻¹R⁻ᵀ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::od::{FlowDirection, FlowSeries};
use crate::serde_f64;

use super::distributions::{tail_probability_f, tail_probability_t};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: String,
    pub coefficient: f64,
    pub standard_error: f64,
    #[serde(with = "serde_f64")]
    pub t_stat: f64,
    #[serde(with = "serde_f64")]
    pub p_value: f64,
}

impl Coefficient {
    fn new(term: String, coefficient: f64, standard_error: f64, df_res: usize) -> Result<Self> {
        let t_stat = t_statistic(coefficient, standard_error);
        let p_value = if t_stat.is_nan() { f64::NAN } else { tail_probability_t(t_stat, df_res as f64)? };
        Ok(Self { term, coefficient, standard_error, t_stat, p_value })
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// t = coefficient / standard error.
pub fn t_statistic(coefficient: f64, standard_error: f64) -> f64 {
    coefficient / standard_error
}

/// Regression statistics and the regression ANOVA block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    #[serde(with = "serde_f64")]
    pub multiple_r: f64,
    #[serde(with = "serde_f64")]
    pub r_square: f64,
    #[serde(with = "serde_f64")]
    pub adjusted_r_square: f64,
    pub standard_error: f64,
    pub observations: usize,
    pub ss_reg: f64,
    pub ss_res: f64,
    pub ss_total: f64,
    pub df_reg: usize,
    pub df_res: usize,
    pub df_total: usize,
    pub ms_reg: f64,
    pub ms_res: f64,
    #[serde(with = "serde_f64")]
    pub f: f64,
    #[serde(with = "serde_f64")]
    pub significance_f: f64,
}

/// Derives every summary statistic from the two sums of squares, `n`
/// observations and `p` regressors (excluding the intercept).
pub fn compute_fit_statistics(ss_reg: f64, ss_res: f64, n: usize, p: usize) -> Result<FitStatistics> {
    if n <= p + 1 {
        return Err(Error::DegreesOfFreedom { n, p });
    }
    if !(ss_reg >= 0.0 && ss_res >= 0.0) {
        return Err(Error::Argument(format!("sums of squares must be >= 0, got ({ss_reg}, {ss_res})")));
    }
    let ss_total = ss_reg + ss_res;
    let (df_reg, df_res, df_total) = (p, n - p - 1, n - 1);
    let r_square = ss_reg / ss_total;
    let adjusted_r_square = 1.0 - (1.0 - r_square) * (n - 1) as f64 / df_res as f64;
    let ms_reg = if df_reg > 0 { ss_reg / df_reg as f64 } else { 0.0 };
    let ms_res = ss_res / df_res as f64;
    let f = ms_reg / ms_res;
    let significance_f = if f.is_nan() || df_reg == 0 { f64::NAN } else { tail_probability_f(f, df_reg as f64, df_res as f64)? };
    Ok(FitStatistics {
        multiple_r: r_square.sqrt(),
        r_square,
        adjusted_r_square,
        standard_error: ms_res.sqrt(),
        observations: n,
        ss_reg,
        ss_res,
        ss_total,
        df_reg,
        df_res,
        df_total,
        ms_reg,
        ms_res,
        f,
        significance_f,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub direction: Option<FlowDirection>,
    pub periods_per_day: usize,
    /// Coefficients of t₁ … t₍ₚ₋₁₎.
    pub dummies: Vec<Coefficient>,
    pub intercept: Coefficient,
    pub statistics: FitStatistics,
}

impl RegressionFit {
    pub fn predict(&self, period: usize) -> Result<f64> {
        predict(self, period)
    }
}

/// Point forecast for a 1-based period: intercept plus that period's dummy
/// coefficient (none for the reference period).
pub fn predict(fit: &RegressionFit, period: usize) -> Result<f64> {
    if period == 0 || period > fit.periods_per_day {
        return Err(Error::Argument(format!("period must be in 1..={}, got {period}", fit.periods_per_day)));
    }
    Ok(fit.intercept.coefficient + fit.dummies.get(period - 1).map_or(0.0, |c| c.coefficient))
}

/// Least-squares fit of flow on period dummies over every entry of `series`.
pub fn fit_dummy_regression(series: &FlowSeries, periods_per_day: usize) -> Result<RegressionFit> {
    let obs: Vec<(usize, f64)> = series.entries.iter().map(|e| (e.period, e.count as f64)).collect();
    let mut fit = fit_observations(&obs, periods_per_day)?;
    fit.direction = Some(series.direction);
    Ok(fit)
}

/// Least-squares fit from raw (1-based period, flow) observations.
pub fn fit_observations(obs: &[(usize, f64)], periods: usize) -> Result<RegressionFit> {
    if periods < 2 {
        return Err(Error::Argument("need at least two periods".into()));
    }
    let mut per_period = vec![0usize; periods];
    for &(p, y) in obs {
        if p == 0 || p > periods {
            return Err(Error::Argument(format!("period {p} outside 1..={periods}")));
        }
        if !y.is_finite() {
            return Err(Error::Argument("non-finite flow".into()));
        }
        per_period[p - 1] += 1;
    }
    if let Some(missing) = per_period.iter().position(|&c| c == 0) {
        return Err(Error::RankDeficient { period: missing + 1 });
    }
    let n = obs.len();
    let m = periods;
    if n <= m {
        return Err(Error::DegreesOfFreedom { n, p: m - 1 });
    }

    // column-major design: dummies t₁..t₍ₘ₋₁₎, then the intercept
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            obs.iter()
                .map(|&(p, _)| if j == m - 1 || p == j + 1 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let y: Vec<f64> = obs.iter().map(|o| o.1).collect();
    let mut qty = y.clone();
    householder_qr(&mut a, &mut qty)?;

    let beta = back_substitute(&a, &qty[..m]);
    let r_inv = upper_inverse(&a, m);

    let fitted: Vec<f64> = obs
        .iter()
        .map(|&(p, _)| beta[m - 1] + if p < m { beta[p - 1] } else { 0.0 })
        .collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_res: f64 = y.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let ss_reg: f64 = fitted.iter().map(|f| (f - mean).powi(2)).sum();
    let statistics = compute_fit_statistics(ss_reg, ss_res, n, m - 1)?;
    // keep the directly computed total rather than the sum of parts
    let statistics = FitStatistics { ss_total: y.iter().map(|v| (v - mean).powi(2)).sum(), ..statistics };

    let se = |j: usize| -> f64 {
        let diag: f64 = (j..m).map(|k| r_inv[j][k].powi(2)).sum();
        (statistics.ms_res * diag).sqrt()
    };
    let df_res = statistics.df_res;
    let dummies = (0..m - 1)
        .map(|j| Coefficient::new(format!("t{}", j + 1), beta[j], se(j), df_res))
        .collect::<Result<Vec<_>>>()?;
    let intercept = Coefficient::new("intercept".into(), beta[m - 1], se(m - 1), df_res)?;
    Ok(RegressionFit { direction: None, periods_per_day: periods, dummies, intercept, statistics })
}

/// In-place Householder QR of the column-major matrix `a` (n × m), applying
/// the reflections to `b`. On return the upper triangle of `a` holds R and
/// `b[..m]` holds Qᵀb.
fn householder_qr(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let m = a.len();
    let n = b.len();
    let scale: Vec<f64> = a.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    for k in 0..m {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        // column k is (numerically) in the span of the previous ones
        if norm <= 1e-12 * scale[k] {
            return Err(Error::RankDeficient { period: k + 1 });
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k + 1) {
                let s = 2.0 * v.iter().zip(&col[k..]).map(|(v, c)| v * c).sum::<f64>() / vnorm2;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            let s = 2.0 * v.iter().zip(&b[k..n]).map(|(v, c)| v * c).sum::<f64>() / vnorm2;
            for (c, vi) in b[k..n].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
    }
    Ok(())
}

/// Solves R x = c where R is the upper triangle of column-major `r`.
fn back_substitute(r: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let m = c.len();
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = ((i + 1)..m).map(|j| r[j][i] * x[j]).sum();
        x[i] = (c[i] - s) / r[i][i];
    }
    x
}

/// Row-major inverse of the upper-triangular R stored column-major in `r`.
fn upper_inverse(r: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    let mut inv = vec![vec![0.0; m]; m];
    for col in 0..m {
        let mut e = vec![0.0; m];
        e[col] = 1.0;
        let x = back_substitute(r, &e);
        for (row, v) in x.into_iter().enumerate() {
            inv[row][col] = v;
        }
    }
    inv
}

/// Coefficient table for a twelve-period outbound model fitted on 311
/// observations (intercept 54.07692, t₁ −28.4369, …, t₁₁ 52.26923) together
/// with its regression statistics. Used as a fixed model for the forecast
/// and report surfaces.
pub fn reference_outbound_fit() -> RegressionFit {
    const ROWS: [(f64, f64, f64, f64); 11] = [
        (-28.4369, 6.39195, -4.44887, 1.22e-5),
        (-46.2308, 6.328973, -7.30462, 2.54e-12),
        (-21.8462, 6.328973, -3.45177, 0.000637),
        (2.384615, 6.328973, 0.376778, 0.706606),
        (36.11538, 6.328973, 5.706357, 2.78e-8),
        (65.73077, 6.328973, 10.38569, 8.88e-22),
        (69.07692, 6.328973, 10.9144, 1.45e-23),
        (82.57692, 6.328973, 13.04744, 4.18e-31),
        (98.38462, 6.328973, 15.54511, 2.39e-40),
        (89.61538, 6.328973, 14.15955, 3.49e-35),
        (52.26923, 6.328973, 8.258722, 4.81e-15),
    ];
    let row = |term: String, (coefficient, standard_error, t_stat, p_value): (f64, f64, f64, f64)| Coefficient {
        term,
        coefficient,
        standard_error,
        t_stat,
        p_value,
    };
    RegressionFit {
        direction: Some(FlowDirection::Outbound),
        periods_per_day: 12,
        dummies: ROWS.iter().enumerate().map(|(i, &r)| row(format!("t{}", i + 1), r)).collect(),
        intercept: row("intercept".into(), (54.07692, 4.47526, 12.08353, 1.21e-27)),
        statistics: compute_fit_statistics(718_390.5, 155_697.3, 311, 11).expect("valid fixture"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_obs(days: usize) -> Vec<(usize, f64)> {
        (0..days).flat_map(|_| (1..=12).map(|p| (p, 10.0 * p as f64))).collect()
    }

    #[test]
    fn exact_interpolation() {
        let fit = fit_observations(&exact_obs(2), 12).unwrap();
        assert!((fit.intercept.coefficient - 120.0).abs() < 1e-10);
        for (j, c) in fit.dummies.iter().enumerate() {
            assert!((c.coefficient - (10.0 * (j + 1) as f64 - 120.0)).abs() < 1e-10);
        }
        assert!((fit.statistics.r_square - 1.0).abs() < 1e-12);
        assert!(fit.statistics.ss_res < 1e-18);
        for p in 1..=12 {
            assert!((predict(&fit, p).unwrap() - 10.0 * p as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn missing_period_is_rank_deficient() {
        let obs: Vec<(usize, f64)> = exact_obs(3).into_iter().filter(|o| o.0 != 5).collect();
        match fit_observations(&obs, 12) {
            Err(Error::RankDeficient { period }) => assert_eq!(period, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_observations() {
        let obs = exact_obs(1);
        assert!(matches!(fit_observations(&obs, 12), Err(Error::DegreesOfFreedom { .. })));
        let mut obs13 = obs.clone();
        obs13.push((1, 11.0));
        assert!(fit_observations(&obs13, 12).is_ok());
    }

    #[test]
    fn statistics_from_sums_of_squares() {
        let s = compute_fit_statistics(718_390.5, 155_697.3, 311, 11).unwrap();
        assert!((s.r_square - 0.821875).abs() < 1e-6);
        assert!((s.adjusted_r_square - 0.815321).abs() < 1e-5);
        assert!((s.standard_error - 22.81944).abs() < 1e-4);
        assert!((s.f - 125.4175).abs() < 1e-3);
        assert!((s.ms_res - 520.7268).abs() < 1e-3);
        assert!((s.ms_reg - 65_308.23).abs() < 1e-2);
        assert!((s.multiple_r - 0.906573).abs() < 1e-6);
        assert_eq!((s.df_reg, s.df_res, s.df_total), (11, 299, 310));

        let zero_reg = compute_fit_statistics(0.0, 50.0, 40, 11).unwrap();
        assert_eq!((zero_reg.r_square, zero_reg.f), (0.0, 0.0));
        let zero_res = compute_fit_statistics(50.0, 0.0, 40, 11).unwrap();
        assert_eq!((zero_res.r_square, zero_res.standard_error), (1.0, 0.0));
        assert!(matches!(compute_fit_statistics(1.0, 1.0, 12, 11), Err(Error::DegreesOfFreedom { .. })));
        assert!(compute_fit_statistics(-1.0, 1.0, 40, 11).is_err());
    }

    #[test]
    fn reference_fit_predictions() {
        let fit = reference_outbound_fit();
        assert!((predict(&fit, 12).unwrap() - 54.07692).abs() < 1e-9);
        assert_eq!(format!("{:.2}", predict(&fit, 9).unwrap()), "152.46");
        assert!(predict(&fit, 0).is_err());
        assert!(predict(&fit, 13).is_err());
    }

    #[test]
    fn perfect_fit_survives_json() {
        let s = compute_fit_statistics(50.0, 0.0, 24, 11).unwrap();
        assert!(s.f.is_infinite());
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains(r#""f":"inf""#), "{text}");
        let back: FitStatistics = serde_json::from_str(&text).unwrap();
        assert_eq!(back.f, f64::INFINITY);
        assert_eq!(back.significance_f, 0.0);
        let nan = compute_fit_statistics(0.0, 0.0, 24, 11).unwrap();
        let back: FitStatistics = serde_json::from_str(&serde_json::to_string(&nan).unwrap()).unwrap();
        assert!(back.r_square.is_nan());
    }
}

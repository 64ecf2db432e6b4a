//! Two-factor analysis of variance without replication (one observation per
//! date × period cell).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::od::FlowSeries;

use super::distributions::tail_probability_f;

/// Rows are dates (factor A), columns are periods (factor B).
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaGrid {
    cells: Vec<Vec<Option<f64>>>,
}

impl AnovaGrid {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_cells(rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect())
    }

    pub fn from_cells(cells: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let width = cells.first().map_or(0, Vec::len);
        if cells.iter().any(|r| r.len() != width) {
            return Err(Error::Argument("grid rows have different lengths".into()));
        }
        Ok(Self { cells })
    }

    /// Date × period grid over the distinct dates of `series`; cells without
    /// an entry are missing.
    pub fn from_series(series: &FlowSeries) -> Self {
        let mut dates: Vec<_> = series.entries.iter().map(|e| e.date).collect();
        dates.sort();
        dates.dedup();
        let mut cells = vec![vec![None; series.periods_per_day]; dates.len()];
        for e in &series.entries {
            let r = dates.binary_search(&e.date).unwrap();
            cells[r][e.period - 1] = Some(e.count as f64);
        }
        Self { cells }
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().filter(|(_, v)| v.is_none()).map(move |(c, _)| (r, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub ss: f64,
    pub df: usize,
    pub ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTest {
    pub f: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// Between-date variation.
    pub factor_a: AnovaRow,
    /// Between-period variation.
    pub factor_b: AnovaRow,
    pub error: AnovaRow,
    pub total: AnovaRow,
    pub test_a: FactorTest,
    pub test_b: FactorTest,
    pub alpha: f64,
    /// Set when the error mean square is zero and F is undefined.
    pub degenerate: bool,
}

pub fn two_way_anova(grid: &AnovaGrid, alpha: f64) -> Result<AnovaResult> {
    let (r, c) = (grid.rows(), grid.cols());
    if r < 2 || c < 2 {
        return Err(Error::Argument(format!("ANOVA needs at least a 2×2 grid, got {r}×{c}")));
    }
    let missing = grid.missing_cells();
    if !missing.is_empty() {
        return Err(Error::IncompleteGrid(missing));
    }
    let x: Vec<Vec<f64>> = grid.cells.iter().map(|row| row.iter().map(|v| v.unwrap()).collect()).collect();
    let n = (r * c) as f64;
    let grand = x.iter().flatten().sum::<f64>() / n;
    let row_means: Vec<f64> = x.iter().map(|row| row.iter().sum::<f64>() / c as f64).collect();
    let col_means: Vec<f64> = (0..c).map(|j| x.iter().map(|row| row[j]).sum::<f64>() / r as f64).collect();

    let ss_a = c as f64 * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = r as f64 * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_t = x.iter().flatten().map(|v| (v - grand).powi(2)).sum::<f64>();
    let mut ss_e = 0.0;
    for (i, row) in x.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            ss_e += (v - row_means[i] - col_means[j] + grand).powi(2);
        }
    }

    let (df_a, df_b) = (r - 1, c - 1);
    let df_e = df_a * df_b;
    let ms = |ss: f64, df: usize| (df > 0).then(|| ss / df as f64);
    let ms_e = ss_e / df_e as f64;
    // residuals at rounding level count as an exact fit
    let degenerate = ss_e <= 1e-12 * ss_t || ss_t == 0.0;
    let test = |ss: f64, df: usize| -> Result<FactorTest> {
        if degenerate {
            return Ok(FactorTest { f: None, p_value: None, significant: None });
        }
        let f = (ss / df as f64) / ms_e;
        let p = tail_probability_f(f, df as f64, df_e as f64)?;
        Ok(FactorTest { f: Some(f), p_value: Some(p), significant: Some(p < alpha) })
    };
    Ok(AnovaResult {
        test_a: test(ss_a, df_a)?,
        test_b: test(ss_b, df_b)?,
        factor_a: AnovaRow { ss: ss_a, df: df_a, ms: ms(ss_a, df_a) },
        factor_b: AnovaRow { ss: ss_b, df: df_b, ms: ms(ss_b, df_b) },
        error: AnovaRow { ss: ss_e, df: df_e, ms: ms(ss_e, df_e) },
        total: AnovaRow { ss: ss_t, df: r * c - 1, ms: ms(ss_t, r * c - 1) },
        alpha,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_example() {
        let g = AnovaGrid::from_rows(vec![vec![1.0, 2.0], vec![4.0, 3.0]]).unwrap();
        let a = two_way_anova(&g, 0.05).unwrap();
        assert!((a.factor_a.ss - 4.0).abs() < 1e-12);
        assert!(a.factor_b.ss.abs() < 1e-12);
        assert!((a.error.ss - 1.0).abs() < 1e-12);
        assert!((a.total.ss - 5.0).abs() < 1e-12);
        assert!((a.test_a.f.unwrap() - 4.0).abs() < 1e-12);
        assert!(!a.degenerate);
        assert_eq!((a.factor_a.df, a.factor_b.df, a.error.df, a.total.df), (1, 1, 1, 3));
    }

    #[test]
    fn constant_grid_is_degenerate() {
        let g = AnovaGrid::from_rows(vec![vec![3.0; 4]; 3]).unwrap();
        let a = two_way_anova(&g, 0.05).unwrap();
        assert_eq!((a.factor_a.ss, a.factor_b.ss, a.error.ss), (0.0, 0.0, 0.0));
        assert!(a.degenerate);
        assert_eq!(a.test_a.f, None);
    }

    #[test]
    fn additive_grid_is_degenerate() {
        let g = AnovaGrid::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let a = two_way_anova(&g, 0.05).unwrap();
        assert_eq!(a.error.ss, 0.0);
        assert!(a.degenerate);
    }

    #[test]
    fn missing_cells_are_reported() {
        let g = AnovaGrid::from_cells(vec![vec![Some(1.0), None], vec![Some(2.0), Some(3.0)], vec![None, Some(1.0)]]).unwrap();
        match two_way_anova(&g, 0.05) {
            Err(Error::IncompleteGrid(cells)) => assert_eq!(cells, vec![(0, 1), (2, 0)]),
            other => panic!("{other:?}"),
        }
        assert!(AnovaGrid::from_rows(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(two_way_anova(&AnovaGrid::from_rows(vec![vec![1.0, 2.0]]).unwrap(), 0.05).is_err());
    }

    #[test]
    fn significance_flags() {
        // strong period effect, small noise
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|d| (0..4).map(|p| 10.0 * p as f64 + ((d * 7 + p * 3) % 5) as f64 * 0.1).collect())
            .collect();
        let a = two_way_anova(&AnovaGrid::from_rows(rows).unwrap(), 0.05).unwrap();
        assert_eq!(a.test_b.significant, Some(true));
        assert!(a.test_b.p_value.unwrap() < 1e-10);
    }
}

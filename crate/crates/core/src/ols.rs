//! Ordinary least squares with classical standard errors.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold below which a design is rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    /// Intercept first, then one slope per regressor column.
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    pub residual_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum OlsError {
    TooFewRows { rows: usize, needed: usize },
    RankDeficient,
}

/// Regresses `y` on an intercept plus the columns of `x` (row-major, one row
/// per observation).
pub(crate) fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, OlsError> {
    let n = y.len();
    let k = x.first().map_or(0, Vec::len);
    let p = k + 1;
    if n < p + 1 {
        return Err(OlsError::TooFewRows {
            rows: n,
            needed: p + 1,
        });
    }
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let target = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || svd.singular_values.min() <= smax * RANK_TOL {
        return Err(OlsError::RankDeficient);
    }
    let beta = svd
        .solve(&target, 0.0)
        .map_err(|_| OlsError::RankDeficient)?;
    let resid = &target - &design * &beta;
    let rss = resid.norm_squared();
    let df = (n - p) as f64;
    let sigma2 = rss / df;
    // (X'X)^-1 = V S^-2 V'
    let v_t = svd.v_t.as_ref().expect("computed");
    let inv_sq = svd.singular_values.map(|s| 1.0 / (s * s));
    let xtx_inv = v_t.transpose() * DMatrix::from_diagonal(&inv_sq) * v_t;
    let std_err = (0..p)
        .map(|j| (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt())
        .collect();
    Ok(OlsFit {
        coef: beta.iter().copied().collect(),
        std_err,
        residual_variance: sigma2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_line_through_four_points() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = [0.5, 1.0, 2.5, 2.0];
        let fit = ols(&x, &y).unwrap();
        // Sxy = 3, Sxx = 5 around the means (1.5, 1.5)
        assert!((fit.coef[1] - 0.6).abs() < 1e-12);
        assert!((fit.coef[0] - 0.6).abs() < 1e-12);
        // residuals -0.1, -0.2, 0.7, -0.4 -> rss 0.7 on 2 degrees of freedom
        assert!((fit.residual_variance - 0.35).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_is_detected() {
        let x = vec![
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![3.0, 6.0],
            vec![4.0, 8.0],
        ];
        assert_eq!(
            ols(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap_err(),
            OlsError::RankDeficient
        );
        assert!(matches!(
            ols(&[vec![1.0]], &[1.0]),
            Err(OlsError::TooFewRows { .. })
        ));
    }

    #[test]
    fn constant_column_is_rank_deficient() {
        let x = vec![vec![1.0], vec![1.0], vec![1.0]];
        assert_eq!(
            ols(&x, &[1.0, 2.0, 3.0]).unwrap_err(),
            OlsError::RankDeficient
        );
    }
}

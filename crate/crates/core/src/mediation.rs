//! Single-mediator analysis by three least-squares fits.
//!
//! Lettering: `a` is treatment -> mediator, `c` is mediator -> outcome given
//! treatment, `b` is the direct treatment -> outcome slope given the mediator
//! and `b_total` the slope with the mediator left out. The indirect effect is
//! `a·c`, and on any common sample `b_total - b = a·c` exactly.
//!
//! All tests use the standard normal as reference distribution.

use serde::Serialize;
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::ols::{ols, OlsError};

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MediationError {
    #[error("{rows} observations is too few; need at least {needed}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("design matrix of the {0} regression is rank deficient")]
    RankDeficient(&'static str),
    #[error("observation {0} is not finite")]
    NonFinite(usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediationFit {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub b_total: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub se_c: f64,
    pub se_b_total: f64,
    /// Intercept of the mediator regression.
    pub bias_mediator: f64,
    /// Intercept of the joint outcome regression.
    pub bias_outcome: f64,
    /// Intercept of the total-effect regression.
    pub bias_total: f64,
}

impl MediationFit {
    pub fn indirect(&self) -> f64 {
        self.a * self.c
    }
}

/// Fits mediator ~ t, outcome ~ t + mediator and outcome ~ t on `(t, mediator, y)` triples.
pub fn fit_mediation(data: &[(f64, f64, f64)]) -> Result<MediationFit, MediationError> {
    if data.len() < 4 {
        return Err(MediationError::TooFewRows {
            rows: data.len(),
            needed: 4,
        });
    }
    if let Some(i) = data
        .iter()
        .position(|(t, m, y)| !(t.is_finite() && m.is_finite() && y.is_finite()))
    {
        return Err(MediationError::NonFinite(i));
    }
    let t: Vec<Vec<f64>> = data.iter().map(|r| vec![r.0]).collect();
    let tm: Vec<Vec<f64>> = data.iter().map(|r| vec![r.0, r.1]).collect();
    let m: Vec<f64> = data.iter().map(|r| r.1).collect();
    let y: Vec<f64> = data.iter().map(|r| r.2).collect();
    let wrap = |which| {
        move |e| match e {
            OlsError::RankDeficient => MediationError::RankDeficient(which),
            OlsError::TooFewRows { rows, needed } => MediationError::TooFewRows { rows, needed },
        }
    };
    let fm = ols(&t, &m).map_err(wrap("mediator"))?;
    let fy = ols(&tm, &y).map_err(wrap("outcome"))?;
    let ft = ols(&t, &y).map_err(wrap("total"))?;
    Ok(MediationFit {
        n: data.len(),
        a: fm.coef[1],
        b: fy.coef[1],
        c: fy.coef[2],
        b_total: ft.coef[1],
        se_a: fm.std_err[1],
        se_b: fy.std_err[1],
        se_c: fy.std_err[2],
        se_b_total: ft.std_err[1],
        bias_mediator: fm.coef[0],
        bias_outcome: fy.coef[0],
        bias_total: ft.coef[0],
    })
}

/// Two-sided normal p-value.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

fn coefficient_p(est: f64, se: f64) -> f64 {
    if se > 0.0 {
        two_sided_p(est / se)
    } else if est != 0.0 {
        0.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalSteps {
    pub alpha: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
    pub a_significant: bool,
    pub b_significant: bool,
    pub c_significant: bool,
    /// `|b| < |b_total|`.
    pub direct_smaller: bool,
    pub detected: bool,
}

/// Indirect causation is declared when `a`, `b` and `c` are all significant
/// at `alpha` and the direct slope is smaller in magnitude than the total.
pub fn causal_steps(fit: &MediationFit, alpha: f64) -> Result<CausalSteps, MediationError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MediationError::BadAlpha(alpha));
    }
    let p_a = coefficient_p(fit.a, fit.se_a);
    let p_b = coefficient_p(fit.b, fit.se_b);
    let p_c = coefficient_p(fit.c, fit.se_c);
    let direct_smaller = fit.b.abs() < fit.b_total.abs();
    let (sa, sb, sc) = (p_a < alpha, p_b < alpha, p_c < alpha);
    Ok(CausalSteps {
        alpha,
        p_a,
        p_b,
        p_c,
        a_significant: sa,
        b_significant: sb,
        c_significant: sc,
        direct_smaller,
        detected: sa && sb && sc && direct_smaller,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
    /// Zero standard error with a nonzero estimate; `p` is reported as 0.
    pub degenerate: bool,
}

fn z_test(est: f64, se: f64) -> TestResult {
    if se > 0.0 {
        let z = est / se;
        TestResult {
            statistic: z,
            p: two_sided_p(z),
            degenerate: false,
        }
    } else if est != 0.0 {
        TestResult {
            statistic: est.signum() * f64::INFINITY,
            p: 0.0,
            degenerate: true,
        }
    } else {
        TestResult {
            statistic: 0.0,
            p: 1.0,
            degenerate: false,
        }
    }
}

/// Tests `b_total - b = 0`.
///
/// The variance of the difference is taken as `|se_b² - se_b_total²|`: under
/// either null (`a = 0` or `c = 0`) the covariance of the two slopes equals
/// the variance of the more efficient one, so the difference of variances
/// is the variance of the difference.
pub fn difference_test(fit: &MediationFit) -> TestResult {
    let var = (fit.se_b * fit.se_b - fit.se_b_total * fit.se_b_total).abs();
    z_test(fit.b_total - fit.b, var.sqrt())
}

/// Sobel test of `a·c = 0` with first-order delta-method variance.
pub fn sobel_test(fit: &MediationFit) -> TestResult {
    let (a, c) = (fit.a, fit.c);
    if a == 0.0 && c == 0.0 {
        return TestResult {
            statistic: 0.0,
            p: 1.0,
            degenerate: false,
        };
    }
    let se = (c * c * fit.se_a * fit.se_a + a * a * fit.se_c * fit.se_c).sqrt();
    z_test(a * c, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Orthogonal zero-mean design, Y exact, mediator noise orthogonal to T.
    fn triangle_exact() -> Vec<(f64, f64, f64)> {
        let t = [-1.0, -1.0, 1.0, 1.0, -2.0, 2.0];
        let u = [-1.0, 1.0, -1.0, 1.0, 0.0, 0.0];
        t.iter()
            .zip(&u)
            .map(|(&t, &u)| {
                let m = 0.5 * t + u;
                (t, m, 0.7 * t + 0.4 * m)
            })
            .collect()
    }

    #[test]
    fn triangle_coefficients_recovered_exactly() {
        let f = fit_mediation(&triangle_exact()).unwrap();
        assert!((f.a - 0.5).abs() < 1e-12);
        assert!((f.b - 0.7).abs() < 1e-12);
        assert!((f.c - 0.4).abs() < 1e-12);
        assert!((f.b_total - 0.9).abs() < 1e-12);
        assert!((f.b_total - f.b - f.indirect()).abs() < 1e-12);
        assert!(f.se_b < 1e-12 && f.se_c < 1e-12);
    }

    #[test]
    fn hand_p_values() {
        let p = two_sided_p(1.959963984540054);
        assert!((p - 0.05).abs() < 1e-10, "{p}");
        assert_eq!(two_sided_p(0.0), 1.0);
    }

    #[test]
    fn degenerate_tests() {
        let f = fit_mediation(&triangle_exact()).unwrap();
        let d = difference_test(&f);
        assert!(d.statistic > 0.0);
        let mut g = f.clone();
        g.a = 0.0;
        g.c = 0.0;
        assert_eq!(sobel_test(&g).p, 1.0);
        g.se_b = 0.0;
        g.se_b_total = 0.0;
        g.b_total = g.b + 1.0;
        let d = difference_test(&g);
        assert!(d.degenerate && d.p == 0.0);
    }

    #[test]
    fn small_or_collinear_inputs_are_rejected() {
        assert!(matches!(
            fit_mediation(&[(0.0, 0.0, 0.0); 3]),
            Err(MediationError::TooFewRows { .. })
        ));
        let collinear: Vec<_> = (0..6).map(|i| (i as f64, 2.0 * i as f64, 1.0)).collect();
        assert_eq!(
            fit_mediation(&collinear).unwrap_err(),
            MediationError::RankDeficient("outcome")
        );
        let f = fit_mediation(&triangle_exact()).unwrap();
        assert_eq!(
            causal_steps(&f, 1.5).unwrap_err(),
            MediationError::BadAlpha(1.5)
        );
    }

    #[test]
    fn negative_indirect_path_fails_rule_two() {
        // a·c < 0 shrinks the total below the direct slope.
        let t = [-1.0, -1.0, 1.0, 1.0, -2.0, 2.0, 0.5, -0.5];
        let u = [-1.0, 1.0, -1.0, 1.0, 0.3, -0.3, 0.7, -0.7];
        let e = [0.1, -0.2, 0.05, 0.1, -0.1, 0.2, -0.05, -0.1];
        let data: Vec<_> = (0..8)
            .map(|i| {
                let m = 0.5 * t[i] + u[i];
                (t[i], m, 0.7 * t[i] - 0.4 * m + e[i])
            })
            .collect();
        let f = fit_mediation(&data).unwrap();
        let s = causal_steps(&f, 0.05).unwrap();
        assert!(!s.direct_smaller);
        assert!(!s.detected);
    }
}

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::correlation::t_two_sided_p;
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "intercept";

/// Relative size below which a pivot of the R factor counts as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    /// Intercept first, then the factors in input order.
    pub coefficients: Vec<Coefficient>,
    pub n: usize,
    pub df_residual: usize,
    pub r_squared: f64,
    /// Residual standard error.
    pub sigma: f64,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// p-value for `estimate / std_error`; an exact fit gives 0 for a nonzero
/// estimate and 1 for a zero one.
fn coefficient_p(estimate: f64, std_error: f64, df: f64) -> (f64, f64) {
    if std_error == 0.0 {
        if estimate == 0.0 {
            (0.0, 1.0)
        } else {
            (estimate.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = estimate / std_error;
        (t, t_two_sided_p(t, df))
    }
}

fn design(n: usize, factors: &[(&str, &[f64])]) -> Result<DMatrix<f64>> {
    for (name, col) in factors {
        if col.len() != n {
            return Err(Error::Input(format!(
                "factor `{name}` has {} values, response has {n}",
                col.len()
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("factor `{name}` has non-finite values")));
        }
    }
    Ok(DMatrix::from_fn(n, factors.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            factors[j - 1].1[i]
        }
    }))
}

struct LeastSquares {
    beta: DVector<f64>,
    residuals: DVector<f64>,
    /// Inverse of the upper-triangular factor, for `(X^T X)^-1 = R^-1 R^-T`.
    r_inv: DMatrix<f64>,
}

fn least_squares(x: DMatrix<f64>, y: &DVector<f64>, names: &[&str]) -> Result<LeastSquares> {
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (j, name) in names.iter().enumerate() {
        if r[(j, j)].abs() <= RANK_TOLERANCE * scale {
            return Err(Error::SingularDesign(format!(
                "column `{name}` is a linear combination of earlier columns"
            )));
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let p = r.ncols();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularDesign("triangular inverse failed".into()))?;
    let residuals = y - x * &beta;
    Ok(LeastSquares {
        beta,
        residuals,
        r_inv,
    })
}

/// Ordinary least squares of `y` on the named factor columns plus an
/// intercept, with two-sided t-tests on every coefficient.
pub fn multiple_regression(y: &[f64], factors: &[(&str, &[f64])]) -> Result<RegressionFit> {
    let n = y.len();
    let p = factors.len() + 1;
    if n <= p {
        return Err(Error::SampleSize {
            needed: p + 1,
            got: n,
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("response has non-finite values".into()));
    }
    let x = design(n, factors)?;
    let yv = DVector::from_column_slice(y);
    let names: Vec<&str> = std::iter::once(INTERCEPT)
        .chain(factors.iter().map(|(name, _)| *name))
        .collect();
    let ls = least_squares(x, &yv, &names)?;

    let df = n - p;
    let rss = ls.residuals.norm_squared();
    let sigma2 = rss / df as f64;
    let mean = yv.mean();
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };

    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let var = sigma2 * ls.r_inv.row(j).norm_squared();
            let std_error = var.sqrt();
            let estimate = ls.beta[j];
            let (t_stat, p_value) = coefficient_p(estimate, std_error, df as f64);
            Coefficient {
                name: name.to_string(),
                estimate,
                std_error,
                t_stat,
                p_value,
            }
        })
        .collect();

    Ok(RegressionFit {
        coefficients,
        n,
        df_residual: df,
        r_squared,
        sigma: sigma2.sqrt(),
    })
}

/// Residuals of `y` after OLS on the control columns plus an intercept.
pub fn residualize(y: &[f64], controls: &[(&str, &[f64])]) -> Result<Vec<f64>> {
    let n = y.len();
    if n <= controls.len() + 1 {
        return Err(Error::SampleSize {
            needed: controls.len() + 2,
            got: n,
        });
    }
    let x = design(n, controls)?;
    let names: Vec<&str> = std::iter::once(INTERCEPT)
        .chain(controls.iter().map(|(name, _)| *name))
        .collect();
    let ls = least_squares(x, &DVector::from_column_slice(y), &names)?;
    Ok(ls.residuals.iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearTrend {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub p: f64,
    pub n: usize,
}

/// Simple OLS of `y` on `x` with a two-sided t-test on the slope
/// (`n - 2` degrees of freedom).
pub fn linear_trend(x: &[f64], y: &[f64]) -> Result<LinearTrend> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Input("length mismatch".into()));
    }
    if n < 3 {
        return Err(Error::SampleSize { needed: 3, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("abscissa has no spread".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let df = (n - 2) as f64;
    let std_error = (rss / df / sxx).sqrt();
    let (_, p) = coefficient_p(slope, std_error, df);
    Ok(LinearTrend {
        slope,
        intercept,
        std_error,
        p,
        n,
    })
}

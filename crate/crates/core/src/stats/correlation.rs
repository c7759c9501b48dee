use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::regression::residualize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample correlation with a t-test on `df = n - 2 - extra_df_loss` degrees
/// of freedom.
fn correlation(x: &[f64], y: &[f64], lost_df: usize) -> Result<CorrelationReport> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 + lost_df {
        return Err(Error::SampleSize {
            needed: 3 + lost_df,
            got: n,
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite value in correlation input".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation of a constant series".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2 - lost_df) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        t_two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(CorrelationReport { r, p, n })
}

/// Pearson correlation with a two-sided t-test on `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationReport> {
    correlation(x, y, 0)
}

/// Correlation between `target` and `factor` after regressing both on the
/// control columns (with intercept). The t-test uses `n - 2 - k` degrees of
/// freedom for `k` controls.
pub fn partial_correlation(
    target: &[f64],
    factor: &[f64],
    controls: &[(&str, &[f64])],
) -> Result<CorrelationReport> {
    if controls.is_empty() {
        return pearson(target, factor);
    }
    let rt = residualize(target, controls)?;
    let rf = residualize(factor, controls)?;
    for (name, orig, res) in [("target", target, &rt), ("factor", factor, &rf)] {
        let m = mean(orig);
        let spread: f64 = orig.iter().map(|v| (v - m) * (v - m)).sum::<f64>().sqrt();
        let left: f64 = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        if spread == 0.0 || left <= 1e-10 * spread {
            return Err(Error::Degenerate(format!(
                "{name} is explained entirely by the controls"
            )));
        }
    }
    correlation(&rt, &rf, controls.len())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn perfect_correlations() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.r - 1.0).abs() < 1e-15);
        assert!(r.p < 1e-6);
        let r = pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap();
        assert!((r.r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_point_eight() {
        // deviations x: -1.5 -0.5 0.5 1.5, y: -1.5 0.5 -0.5 1.5
        // sxy = 2.25 - 0.25 - 0.25 + 2.25 = 4, sxx = syy = 5
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.r - 0.8).abs() < 1e-15);
        assert_eq!(r.n, 4);
        // t = 0.8 * sqrt(2 / 0.36), df = 2
        let t = 0.8 * (2.0f64 / 0.36).sqrt();
        // closed form for df = 2: p = 1 - t / sqrt(2 + t^2)
        let p = 1.0 - t / (2.0 + t * t).sqrt();
        assert!((r.p - p).abs() < 1e-12, "{} vs {p}", r.p);
    }

    #[test]
    fn constant_and_short_inputs_fail() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Degenerate(_))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::SampleSize { .. })));
    }

    #[test]
    fn t_p_value_reference_points() {
        assert_eq!(t_two_sided_p(0.0, 10.0), 1.0);
        // df = 1 is Cauchy: p = 1 - 2 atan(t) / pi
        let p = t_two_sided_p(1.0, 1.0);
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_without_controls_is_pearson() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0];
        assert_eq!(partial_correlation(&x, &y, &[]).unwrap(), pearson(&x, &y).unwrap());
    }

    #[test]
    fn partial_with_collinear_factor_is_degenerate() {
        let c = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let f: Vec<f64> = c.iter().map(|v| 3.0 * v - 1.0).collect();
        let t = [0.3, 0.1, 0.9, 0.2, 0.8, 0.4];
        let err = partial_correlation(&t, &f, &[("c", &c)]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn planted_partial_structure() {
        // target = factor + 3 * control; factor is weakly tied to the control
        let control: Vec<f64> = (0..40).map(|i| ((i * 7) % 13) as f64).collect();
        let factor: Vec<f64> = (0..40)
            .map(|i| ((i * 5) % 11) as f64 - 0.3 * control[i])
            .collect();
        let target: Vec<f64> = (0..40).map(|i| factor[i] + 3.0 * control[i]).collect();
        let raw = pearson(&target, &factor).unwrap();
        let partial = partial_correlation(&target, &factor, &[("c", &control)]).unwrap();
        assert!(partial.r > raw.r);
        assert!((partial.r - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn affine_invariance(
            data in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..30),
            a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -5.0f64..5.0,
        ) {
            let x: Vec<f64> = data.iter().map(|p| p.0).collect();
            let y: Vec<f64> = data.iter().map(|p| p.1).collect();
            if let Ok(base) = pearson(&x, &y) {
                let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let ys: Vec<f64> = y.iter().map(|v| c * v + d).collect();
                let moved = pearson(&xs, &ys).unwrap();
                prop_assert!((base.r - moved.r).abs() < 1e-12);
            }
        }
    }
}

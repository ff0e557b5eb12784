//! Distribution helpers, least squares regression and isotonic regression.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

pub fn norm_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Two-sided critical value `z_{1-(1-level)/2}`.
pub fn z_two_sided(level: f64) -> f64 {
    norm_quantile(0.5 + level / 2.0)
}

/// Upper tail `P(X > x)` of a chi-squared variable.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df).expect("valid df").cdf(x)
}

pub fn chi2_quantile(p: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("valid df").inverse_cdf(p)
}

/// Upper tail of an F(d1, d2) variable.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    1.0 - FisherSnedecor::new(d1, d2).expect("valid df").cdf(x)
}

pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("valid df").inverse_cdf(p)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` denominator.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Result of an ordinary least-squares regression.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// `sigma^2 (X^T X)^{-1}` with `sigma^2 = RSS / (n - k)`.
    pub cov: Matrix<f64>,
    /// HC1 heteroskedasticity-robust covariance.
    pub cov_hc1: Matrix<f64>,
    pub rss: f64,
    pub r_squared: f64,
}

/// Least squares of `y` on the columns of `x`. Fails with `CollinearDesign`
/// when `X^T X` is numerically singular.
pub fn ols(x: &Matrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let (n, k) = (x.rows(), x.cols());
    if n < k || y.len() != n {
        return Err(Error::InsufficientData { needed: k, got: n });
    }
    let xtx = x.gram();
    if xtx.condition_number() > 1e13 {
        return Err(Error::CollinearDesign);
    }
    let xtx_inv = xtx.inverse().ok_or(Error::CollinearDesign)?;
    let coef = xtx_inv.matvec(&x.tmatvec(y));
    let fitted = x.matvec(&coef);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = (n - k) as f64;
    let sigma2 = if dof > 0.0 { rss / dof } else { f64::NAN };
    let cov = xtx_inv.scale(sigma2);

    let mut meat = Matrix::zeros(k, k);
    for (i, r) in residuals.iter().enumerate() {
        meat.add_outer(x.row(i), r * r);
    }
    let hc1_scale = if dof > 0.0 { n as f64 / dof } else { f64::NAN };
    let cov_hc1 = xtx_inv.matmul(&meat).matmul(&xtx_inv).scale(hc1_scale);

    let ym = mean(y);
    let tss: f64 = y.iter().map(|v| (v - ym) * (v - ym)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
    Ok(OlsFit { coef, residuals, fitted, cov, cov_hc1, rss, r_squared })
}

/// Nondecreasing least-squares fit (pool-adjacent-violators).
pub fn isotonic_increasing(y: &[f64]) -> Vec<f64> {
    // (sum, count) blocks
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 > s2 / c2 as f64 {
                blocks.pop();
                let last = blocks.last_mut().expect("two blocks");
                *last = (s1 + s2, c1 + c2);
            } else {
                break;
            }
        }
    }
    blocks.into_iter().flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((z_two_sided(0.95) - 1.959964).abs() < 1e-5);
        assert!((chi2_quantile(0.95, 1.0) - 3.841459).abs() < 1e-5);
        assert!((chi2_sf(3.841459, 1.0) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn ols_exact_line() {
        let x = Matrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 0.5 * i as f64).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12 && (fit.coef[1] - 0.5).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn ols_collinear() {
        let x = Matrix::from_fn(4, 2, |i, _| i as f64 + 1.0);
        assert!(matches!(ols(&x, &[1.0, 2.0, 3.0, 4.0]), Err(Error::CollinearDesign)));
    }

    #[test]
    fn pava_pools_violators() {
        let fit = isotonic_increasing(&[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(fit, vec![1.0, 2.5, 2.5, 4.0]);
        let inc = [1.0, 2.0, 3.0];
        assert_eq!(isotonic_increasing(&inc), inc.to_vec());
    }
}

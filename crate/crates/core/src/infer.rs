//! Residual diagnostics and model-comparison tests.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::{Family, ThetaTwoComp};
use crate::error::{Error, Result};
use crate::estimate::{allow_singular, fit_nls, fit_two_comp_mapped, FitOptions, FitReport, TimeSeries};
use crate::linalg::Matrix;
use crate::rng::{stream_id, stream_rng, Purpose};
use crate::stats::{chi2_sf, f_sf, isotonic_increasing, norm_cdf, ols};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    #[serde(rename = "p")]
    pub p_value: Option<f64>,
    pub decision_at_05: bool,
    pub method: String,
}

impl TestResult {
    fn with_p(statistic: f64, p: f64, method: impl Into<String>) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self { statistic, p_value: Some(p), decision_at_05: p < 0.05, method: method.into() }
    }
}

/// `sum (e_i - e_{i-1})^2 / sum e_i^2`. No p-value.
pub fn durbin_watson(residuals: &[f64]) -> Result<TestResult> {
    if residuals.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: residuals.len() });
    }
    let ss: f64 = residuals.iter().map(|e| e * e).sum();
    if !(ss > 0.0) {
        return Err(Error::ZeroResidualNorm);
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let dw = num / ss;
    let band = if dw < 1.5 {
        "positive autocorrelation"
    } else if dw > 2.5 {
        "negative autocorrelation"
    } else {
        "no strong autocorrelation"
    };
    Ok(TestResult {
        statistic: dw,
        p_value: None,
        decision_at_05: false,
        method: format!("Durbin-Watson (rule of thumb: <1.5 positive, 1.5-2.5 none, >2.5 negative): {band}"),
    })
}

/// Breusch-Pagan: squared residuals regressed on `[1, x]`; F-test p-value.
pub fn breusch_pagan(residuals: &[f64], regressor: &[f64]) -> Result<TestResult> {
    let n = residuals.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    if regressor.len() != n {
        return Err(Error::domain("regressor and residuals differ in length"));
    }
    let xm = regressor.iter().sum::<f64>() / n as f64;
    let xscale = regressor.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if regressor.iter().all(|v| (v - xm).abs() <= 1e-12 * xscale) {
        return Err(Error::DegenerateRegressor);
    }
    let e2: Vec<f64> = residuals.iter().map(|e| e * e).collect();
    let x = Matrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { regressor[i] });
    let fit = ols(&x, &e2).map_err(|_| Error::DegenerateRegressor)?;
    let method = "Breusch-Pagan (F variant, auxiliary regression on [1, t])";
    let e2m = e2.iter().sum::<f64>() / n as f64;
    if e2.iter().all(|v| (v - e2m).abs() <= 1e-15 * e2m.max(f64::MIN_POSITIVE)) {
        return Ok(TestResult::with_p(0.0, 1.0, method));
    }
    let r2 = fit.r_squared.clamp(0.0, 1.0);
    let df2 = (n - 2) as f64;
    let f = if r2 < 1.0 { r2 / ((1.0 - r2) / df2) } else { f64::INFINITY };
    Ok(TestResult::with_p(f, f_sf(f, 1.0, df2), method))
}

/// Schwarz-corrected Vuong statistic, positive when model `a` fits better.
pub fn vuong(loglik_a: &[f64], loglik_b: &[f64], k_a: usize, k_b: usize) -> Result<TestResult> {
    let n = loglik_a.len();
    if n != loglik_b.len() {
        return Err(Error::domain("log-likelihood vectors differ in length"));
    }
    if n < 5 {
        return Err(Error::TooShort { needed: 5, got: n });
    }
    let d: Vec<f64> = loglik_a.iter().zip(loglik_b).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let correction = (k_a as f64 - k_b as f64) * nf.ln() / 2.0;
    let num = d.iter().sum::<f64>() - correction;
    let mean = d.iter().sum::<f64>() / nf;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf).sqrt();
    let method = "Vuong (Schwarz-corrected, two-sided normal)";
    let scale = loglik_a.iter().chain(loglik_b).map(|v| v.abs()).fold(1.0, f64::max);
    if sd <= 1e-14 * scale {
        if num.abs() <= 1e-12 * scale * nf {
            return Ok(TestResult::with_p(0.0, 1.0, method));
        }
        return Err(Error::ZeroVariance);
    }
    let t = num / (nf.sqrt() * sd);
    Ok(TestResult::with_p(t, 2.0 * (1.0 - norm_cdf(t.abs())), method))
}

/// Fit restricted to the nondecreasing region of the two-component model.
#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedLr {
    pub test: TestResult,
    pub unconstrained: Vec<f64>,
    pub constrained: Vec<f64>,
    pub sse_unconstrained: f64,
    pub sse_constrained: f64,
}

/// Maps free coordinates onto the nondecreasing region: `beta = s alpha`
/// with `s = 1 / (1 + z^2)` in `(0, 1]`, and `U = N0 / s + w^2`, so that
/// `beta U >= alpha N0` (and `U >= N0` at `alpha = beta`).
fn monotone_map(z: &[f64]) -> [f64; 4] {
    let n0 = z[0].exp();
    let alpha = z[1].exp();
    let s = 1.0 / (1.0 + z[2] * z[2]);
    let umax = n0 / s + z[3] * z[3];
    [n0, alpha, umax, s * alpha]
}

fn monotone_coords(theta: &[f64; 4]) -> Vec<f64> {
    let [n0, alpha, umax, beta] = *theta;
    let s = (beta / alpha).clamp(1e-6, 1.0);
    vec![n0.max(1e-8).ln(), alpha.ln(), (1.0 / s - 1.0).max(0.0).sqrt(), (umax - n0 / s).max(0.0).sqrt()]
}

/// Likelihood ratio of the unconstrained two-component fit against the fit
/// restricted to nondecreasing curves, with a 50:50 `chi2_0 : chi2_1` null.
pub fn constrained_lr(series: &TimeSeries) -> Result<ConstrainedLr> {
    let opts = FitOptions::default();
    let fit = allow_singular(fit_nls(series, Family::TwoComp, None, &opts))?;
    constrained_lr_from(series, &fit)
}

pub fn constrained_lr_from(series: &TimeSeries, fit: &FitReport) -> Result<ConstrainedLr> {
    if fit.family != Family::TwoComp {
        return Err(Error::domain("constrained LR needs a two-component fit"));
    }
    let opts = FitOptions::default();
    let th = [fit.theta_hat[0], fit.theta_hat[1], fit.theta_hat[2], fit.theta_hat[3]];
    let s0 = (th[3] / th[1]).min(1.0);
    let mut starts = vec![monotone_coords(&th), monotone_coords(&[th[0].min(s0 * th[2]), th[1], th[2], th[3]])];
    let y0 = series.values[0].abs().max(1e-3);
    let ylast = series.values.last().copied().unwrap_or(1.0).abs().max(1e-3);
    let span = (series.times.last().copied().unwrap_or(1.0) - series.times[0]).max(1e-9);
    for a in [2.0, 8.0] {
        for s in [0.2, 0.6, 0.95] {
            let alpha = a / span;
            let n0 = (0.5 * y0).min(ylast * s);
            starts.push(monotone_coords(&[n0, alpha, ylast.max(n0 / s), s * alpha]));
        }
    }
    let mf = fit_two_comp_mapped(series, monotone_map, &starts, &opts).ok_or(Error::NonConvergence { iterations: opts.max_iter })?;
    if !mf.converged {
        return Err(Error::NonConvergence { iterations: opts.max_iter });
    }
    let n = series.len() as f64;
    let sse_u = fit.sse.max(f64::MIN_POSITIVE);
    let (sse_c, constrained) = if mf.sse < fit.sse { (fit.sse, th.to_vec()) } else { (mf.sse, mf.theta.to_vec()) };
    let lambda = (n * (sse_c.max(f64::MIN_POSITIVE) / sse_u).ln()).max(0.0);
    let p = if lambda > 0.0 { 0.5 * chi2_sf(lambda, 1.0) } else { 1.0 };
    Ok(ConstrainedLr {
        test: TestResult::with_p(lambda, p, "constrained LR, monotone vs trough (50:50 chi2_0:chi2_1 null)"),
        unconstrained: fit.theta_hat.clone(),
        constrained,
        sse_unconstrained: fit.sse,
        sse_constrained: sse_c,
    })
}

/// Most negative sum of three consecutive first differences.
fn windowed_drop(y: &[f64]) -> f64 {
    y.windows(4).map(|w| w[3] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Bootstrap test for a downward run.
///
/// The statistic is `min_i (y_{i+3} - y_i)`. The null distribution resamples
/// residuals around the isotonic (nondecreasing) fit, rescaled to a robust
/// noise level (median absolute second difference over `0.6745 sqrt 6`)
/// since isotonic residuals are shrunk. The p-value is the one-sided
/// `(1 + #{S* <= S}) / (1 + B)`.
pub fn shape_test(series: &TimeSeries, n_boot: usize, seed: u64) -> Result<TestResult> {
    let n = series.len();
    if n < 8 {
        return Err(Error::TooShort { needed: 8, got: n });
    }
    if n_boot == 0 {
        return Err(Error::domain("n_boot must be positive"));
    }
    let y = &series.values;
    let s = windowed_drop(y);
    let iso = isotonic_increasing(y);
    let raw: Vec<f64> = y.iter().zip(&iso).map(|(a, b)| a - b).collect();
    let centre = raw.iter().sum::<f64>() / n as f64;
    let spread = (raw.iter().map(|r| (r - centre).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut d2: Vec<f64> = y.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).collect();
    d2.sort_by(f64::total_cmp);
    let mid = d2.len() / 2;
    let med = if d2.len() % 2 == 0 { 0.5 * (d2[mid - 1] + d2[mid]) } else { d2[mid] };
    let noise = med / (0.674_489_75 * 6f64.sqrt());
    let resid: Vec<f64> = if spread > 0.0 {
        raw.iter().map(|r| (r - centre) * noise / spread).collect()
    } else {
        raw
    };
    let stream = stream_id(0, Purpose::ShapeTest);
    let tol = 1e-12 * y.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let hits: usize = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, stream, b as u64);
            let ystar: Vec<f64> = iso.iter().map(|m| m + resid[rng.random_range(0..n)]).collect();
            usize::from(windowed_drop(&ystar) <= s + tol)
        })
        .sum();
    let p = (1 + hits) as f64 / (1 + n_boot) as f64;
    Ok(TestResult::with_p(s, p, format!("shape test (window-3 drop, isotonic residual bootstrap, B={n_boot})")))
}

/// Durbin-Watson and Breusch-Pagan for a fit against its series times.
pub fn diagnostics(fit: &FitReport, times: &[f64]) -> Result<(TestResult, TestResult)> {
    Ok((durbin_watson(&fit.residuals)?, breusch_pagan(&fit.residuals, times)?))
}

/// Phase of the two-component fit, when it has one.
pub fn fitted_phase(fit: &FitReport) -> Option<crate::curves::PhaseReport<f64>> {
    fit.theta_two_comp().map(|t: ThetaTwoComp<f64>| t.classify_phase())
}

/// One row of a family comparison.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyRow {
    pub family: Family,
    pub aic: Option<f64>,
    pub rmse: Option<f64>,
    pub dw: Option<f64>,
    pub bp_p: Option<f64>,
    /// Vuong statistic of the two-component fit against this family.
    pub vuong_twocomp: Option<TestResult>,
    pub error: Option<String>,
    #[serde(skip)]
    pub fit: Option<FitReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub rows: Vec<FamilyRow>,
    /// Families in increasing AIC; failed fits are left out.
    pub aic_order: Vec<Family>,
}

impl Comparison {
    pub fn row(&self, family: Family) -> Option<&FamilyRow> {
        self.rows.iter().find(|r| r.family == family)
    }
}

/// Fits every family on one series and collects AIC, RMSE, DW and BP p.
/// A family that fails to fit keeps its row with the error message.
pub fn compare_families(series: &TimeSeries) -> Result<Comparison> {
    series.validate()?;
    let opts = FitOptions::default();
    let fits: Vec<(Family, Result<FitReport>)> =
        Family::ALL.iter().map(|&f| (f, allow_singular(fit_nls(series, f, None, &opts)))).collect();
    let base = fits.iter().find(|(f, _)| *f == Family::TwoComp).and_then(|(_, r)| r.as_ref().ok()).cloned();
    let rows: Vec<FamilyRow> = fits
        .into_iter()
        .map(|(family, res)| match res {
            Ok(fit) => {
                let (dw, bp) = match diagnostics(&fit, &series.times) {
                    Ok((dw, bp)) => (Some(dw.statistic), bp.p_value),
                    Err(_) => (None, None),
                };
                let vuong_twocomp = base.as_ref().filter(|_| family != Family::TwoComp).and_then(|b| {
                    vuong(&b.pointwise_loglik(), &fit.pointwise_loglik(), b.k(), fit.k()).ok()
                });
                FamilyRow {
                    family,
                    aic: Some(fit.aic),
                    rmse: Some(fit.rmse()),
                    dw,
                    bp_p: bp,
                    vuong_twocomp,
                    error: None,
                    fit: Some(fit),
                }
            }
            Err(e) => FamilyRow {
                family,
                aic: None,
                rmse: None,
                dw: None,
                bp_p: None,
                vuong_twocomp: None,
                error: Some(e.to_string()),
                fit: None,
            },
        })
        .collect();
    let mut ranked: Vec<(Family, f64)> = rows.iter().filter_map(|r| r.aic.map(|a| (r.family, a))).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(Comparison { rows, aic_order: ranked.into_iter().map(|(f, _)| f).collect() })
}

//! Nonlinear least-squares fitting of the comparator families plus the
//! uncertainty machinery built on top of it.
//!
//! Positive parameters are optimized on the log scale; the bump amplitude of
//! [`Family::LogisticBump`] is left unconstrained.

mod identify;
pub(crate) mod lm;
mod regression;
mod uncertainty;

pub use identify::{identify_from_moments, rank_candidates_by_sse, smoothed_moments};
pub use regression::{
    embedding_gradient, estimate_hprime0, Cohort, GradientEstimate, HazardPanelRow, Hprime0Estimate,
};
pub use uncertainty::{
    delta_ci_tstar, prepost_delta_beta, profile_ci_tstar, select_window, BootstrapOptions,
    PrePostEstimate, ProfileCi, TstarCi, WindowChoice, WindowSpec,
};

use serde::{Deserialize, Serialize};

use crate::curves::{family_value, Family, ThetaTwoComp};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

use lm::{LmOptions, LmOutcome};

/// What the `values` column of a series measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    #[default]
    Level,
    Counts,
    Successes,
}

/// Ordered observations `(t_i, y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Day-of-week index per point, 0 = Monday .. 6 = Sunday.
    pub dow: Option<Vec<u8>>,
    pub unit: String,
    pub kind: ValueKind,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = Self { times, values, dow: None, unit: "day".into(), kind: ValueKind::Level };
        s.validate()?;
        Ok(s)
    }

    pub fn with_dow(mut self, dow: Vec<u8>) -> Result<Self> {
        self.dow = Some(dow);
        self.validate()?;
        Ok(self)
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn with_kind(mut self, kind: ValueKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::domain("times and values differ in length"));
        }
        if let Some(row) = self.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneTime { row: row + 1 });
        }
        if self.times.iter().chain(&self.values).any(|v| !v.is_finite()) {
            return Err(Error::domain("series contains non-finite values"));
        }
        if let Some(dow) = &self.dow {
            if dow.len() != self.times.len() {
                return Err(Error::domain("day-of-week labels differ in length from times"));
            }
            if dow.iter().any(|&d| d > 6) {
                return Err(Error::domain("day-of-week index must be in 0..=6"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Points with the given indices, times shifted so the first lands at `origin`.
    pub fn subset(&self, idx: &[usize], origin_shift: f64) -> TimeSeries {
        TimeSeries {
            times: idx.iter().map(|&i| self.times[i] - origin_shift).collect(),
            values: idx.iter().map(|&i| self.values[i]).collect(),
            dow: self.dow.as_ref().map(|d| idx.iter().map(|&i| d[i]).collect()),
            unit: self.unit.clone(),
            kind: self.kind,
        }
    }

    fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) if b > a => b - a,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// Analytic for the two-component model, central differences otherwise.
    #[default]
    Auto,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub jacobian: JacobianMode,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-8, jacobian: JacobianMode::Auto }
    }
}

/// Condition number of `J^T J` above which the covariance is flagged.
pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub family: Family,
    #[serde(rename = "theta")]
    pub theta_hat: Vec<f64>,
    pub param_names: Vec<String>,
    /// `sigma2 (J^T J)^{-1}` in parameter order.
    #[serde(rename = "cov")]
    pub covariance: Matrix<f64>,
    /// Observed minus fitted.
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub sse: f64,
    /// `SSE / (n - k)`.
    #[serde(rename = "sigma2")]
    pub sigma2_hat: f64,
    /// `2k + n ln(SSE / n)`.
    pub aic: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub condition_number: f64,
    pub covariance_reliable: bool,
}

impl FitReport {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn k(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn rmse(&self) -> f64 {
        (self.sse / self.n() as f64).sqrt()
    }

    /// Two-component parameters, when this is a two-component fit.
    pub fn theta_two_comp(&self) -> Option<ThetaTwoComp<f64>> {
        (self.family == Family::TwoComp).then(|| ThetaTwoComp::from_params(&self.theta_hat).ok()).flatten()
    }

    /// Gaussian log-likelihood contributions at the MLE variance `SSE / n`.
    pub fn pointwise_loglik(&self) -> Vec<f64> {
        let s2 = (self.sse / self.n() as f64).max(f64::MIN_POSITIVE);
        let c = -0.5 * (2.0 * std::f64::consts::PI * s2).ln();
        self.residuals.iter().map(|r| c - r * r / (2.0 * s2)).collect()
    }

    pub fn loglik(&self) -> f64 {
        self.pointwise_loglik().iter().sum()
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        self.covariance.diag().into_iter().map(f64::sqrt).collect()
    }

    pub fn predict(&self, t: f64) -> f64 {
        family_value(self.family, &self.theta_hat, t)
    }
}

fn to_z(family: Family, p: &[f64]) -> Option<Vec<f64>> {
    let signed = family.signed_index();
    p.iter()
        .enumerate()
        .map(|(i, &v)| {
            if Some(i) == signed {
                Some(v)
            } else if v > 0.0 && v.is_finite() {
                Some(v.ln())
            } else {
                None
            }
        })
        .collect()
}

fn from_z(family: Family, z: &[f64]) -> Vec<f64> {
    let signed = family.signed_index();
    z.iter().enumerate().map(|(i, &v)| if Some(i) == signed { v } else { v.exp() }).collect()
}

fn residuals_for(family: Family, p: &[f64], times: &[f64], values: &[f64]) -> Option<Vec<f64>> {
    let r: Vec<f64> = times.iter().zip(values).map(|(&t, &y)| family_value(family, p, t) - y).collect();
    r.iter().all(|v| v.is_finite()).then_some(r)
}

/// Jacobian of the model values with respect to the natural parameters.
fn model_jacobian(family: Family, p: &[f64], times: &[f64], mode: JacobianMode) -> Matrix<f64> {
    if family == Family::TwoComp && mode == JacobianMode::Auto {
        let theta = ThetaTwoComp { n0: p[0], alpha: p[1], umax: p[2], beta: p[3] };
        let mut jac = Matrix::zeros(times.len(), 4);
        for (i, &t) in times.iter().enumerate() {
            let g = theta.gradient_unchecked(t).to_param_order();
            for (j, gj) in g.into_iter().enumerate() {
                jac[(i, j)] = gj;
            }
        }
        return jac;
    }
    let k = p.len();
    let mut jac = Matrix::zeros(times.len(), k);
    let mut q = p.to_vec();
    for j in 0..k {
        let h = 1e-6 * p[j].abs().max(1.0);
        for (i, &t) in times.iter().enumerate() {
            q[j] = p[j] + h;
            let up = family_value(family, &q, t);
            q[j] = p[j] - h;
            let dn = family_value(family, &q, t);
            jac[(i, j)] = (up - dn) / (2.0 * h);
        }
        q[j] = p[j];
    }
    jac
}

fn run_start(family: Family, start: &[f64], series: &TimeSeries, opts: &FitOptions) -> Option<LmOutcome> {
    let z0 = to_z(family, start)?;
    let (times, values) = (&series.times, &series.values);
    let res = |z: &[f64]| residuals_for(family, &from_z(family, z), times, values);
    let lm_opts = LmOptions { max_iter: opts.max_iter, tol: opts.tol };
    match (family, opts.jacobian) {
        (Family::TwoComp, JacobianMode::Auto) => {
            let jac = |z: &[f64], _r: &[f64]| {
                let p = from_z(family, z);
                let mut j = model_jacobian(family, &p, times, JacobianMode::Auto);
                for (col, pc) in p.iter().enumerate() {
                    for row in 0..times.len() {
                        j[(row, col)] *= pc;
                    }
                }
                Some(j)
            };
            lm::minimize(res, jac, z0, lm_opts)
        }
        _ => {
            let jac = |z: &[f64], _r: &[f64]| lm::numeric_jacobian(&res, z, times.len());
            lm::minimize(&res, jac, z0, lm_opts)
        }
    }
}

/// Fits `family` to `series` by Levenberg-Marquardt.
///
/// Without `init`, a deterministic set of starting points is tried and the
/// converged optimum with the smallest SSE is kept. A fit whose `J^T J` has a
/// condition number above [`SINGULAR_CONDITION`] is returned inside
/// [`Error::SingularJacobian`] with `covariance_reliable = false`.
pub fn fit_nls(series: &TimeSeries, family: Family, init: Option<&[f64]>, options: &FitOptions) -> Result<FitReport> {
    series.validate()?;
    let k = family.arity();
    if series.len() < k + 1 {
        return Err(Error::InsufficientData { needed: k + 1, got: series.len() });
    }
    let starts = match init {
        Some(p) => {
            if p.len() != k {
                return Err(Error::domain(format!("{family} takes {k} initial values, got {}", p.len())));
            }
            vec![p.to_vec()]
        }
        None => default_starts(family, series),
    };

    let mut best: Option<LmOutcome> = None;
    let mut max_iters = 0;
    for start in &starts {
        let Some(out) = run_start(family, start, series, options) else { continue };
        max_iters = max_iters.max(out.iterations);
        if !out.converged {
            continue;
        }
        if best.as_ref().is_none_or(|b| out.sse < b.sse) {
            best = Some(out);
        }
    }
    let best = best.ok_or(Error::NonConvergence { iterations: max_iters.max(options.max_iter) })?;
    build_report(family, series, from_z(family, &best.x), best.iterations, options.jacobian)
}

pub(crate) fn build_report(
    family: Family,
    series: &TimeSeries,
    theta: Vec<f64>,
    n_iter: usize,
    mode: JacobianMode,
) -> Result<FitReport> {
    let (n, k) = (series.len(), theta.len());
    let fitted: Vec<f64> = series.times.iter().map(|&t| family_value(family, &theta, t)).collect();
    let residuals: Vec<f64> = series.values.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2_hat = sse / (n - k) as f64;
    let aic = 2.0 * k as f64 + n as f64 * (sse / n as f64).ln();

    let jtj = model_jacobian(family, &theta, &series.times, mode).gram();
    let condition_number = jtj.condition_number();
    let inverse = jtj.inverse();
    let covariance_reliable = condition_number <= SINGULAR_CONDITION && inverse.is_some();
    let covariance = match inverse {
        Some(inv) => inv.scale(sigma2_hat).symmetrize(),
        None => Matrix::from_fn(k, k, |_, _| f64::NAN),
    };
    let report = FitReport {
        family,
        param_names: family.param_names().iter().map(|s| s.to_string()).collect(),
        theta_hat: theta,
        covariance,
        residuals,
        fitted,
        sse,
        sigma2_hat,
        aic,
        converged: true,
        n_iter,
        condition_number,
        covariance_reliable,
    };
    if covariance_reliable {
        Ok(report)
    } else {
        Err(Error::SingularJacobian { condition: condition_number, report: Box::new(report) })
    }
}

/// Accepts a fit whose covariance was flagged, keeping the report.
pub fn allow_singular(result: Result<FitReport>) -> Result<FitReport> {
    match result {
        Err(Error::SingularJacobian { report, .. }) => Ok(*report),
        other => other,
    }
}

/// Deterministic starting points per family, scaled to the series.
pub fn default_starts(family: Family, series: &TimeSeries) -> Vec<Vec<f64>> {
    let y = &series.values;
    let span = series.span();
    let ymax = y.iter().cloned().fold(f64::MIN, f64::max);
    let ymin = y.iter().cloned().fold(f64::MAX, f64::min);
    let scale = ymax.abs().max(ymin.abs()).max(1e-6);
    let floor = 1e-3 * scale;
    let first = y.first().copied().unwrap_or(0.0).max(floor);
    let last = y.last().copied().unwrap_or(0.0).max(floor);
    let range = (ymax - ymin).max(floor);
    let mut starts = Vec::new();
    match family {
        Family::TwoComp => {
            let (_, d1, d2) = smoothed_moments(series);
            if let Ok(cands) = identify_from_moments(first, d1, d2, last, None) {
                for c in cands {
                    starts.push(c.to_params().to_vec());
                }
            }
            starts.push(vec![first, 1.0, last, 0.1]);
            for a in [1.0, 4.0, 16.0] {
                for b in [0.5, 2.0] {
                    starts.push(vec![first, a / span, last, b / span]);
                }
            }
            // Early-rise shapes: small novelty, large capacity.
            starts.push(vec![floor.max(0.5 * first), 8.0 / span, last * 1.5, 1.0 / span]);
        }
        Family::Logistic => {
            for kf in [1.05, 1.5] {
                let k = kf * ymax.max(floor);
                let c = (k / first - 1.0).clamp(0.1, 1e3);
                for g in [1.0, 4.0, 16.0] {
                    starts.push(vec![k, c, g / span]);
                }
            }
        }
        Family::Bass => {
            for kf in [1.05, 1.5] {
                let k = kf * ymax.max(floor);
                for p in [0.2, 2.0] {
                    for q in [2.0, 10.0] {
                        starts.push(vec![k, p / span, q / span]);
                    }
                }
            }
        }
        Family::BiLogistic => {
            let k = 0.5 * ymax.max(floor);
            for (c1, g1, c2, g2) in [(2.0, 8.0, 2.0, 2.0), (20.0, 16.0, 20.0, 4.0), (2.0, 16.0, 50.0, 6.0), (50.0, 20.0, 200.0, 8.0)] {
                starts.push(vec![k, c1, g1 / span, k, c2, g2 / span]);
            }
            starts.push(vec![0.6 * ymax.max(floor), 10.0, 20.0 / span, 0.6 * ymax.max(floor), 100.0, 6.0 / span]);
        }
        Family::DoubleExp => {
            let k = 1.05 * ymax.max(floor);
            let b = ((k - y.first().copied().unwrap_or(0.0)) / 2.0).max(floor);
            for r1 in [4.0, 16.0] {
                for r2 in [0.5, 2.0] {
                    starts.push(vec![k, b, r1 / span, b, r2 / span]);
                }
            }
        }
        Family::LogisticBump => {
            let k = ymax.max(floor);
            let c = (k / first - 1.0).clamp(0.1, 1e3);
            for g in [4.0, 10.0] {
                for s in [-0.2, 0.2] {
                    for mu in [0.25, 0.5] {
                        starts.push(vec![k, c, g / span, s * range, mu * span, 0.1 * span]);
                    }
                }
            }
        }
    }
    starts
}

/// Fit of the two-component model under a custom map from free coordinates
/// to `(N0, alpha, U_max, beta)`.
#[derive(Debug, Clone)]
pub(crate) struct MappedFit {
    pub z: Vec<f64>,
    pub theta: [f64; 4],
    pub sse: f64,
    pub converged: bool,
}

pub(crate) fn fit_two_comp_mapped<M>(series: &TimeSeries, map: M, starts: &[Vec<f64>], opts: &FitOptions) -> Option<MappedFit>
where
    M: Fn(&[f64]) -> [f64; 4],
{
    let (times, values) = (&series.times, &series.values);
    let res = |z: &[f64]| {
        let p = map(z);
        residuals_for(Family::TwoComp, &p, times, values)
    };
    let lm_opts = LmOptions { max_iter: opts.max_iter, tol: opts.tol };
    let mut best: Option<LmOutcome> = None;
    for z0 in starts {
        let jac = |z: &[f64], _r: &[f64]| lm::numeric_jacobian(&res, z, times.len());
        let Some(out) = lm::minimize(&res, jac, z0.clone(), lm_opts) else { continue };
        let better = match &best {
            None => true,
            Some(b) => {
                let close = (out.sse - b.sse).abs() <= 1e-9 * b.sse.max(f64::MIN_POSITIVE);
                if close { out.converged && !b.converged } else { out.sse < b.sse }
            }
        };
        if better {
            best = Some(out);
        }
    }
    best.map(|b| MappedFit { theta: map(&b.x), z: b.x, sse: b.sse, converged: b.converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    fn generated(theta: ThetaTwoComp<f64>, n: usize, horizon: f64) -> TimeSeries {
        let times: Vec<f64> = (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect();
        let values = times.iter().map(|&t| theta.value(t)).collect();
        TimeSeries::new(times, values).unwrap()
    }

    #[test]
    fn embedded_fit_improves_on_reference_curve() {
        let series = data::synthetic21().series;
        let fit = fit_nls(&series, Family::TwoComp, None, &FitOptions::default()).unwrap();
        let reference = ThetaTwoComp::new(1.7, 0.65, 3.35, 0.22).unwrap();
        let sse: f64 = series.times.iter().zip(&series.values).map(|(&t, y)| (y - reference.value(t)).powi(2)).sum();
        assert!(fit.sse < sse);
        assert!((fit.sse - 0.5548).abs() < 1e-3, "{}", fit.sse);
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let truth = ThetaTwoComp::new(3.0, 0.8, 2.0, 0.25).unwrap();
        let series = generated(truth, 21, 20.0);
        let fit = fit_nls(&series, Family::TwoComp, None, &FitOptions::default()).unwrap();
        for (est, tru) in fit.theta_hat.iter().zip(truth.to_params()) {
            assert!((est - tru).abs() / tru < 1e-4, "{est} vs {tru}");
        }
        assert_eq!(fit.residuals.len(), 21);
        assert!(fit.covariance.is_symmetric(1e-10));
    }

    #[test]
    fn aic_matches_definition() {
        let series = data::synthetic21().series;
        let fit = fit_nls(&series, Family::Logistic, None, &FitOptions::default()).unwrap();
        let n = series.len() as f64;
        let mse = fit.residuals.iter().map(|r| r * r).sum::<f64>() / n;
        assert!((fit.aic - (6.0 + n * mse.ln())).abs() < 1e-12);
    }

    #[test]
    fn analytic_and_numeric_jacobians_agree() {
        let series = data::synthetic21().series;
        let a = fit_nls(&series, Family::TwoComp, None, &FitOptions::default()).unwrap();
        let opts = FitOptions { jacobian: JacobianMode::Numeric, ..FitOptions::default() };
        let b = fit_nls(&series, Family::TwoComp, None, &opts).unwrap();
        for (x, y) in a.theta_hat.iter().zip(&b.theta_hat) {
            assert!((x - y).abs() / x.abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn stationarity_at_optimum() {
        let series = data::synthetic21().series;
        let fit = fit_nls(&series, Family::TwoComp, None, &FitOptions::default()).unwrap();
        let jac = model_jacobian(Family::TwoComp, &fit.theta_hat, &series.times, JacobianMode::Auto);
        let g = jac.tmatvec(&fit.residuals);
        // Gradient in natural coordinates, scaled by parameter magnitude.
        let norm = g.iter().zip(&fit.theta_hat).map(|(gi, p)| (2.0 * gi * p).powi(2)).sum::<f64>().sqrt();
        assert!(norm < 1e-6 * (1.0 + fit.sse), "{norm}");
    }

    #[test]
    fn constant_series_is_never_a_silent_fit() {
        let series = TimeSeries::new((0..15).map(f64::from).collect(), vec![2.0; 15]).unwrap();
        let out = fit_nls(&series, Family::TwoComp, None, &FitOptions::default());
        assert!(
            matches!(out, Err(Error::SingularJacobian { .. }) | Err(Error::NonConvergence { .. })),
            "{out:?}"
        );
    }

    #[test]
    fn insufficient_data() {
        let series = TimeSeries::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 3.5]).unwrap();
        assert!(matches!(
            fit_nls(&series, Family::TwoComp, None, &FitOptions::default()),
            Err(Error::InsufficientData { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn logistic_aic_order_invariant_to_time_shift() {
        let base = data::synthetic21().series;
        let shifted = TimeSeries::new(base.times.iter().map(|t| t + 7.0).collect(), base.values.clone()).unwrap();
        let a = fit_nls(&base, Family::Logistic, None, &FitOptions::default()).unwrap();
        let b = fit_nls(&shifted, Family::Logistic, None, &FitOptions::default()).unwrap();
        assert!((a.aic - b.aic).abs() < 1e-6, "{} vs {}", a.aic, b.aic);
    }

    #[test]
    fn time_series_validation() {
        assert!(matches!(
            TimeSeries::new(vec![0.0, 2.0, 1.0], vec![1.0; 3]),
            Err(Error::NonMonotoneTime { row: 2 })
        ));
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let s = TimeSeries::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(s.clone().with_dow(vec![0]).is_err());
        assert!(s.with_dow(vec![0, 7]).is_err());
    }
}

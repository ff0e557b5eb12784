//! Delta-method, profile-likelihood and block-bootstrap uncertainty.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{Family, ThetaTwoComp};
use crate::error::{Error, Result};
use crate::rng::{stream_id, stream_rng, Purpose};
use crate::stats::{chi2_quantile, covariance, t_quantile, variance, z_two_sided};

use super::{allow_singular, fit_nls, fit_two_comp_mapped, FitOptions, FitReport, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TstarCi {
    pub t_star: f64,
    pub variance: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub level: f64,
}

/// Delta-method interval for `t*` using `grad(t*)^T Sigma grad(t*)`.
pub fn delta_ci_tstar(fit: &FitReport, level: f64) -> Result<TstarCi> {
    if fit.family != Family::TwoComp {
        return Err(Error::domain("delta CI for t* requires a two-component fit"));
    }
    check_level(level)?;
    let theta = ThetaTwoComp::from_params(&fit.theta_hat)?;
    let t_star = theta.critical_time().ok_or(Error::NoInteriorExtremum)?;
    let s = theta.tstar_sensitivities()?;
    // Sensitivities come as (alpha, beta, N0, U); covariance is in (N0, alpha, U, beta).
    let g = [s[2], s[0], s[3], s[1]];
    let sg = fit.covariance.matvec(&g);
    let variance = g.iter().zip(&sg).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    let se = variance.sqrt();
    let z = z_two_sided(level);
    Ok(TstarCi { t_star, variance, se, ci: (t_star - z * se, t_star + z * se), level })
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level must be in (0, 1), got {level}")));
    }
    Ok(())
}

/// Profile-likelihood interval for `t*`.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileCi {
    pub t_star_hat: f64,
    pub ci: (f64, f64),
    pub level: f64,
    /// `(t*, 2 (l_max - l(t*)))` for every grid point evaluated.
    pub grid: Vec<(f64, f64)>,
    /// Grid points whose constrained refit did not converge.
    pub skipped: Vec<f64>,
    /// Whether each end of the interval was bracketed by the grid.
    pub closed: (bool, bool),
}

/// Inverts the profile likelihood in `t*` by refitting with `t*` held fixed.
///
/// With `t*` fixed, `U_max = alpha N0 / beta * exp(-(alpha - beta) t*)`, leaving
/// `(N0, alpha, beta)` free on the log scale.
pub fn profile_ci_tstar(series: &TimeSeries, level: f64) -> Result<ProfileCi> {
    check_level(level)?;
    let opts = FitOptions::default();
    let fit = allow_singular(fit_nls(series, Family::TwoComp, None, &opts))?;
    let theta = ThetaTwoComp::from_params(&fit.theta_hat)?;
    let t_hat = theta.critical_time().ok_or(Error::NoInteriorExtremum)?;
    let n = series.len() as f64;
    let sse_min = fit.sse.max(1e-300);
    let crit = chi2_quantile(level, 1.0);
    let step = delta_ci_tstar(&fit, level)
        .ok()
        .map(|d| d.se / 8.0)
        .filter(|s| s.is_finite() && *s > 0.0)
        .unwrap_or(0.02 * t_hat)
        .clamp(1e-4 * t_hat, 0.25 * t_hat);

    let map_for = |ts: f64| {
        move |z: &[f64]| {
            let (n0, a, b) = (z[0].exp(), z[1].exp(), z[2].exp());
            let u = a * n0 / b * (-(a - b) * ts).exp();
            [n0, a, u, b]
        }
    };

    let mut grid = vec![(t_hat, 0.0)];
    let mut skipped = Vec::new();
    let mut bounds = [t_hat, t_hat];
    let mut closed = [false, false];
    for (side, dir) in [(0usize, -1.0f64), (1, 1.0)] {
        let mut prev_z = vec![theta.n0.ln(), theta.alpha.ln(), theta.beta.ln()];
        let mut prev = (t_hat, 0.0);
        for i in 1..=400 {
            let ts = t_hat + dir * step * i as f64;
            if ts <= 0.0 {
                bounds[side] = 0.0;
                break;
            }
            let starts = [prev_z.clone(), vec![theta.n0.ln(), theta.alpha.ln(), theta.beta.ln()]];
            let Some(mf) = fit_two_comp_mapped(series, map_for(ts), &starts, &opts) else {
                skipped.push(ts);
                continue;
            };
            if !mf.converged {
                skipped.push(ts);
                continue;
            }
            let stat = (n * (mf.sse.max(1e-300) / sse_min).ln()).max(0.0);
            grid.push((ts, stat));
            prev_z = mf.z;
            if stat > crit {
                let frac = (crit - prev.1) / (stat - prev.1);
                bounds[side] = prev.0 + frac * (ts - prev.0);
                closed[side] = true;
                break;
            }
            prev = (ts, stat);
            bounds[side] = ts;
        }
    }
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite grid"));
    Ok(ProfileCi {
        t_star_hat: t_hat,
        ci: (bounds[0], bounds[1]),
        level,
        grid,
        skipped,
        closed: (closed[0], closed[1]),
    })
}

/// Preregistered window rule around an intervention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub intervention_time: f64,
    /// Smallest admissible window length `W` in days.
    pub window_length_days: u32,
    pub min_obs_per_side: usize,
    pub max_weekends: usize,
}

impl WindowSpec {
    pub fn new(intervention_time: f64) -> Self {
        Self { intervention_time, window_length_days: 10, min_obs_per_side: 6, max_weekends: 1 }
    }

    fn validate(&self) -> Result<()> {
        if self.window_length_days < 10 {
            return Err(Error::domain("window length must be at least 10 days"));
        }
        if self.min_obs_per_side < 1 {
            return Err(Error::domain("min_obs_per_side must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowChoice {
    pub window: u32,
    pub pre: Vec<usize>,
    pub post: Vec<usize>,
    /// False when day-of-week labels were missing and the weekend rule was skipped.
    pub weekend_rule_applied: bool,
}

/// Counts weekends: a Saturday label (5) directly followed by a Sunday label (6).
fn count_weekends(dow: &[u8], idx: &[usize]) -> usize {
    idx.windows(2).filter(|w| dow[w[0]] == 5 && dow[w[1]] == 6).count()
}

/// Smallest `W >= window_length_days` leaving at least `min_obs_per_side`
/// points in `[T - W, T)` and in `[T, T + W)`, each with at most
/// `max_weekends` weekends.
pub fn select_window(series: &TimeSeries, spec: &WindowSpec) -> Result<WindowChoice> {
    spec.validate()?;
    let t0 = spec.intervention_time;
    let span = series.times.last().copied().unwrap_or(t0) - series.times.first().copied().unwrap_or(t0);
    let max_w = (span.ceil() as u32 + 1).max(spec.window_length_days);
    for w in spec.window_length_days..=max_w {
        let wf = w as f64;
        let pre: Vec<usize> = (0..series.len()).filter(|&i| series.times[i] >= t0 - wf && series.times[i] < t0).collect();
        let post: Vec<usize> = (0..series.len()).filter(|&i| series.times[i] >= t0 && series.times[i] < t0 + wf).collect();
        if pre.len() < spec.min_obs_per_side || post.len() < spec.min_obs_per_side {
            continue;
        }
        if let Some(dow) = &series.dow {
            if count_weekends(dow, &pre) > spec.max_weekends || count_weekends(dow, &post) > spec.max_weekends {
                // Longer windows only add weekends.
                return Err(Error::WindowInfeasible(format!(
                    "W={w} is the first length with enough observations but includes more than {} weekend(s)",
                    spec.max_weekends
                )));
            }
        }
        return Ok(WindowChoice { window: w, pre, post, weekend_rule_applied: series.dow.is_some() });
    }
    Err(Error::WindowInfeasible(format!(
        "fewer than {} observations on one side of t={t0} for every W",
        spec.min_obs_per_side
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub resamples: usize,
    /// Moving-block length; `None` picks `ceil(n^(1/3))`.
    pub block_len: Option<usize>,
    pub seed: u64,
    pub level: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { resamples: 1000, block_len: None, seed: 20240917, level: 0.95 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrePostEstimate {
    pub beta_pre: f64,
    pub beta_post: f64,
    pub delta_beta: f64,
    pub var_pre: f64,
    pub var_post: f64,
    pub cov_pre_post: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub window_used: WindowChoice,
    pub block_len: usize,
    pub resamples_used: usize,
    pub resamples_failed: usize,
}

fn fit_window(series: &TimeSeries, idx: &[usize], init: Option<&[f64]>) -> Result<(FitReport, TimeSeries)> {
    let origin = series.times[idx[0]];
    let local = series.subset(idx, origin);
    let fit = allow_singular(fit_nls(&local, Family::TwoComp, init, &FitOptions::default()))?;
    Ok((fit, local))
}

/// Growth-rate change across an intervention.
///
/// Each window is fitted on local time (first point at `t = 0`). The variance
/// of `beta_post - beta_pre` uses `Var(post) + Var(pre) - 2 Cov`, all three
/// estimated by a moving-block bootstrap of the jointly ordered residuals.
pub fn prepost_delta_beta(series: &TimeSeries, spec: &WindowSpec, boot: &BootstrapOptions) -> Result<PrePostEstimate> {
    check_level(boot.level)?;
    let choice = select_window(series, spec)?;
    let (fit_pre, local_pre) = fit_window(series, &choice.pre, None)?;
    let (fit_post, local_post) = fit_window(series, &choice.post, None)?;
    let beta_pre = fit_pre.theta_hat[3];
    let beta_post = fit_post.theta_hat[3];

    // Residuals rescaled for the degrees of freedom used by each fit.
    let inflate = |f: &FitReport| (f.n() as f64 / (f.n() - f.k()).max(1) as f64).sqrt();
    let (s_pre, s_post) = (inflate(&fit_pre), inflate(&fit_post));
    let resid: Vec<f64> = fit_pre
        .residuals
        .iter()
        .map(|r| r * s_pre)
        .chain(fit_post.residuals.iter().map(|r| r * s_post))
        .collect();
    let n = resid.len();
    let n_pre = fit_pre.n();
    let block = boot.block_len.unwrap_or_else(|| (n as f64).cbrt().ceil() as usize).clamp(1, n);
    let stream = stream_id(0, Purpose::Bootstrap);

    let draws: Vec<Option<(f64, f64)>> = (0..boot.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(boot.seed, stream, b as u64);
            let mut e = Vec::with_capacity(n + block);
            while e.len() < n {
                let start = rng.random_range(0..=n - block);
                e.extend_from_slice(&resid[start..start + block]);
            }
            let pre_vals: Vec<f64> = fit_pre.fitted.iter().zip(&e[..n_pre]).map(|(f, r)| f + r).collect();
            let post_vals: Vec<f64> = fit_post.fitted.iter().zip(&e[n_pre..n]).map(|(f, r)| f + r).collect();
            let refit = |local: &TimeSeries, vals: Vec<f64>, init: &[f64]| {
                let s = TimeSeries { values: vals, ..local.clone() };
                allow_singular(fit_nls(&s, Family::TwoComp, Some(init), &FitOptions::default()))
                    .ok()
                    .map(|f| f.theta_hat[3])
            };
            let bp = refit(&local_pre, pre_vals, &fit_pre.theta_hat)?;
            let bq = refit(&local_post, post_vals, &fit_post.theta_hat)?;
            Some((bp, bq))
        })
        .collect();
    let ok: Vec<(f64, f64)> = draws.iter().flatten().copied().collect();
    if ok.len() < 10 {
        return Err(Error::NonConvergence { iterations: boot.resamples });
    }
    let pre_b: Vec<f64> = ok.iter().map(|p| p.0).collect();
    let post_b: Vec<f64> = ok.iter().map(|p| p.1).collect();
    let var_pre = variance(&pre_b);
    let var_post = variance(&post_b);
    let cov_pre_post = covariance(&pre_b, &post_b);
    let var = (var_post + var_pre - 2.0 * cov_pre_post).max(0.0);
    let se = var.sqrt();
    let delta_beta = beta_post - beta_pre;
    // Student quantile on the residual degrees of freedom of the two fits.
    let df = (n - fit_pre.k() - fit_post.k()).max(1) as f64;
    let z = t_quantile(0.5 + boot.level / 2.0, df);
    Ok(PrePostEstimate {
        beta_pre,
        beta_post,
        delta_beta,
        var_pre,
        var_post,
        cov_pre_post,
        se,
        ci: (delta_beta - z * se, delta_beta + z * se),
        window_used: choice,
        block_len: block,
        resamples_used: ok.len(),
        resamples_failed: boot.resamples - ok.len(),
    })
}

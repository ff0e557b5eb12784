//! Synthetic series, the reliability pilot and the coverage/power benchmark.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{Family, ThetaTwoComp};
use crate::error::{Error, Result};
use crate::estimate::{allow_singular, delta_ci_tstar, fit_nls, FitOptions, TimeSeries, ValueKind};
use crate::fisher::{info_matrix, ErrorModel};
use crate::infer::{constrained_lr_from, shape_test};
use crate::rng::{stream_id, stream_rng, Purpose};
use crate::stats::{norm_quantile, variance};

/// Equispaced design on `[0, horizon]`.
pub fn design(n_points: usize, horizon: f64) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Simulates one series on an equispaced grid.
pub fn gen_series(theta: &ThetaTwoComp<f64>, em: &ErrorModel<f64>, n_points: usize, horizon: f64, seed: u64) -> Result<TimeSeries> {
    if !(horizon > 0.0) {
        return Err(Error::domain("horizon must be positive"));
    }
    if n_points < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n_points });
    }
    gen_series_at(theta, em, &design(n_points, horizon), seed, stream_id(0, Purpose::Simulate), 0)
}

/// Simulates at given times from replicate `index` of stream `stream`.
pub fn gen_series_at(
    theta: &ThetaTwoComp<f64>,
    em: &ErrorModel<f64>,
    times: &[f64],
    seed: u64,
    stream: u64,
    index: u64,
) -> Result<TimeSeries> {
    theta.validate()?;
    // A zero noise level is allowed here and yields the noiseless curve.
    match em {
        ErrorModel::GaussianIid { sigma } | ErrorModel::GaussianAr1 { sigma, .. } if *sigma == 0.0 => {
            let rho = match em {
                ErrorModel::GaussianAr1 { rho, .. } => *rho,
                _ => 0.0,
            };
            ErrorModel::GaussianAr1 { sigma: 1.0, rho }.validate(times.len())?
        }
        _ => em.validate(times.len())?,
    }
    let mut rng = stream_rng(seed, stream, index);
    let mean: Vec<f64> = times.iter().map(|&t| theta.eval(t)).collect::<Result<_>>()?;
    let (values, kind) = draw(&mean, em, &mut rng)?;
    Ok(TimeSeries::new(times.to_vec(), values)?.with_kind(kind))
}

fn draw(mean: &[f64], em: &ErrorModel<f64>, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, ValueKind)> {
    let mut z = || -> f64 { rng.sample(StandardNormal) };
    match em {
        ErrorModel::GaussianIid { sigma } => Ok((mean.iter().map(|m| m + sigma * z()).collect(), ValueKind::Level)),
        ErrorModel::GaussianAr1 { sigma, rho } => {
            // Stationary start: every e_i has variance sigma^2.
            let innov = sigma * (1.0 - rho * rho).sqrt();
            let mut e = sigma * z();
            let mut out = Vec::with_capacity(mean.len());
            for (i, m) in mean.iter().enumerate() {
                if i > 0 {
                    e = rho * e + innov * z();
                }
                out.push(m + e);
            }
            Ok((out, ValueKind::Level))
        }
        ErrorModel::Poisson { kappa } => {
            let mut out = Vec::with_capacity(mean.len());
            for (i, m) in mean.iter().enumerate() {
                let lam = kappa * m;
                if !(lam > 0.0) {
                    return Err(Error::PoissonBoundary { index: i });
                }
                let d = Poisson::new(lam).map_err(|e| Error::domain(e.to_string()))?;
                out.push(d.sample(rng));
            }
            Ok((out, ValueKind::Counts))
        }
        ErrorModel::Binomial { m, trials } => {
            let mut out = Vec::with_capacity(mean.len());
            for (i, a) in mean.iter().enumerate() {
                let p = a / m;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::BinomialBoundary { index: i });
                }
                let d = Binomial::new(u64::from(trials[i]), p).map_err(|e| Error::domain(e.to_string()))?;
                out.push(d.sample(rng) as f64);
            }
            Ok((out, ValueKind::Successes))
        }
    }
}

/// Rescales counts (`y / kappa`) and successes (`M y / n_i`) to the level of `A(t)`.
pub fn to_level_scale(series: &TimeSeries, em: &ErrorModel<f64>) -> TimeSeries {
    let values = match em {
        ErrorModel::Poisson { kappa } => series.values.iter().map(|y| y / kappa).collect(),
        ErrorModel::Binomial { m, trials } => {
            series.values.iter().zip(trials).map(|(y, &n)| m * y / f64::from(n)).collect()
        }
        _ => series.values.clone(),
    };
    TimeSeries { values, kind: ValueKind::Level, ..series.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotConfig {
    pub seed: u64,
    pub n_tasks: usize,
    pub beta_chat: (f64, f64),
    pub beta_agent: (f64, f64),
    pub c_time: f64,
    pub c_fric: f64,
    pub delta_tau: f64,
    pub delta_phi: f64,
    pub cf_low: f64,
    pub cf_high: f64,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_tasks: 200,
            beta_chat: (6.0, 4.0),
            beta_agent: (8.0, 2.0),
            c_time: 1.0,
            c_fric: 1.0,
            delta_tau: 0.3,
            delta_phi: 0.1,
            cf_low: 0.5,
            cf_high: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PilotResult {
    pub r_chat: f64,
    pub r_agent: f64,
    pub r_star: f64,
    pub mean_cf: f64,
}

/// Draws, in order: failure costs, chat and agent success probabilities,
/// then the Bernoulli outcomes of each.
pub fn pilot_sim(cfg: &PilotConfig) -> Result<PilotResult> {
    if cfg.n_tasks == 0 {
        return Err(Error::domain("n_tasks must be at least 1"));
    }
    if !(cfg.cf_high > cfg.cf_low) {
        return Err(Error::domain("cf bounds must satisfy low < high"));
    }
    let beta = |(a, b): (f64, f64)| Beta::new(a, b).map_err(|e| Error::domain(format!("Beta shape: {e}")));
    let (chat_law, agent_law) = (beta(cfg.beta_chat)?, beta(cfg.beta_agent)?);
    let n = cfg.n_tasks;
    let mut rng = stream_rng(cfg.seed, stream_id(0, Purpose::Pilot), 0);
    let cf: Vec<f64> = (0..n).map(|_| rng.random_range(cfg.cf_low..cfg.cf_high)).collect();
    let p_chat: Vec<f64> = (0..n).map(|_| chat_law.sample(&mut rng)).collect();
    let p_agent: Vec<f64> = (0..n).map(|_| agent_law.sample(&mut rng)).collect();
    let chat = p_chat.iter().filter(|&&p| rng.random::<f64>() < p).count();
    let agent = p_agent.iter().filter(|&&p| rng.random::<f64>() < p).count();
    let r_chat = chat as f64 / n as f64;
    let r_agent = agent as f64 / n as f64;
    let mean_cf = cf.iter().sum::<f64>() / n as f64;
    let r_star = r_chat + (cfg.c_time * cfg.delta_tau + cfg.c_fric * cfg.delta_phi) / mean_cf;
    Ok(PilotResult { r_chat, r_agent, r_star, mean_cf })
}

/// Relative trough depth `(N0 - A(t*)) / U_max`; zero without a trough.
pub fn trough_depth(theta: &ThetaTwoComp<f64>) -> f64 {
    match theta.critical_time() {
        Some(ts) if theta.alpha > theta.beta => (theta.n0 - theta.value(ts)) / theta.umax,
        _ => 0.0,
    }
}

/// `N0` giving the requested depth at fixed `(alpha, beta, U_max)` with
/// `alpha > beta`. Depth zero is the monotone boundary `N0 = beta U / alpha`.
pub fn n0_for_depth(alpha: f64, beta: f64, umax: f64, depth: f64) -> Result<f64> {
    if !(alpha > beta && beta > 0.0 && umax > 0.0) {
        return Err(Error::domain("depth parameterization needs alpha > beta > 0 and U_max > 0"));
    }
    if !(0.0..1.0).contains(&depth) {
        return Err(Error::domain("depth must lie in [0, 1)"));
    }
    let boundary = beta * umax / alpha;
    if depth == 0.0 {
        return Ok(boundary);
    }
    let depth_at = |n0: f64| trough_depth(&ThetaTwoComp { n0, alpha, umax, beta });
    let (mut lo, mut hi) = (boundary, 2.0 * boundary.max(umax));
    while depth_at(hi) < depth {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::domain("depth is not reachable"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if depth_at(mid) < depth {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioGrid {
    pub alpha: f64,
    pub beta: f64,
    pub umax: f64,
    pub depths: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub n_points: Vec<usize>,
    pub horizon: f64,
    pub replicates: usize,
    pub seed: u64,
    pub level: f64,
    pub shape_boot: usize,
}

impl Default for ScenarioGrid {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            beta: 0.25,
            umax: 2.0,
            depths: vec![0.0, 0.1, 0.2, 0.3],
            sigmas: vec![0.02, 0.05, 0.1],
            rhos: vec![0.0, 0.3, 0.6],
            n_points: vec![21, 41],
            horizon: 20.0,
            replicates: 500,
            seed: 20240917,
            level: 0.95,
            shape_boot: 199,
        }
    }
}

impl ScenarioGrid {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::domain("replicates must be at least 1"));
        }
        if self.n_points.iter().any(|&n| n < 5) {
            return Err(Error::domain("n_points must be at least 5"));
        }
        if self.depths.is_empty() || self.sigmas.is_empty() || self.rhos.is_empty() || self.n_points.is_empty() {
            return Err(Error::domain("every grid axis needs at least one value"));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::domain("horizon must be positive"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::domain("level must lie in (0, 1)"));
        }
        for &s in &self.sigmas {
            for &r in &self.rhos {
                ErrorModel::GaussianAr1 { sigma: s, rho: r }.validate(0)?;
            }
        }
        for &d in &self.depths {
            n0_for_depth(self.alpha, self.beta, self.umax, d)?;
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment and lists are
    /// comma-separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grid = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = lineno + 1;
            let err = |m: String| Error::Parse { row, column: String::new(), message: m };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |m: String| Error::Parse { row, column: key.to_string(), message: m };
            let f = |v: &str| v.trim().parse::<f64>().map_err(|_| err(format!("'{}' is not a number", v.trim())));
            let u = |v: &str| v.trim().parse::<usize>().map_err(|_| err(format!("'{}' is not a count", v.trim())));
            let list_f = |v: &str| v.split(',').map(f).collect::<Result<Vec<_>>>();
            match key {
                "alpha" => grid.alpha = f(value)?,
                "beta" => grid.beta = f(value)?,
                "umax" => grid.umax = f(value)?,
                "depths" => grid.depths = list_f(value)?,
                "sigmas" => grid.sigmas = list_f(value)?,
                "rhos" => grid.rhos = list_f(value)?,
                "n_points" => grid.n_points = value.split(',').map(u).collect::<Result<Vec<_>>>()?,
                "horizon" => grid.horizon = f(value)?,
                "replicates" => grid.replicates = u(value)?,
                "seed" => grid.seed = value.parse().map_err(|_| err(format!("'{value}' is not a seed")))?,
                "level" => grid.level = f(value)?,
                "shape_boot" => grid.shape_boot = u(value)?,
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &depth in &self.depths {
            for &sigma in &self.sigmas {
                for &rho in &self.rhos {
                    for &n in &self.n_points {
                        let n0 = n0_for_depth(self.alpha, self.beta, self.umax, depth).expect("validated grid");
                        let theta = ThetaTwoComp { n0, alpha: self.alpha, umax: self.umax, beta: self.beta };
                        out.push(Scenario { index: out.len(), depth, sigma, rho, n_points: n, theta });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub index: usize,
    pub depth: f64,
    pub sigma: f64,
    pub rho: f64,
    pub n_points: usize,
    pub theta: ThetaTwoComp<f64>,
}

impl Scenario {
    pub fn is_trough(&self) -> bool {
        self.depth > 0.0
    }

    /// Near `U_max = N0` the rates are weakly identified.
    pub fn near_degenerate(&self) -> bool {
        (self.theta.umax - self.theta.n0).abs() / self.theta.umax < 0.05
    }

    pub fn error_model(&self) -> ErrorModel<f64> {
        if self.rho == 0.0 {
            ErrorModel::GaussianIid { sigma: self.sigma }
        } else {
            ErrorModel::GaussianAr1 { sigma: self.sigma, rho: self.rho }
        }
    }
}

/// A binomial proportion with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    pub ci: (f64, f64),
}

impl Rate {
    pub fn new(successes: usize, trials: usize) -> Self {
        if trials == 0 {
            return Self { successes, trials, estimate: f64::NAN, ci: (0.0, 1.0) };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z = norm_quantile(0.975);
        let denom = 1.0 + z * z / n;
        let centre = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Self { successes, trials, estimate: p, ci: ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub t_star: Option<f64>,
    pub replicates: usize,
    pub failures: usize,
    /// More than 20% of replicates failed to fit.
    pub degraded: bool,
    pub near_degenerate: bool,
    /// Share of delta-method intervals covering the true `t*` (trough truth only).
    pub coverage_tstar: Option<Rate>,
    pub reject_lr: Rate,
    pub reject_shape: Rate,
    /// Rejection rate of the constrained LR under monotone truth.
    pub type1: Option<Rate>,
    /// Rejection rate of the constrained LR under trough truth.
    pub power: Option<Rate>,
    /// Empirical `Var(beta_hat)` over the profiled CRLB.
    pub mean_crlb_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub header: BTreeMap<String, String>,
    pub grid: ScenarioGrid,
    pub scenarios: Vec<ScenarioResult>,
    /// Coverage pooled over iid trough scenarios with depth >= 0.2, excluding near-degenerate ones.
    pub headline_coverage: Option<Rate>,
    pub pooled_type1: Option<Rate>,
    pub pooled_power: Option<Rate>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Replicate {
    ok: bool,
    covered: Option<bool>,
    reject_lr: bool,
    reject_shape: bool,
    beta_hat: f64,
}

fn run_replicate(grid: &ScenarioGrid, sc: &Scenario, em: &ErrorModel<f64>, times: &[f64], rep: usize) -> Replicate {
    let stream = stream_id(sc.index as u64, Purpose::Series);
    let Ok(series) = gen_series_at(&sc.theta, em, times, grid.seed, stream, rep as u64) else {
        return Replicate::default();
    };
    let shape_seed = stream_rng(grid.seed, stream_id(sc.index as u64, Purpose::ShapeTest), rep as u64).next_u64();
    let opts = FitOptions::default();
    let Ok(fit) = allow_singular(fit_nls(&series, Family::TwoComp, None, &opts)) else {
        return Replicate::default();
    };
    let covered = sc.is_trough().then(|| {
        let truth = sc.theta.critical_time().expect("trough scenario");
        match delta_ci_tstar(&fit, grid.level) {
            Ok(ci) if ci.se.is_finite() => ci.ci.0 <= truth && truth <= ci.ci.1,
            _ => false,
        }
    });
    let reject_lr = constrained_lr_from(&series, &fit).map(|r| r.test.decision_at_05).unwrap_or(false);
    let reject_shape = shape_test(&series, grid.shape_boot.max(1), shape_seed).map(|r| r.decision_at_05).unwrap_or(false);
    Replicate { ok: true, covered, reject_lr, reject_shape, beta_hat: fit.theta_hat[3] }
}

fn run_scenario(grid: &ScenarioGrid, sc: &Scenario) -> ScenarioResult {
    let em = sc.error_model();
    let times = design(sc.n_points, grid.horizon);
    let reps: Vec<Replicate> =
        (0..grid.replicates).into_par_iter().map(|r| run_replicate(grid, sc, &em, &times, r)).collect();
    let ok: Vec<&Replicate> = reps.iter().filter(|r| r.ok).collect();
    let failures = reps.len() - ok.len();
    let count = |f: &dyn Fn(&Replicate) -> bool| ok.iter().filter(|r| f(r)).count();
    let reject_lr = Rate::new(count(&|r| r.reject_lr), ok.len());
    let reject_shape = Rate::new(count(&|r| r.reject_shape), ok.len());
    let coverage_tstar = sc.is_trough().then(|| Rate::new(count(&|r| r.covered == Some(true)), ok.len()));
    let betas: Vec<f64> = ok.iter().map(|r| r.beta_hat).collect();
    let mean_crlb_ratio = match info_matrix(&sc.theta, &times, &em) {
        Ok(info) if betas.len() >= 2 => variance(&betas) / info.crlb_beta,
        _ => f64::NAN,
    };
    ScenarioResult {
        scenario: *sc,
        t_star: sc.theta.critical_time().filter(|_| sc.is_trough()),
        replicates: reps.len(),
        failures,
        degraded: failures as f64 > 0.2 * reps.len() as f64,
        near_degenerate: sc.near_degenerate(),
        coverage_tstar,
        type1: (!sc.is_trough()).then_some(reject_lr),
        power: sc.is_trough().then_some(reject_lr),
        reject_lr,
        reject_shape,
        mean_crlb_ratio,
    }
}

fn pool<'a>(rates: impl Iterator<Item = &'a Rate>) -> Option<Rate> {
    let (s, n) = rates.fold((0, 0), |(s, n), r| (s + r.successes, n + r.trials));
    (n > 0).then(|| Rate::new(s, n))
}

/// Runs every scenario of the grid. Results depend only on the grid
/// (including its seed), not on the number of worker threads.
pub fn run_benchmark(grid: &ScenarioGrid) -> Result<BenchmarkReport> {
    grid.validate()?;
    let scenarios: Vec<ScenarioResult> = grid.scenarios().iter().map(|sc| run_scenario(grid, sc)).collect();
    let headline_coverage = pool(
        scenarios
            .iter()
            .filter(|r| r.scenario.rho == 0.0 && r.scenario.depth >= 0.2 && !r.near_degenerate)
            .filter_map(|r| r.coverage_tstar.as_ref()),
    );
    let pooled_type1 = pool(scenarios.iter().filter_map(|r| r.type1.as_ref()));
    let pooled_power = pool(scenarios.iter().filter_map(|r| r.power.as_ref()));
    let mut header = BTreeMap::new();
    header.insert("nominal_level".into(), format!("{}", grid.level));
    header.insert("test_level".into(), "0.05".into());
    header.insert(
        "conventions".into(),
        "trough depth = (N0 - A(t*)) / U_max varied through N0; grid ranges and nominal levels are conventions of this benchmark".into(),
    );
    header.insert("sigma".into(), "marginal standard deviation of the errors".into());
    Ok(BenchmarkReport { header, grid: grid.clone(), scenarios, headline_coverage, pooled_type1, pooled_power })
}

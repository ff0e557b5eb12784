//! Task-level utility, hazard links, friction and the agency threshold.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, LogNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::stats::{norm_cdf, norm_pdf, norm_quantile, ols, z_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub v: f64,
    pub c_f: f64,
    pub tau: f64,
    pub phi: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEconomy {
    pub tasks: Vec<Task>,
    pub c_time: f64,
    pub c_fric: f64,
}

impl TaskEconomy {
    pub fn new(tasks: Vec<Task>, c_time: f64, c_fric: f64) -> Result<Self> {
        let e = Self { tasks, c_time, c_fric };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.c_time) && ok(self.c_fric)) {
            return Err(Error::domain("cost weights must be finite and nonnegative"));
        }
        if self.tasks.iter().any(|t| ![t.v, t.c_f, t.tau, t.phi, t.w].into_iter().all(ok)) {
            return Err(Error::domain("task fields must be finite and nonnegative"));
        }
        let sw: f64 = self.tasks.iter().map(|t| t.w).sum();
        if (sw - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("task weights sum to {sw}, not 1")));
        }
        Ok(())
    }

    /// Reads tasks from a CSV with columns `v, c_f, tau, phi, w`.
    pub fn from_csv(path: impl AsRef<Path>, c_time: f64, c_fric: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| Error::Parse {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?;
        let mut tasks = Vec::new();
        for (k, rec) in rdr.deserialize::<Task>().enumerate() {
            let task = rec.map_err(|e| Error::Parse { row: k + 2, column: String::new(), message: e.to_string() })?;
            tasks.push(task);
        }
        Self::new(tasks, c_time, c_fric)
    }

    /// Expected failure cost `sum w C_f`.
    pub fn mean_failure_cost(&self) -> f64 {
        self.tasks.iter().map(|t| t.w * t.c_f).sum()
    }
}

/// `R v - (1 - R) C_f - c_time tau - c_fric phi`.
pub fn task_utility(task: &Task, r: f64, c_time: f64, c_fric: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("reliability {r} outside [0, 1]")));
    }
    Ok(r * task.v - (1.0 - r) * task.c_f - c_time * task.tau - c_fric * task.phi)
}

/// `dU/dR = E[v + C_f] - c_time dtau/dR`.
pub fn utility_reliability_gradient(econ: &TaskEconomy, dtau_dr: f64) -> f64 {
    econ.tasks.iter().map(|t| t.w * (t.v + t.c_f)).sum::<f64>() - econ.c_time * dtau_dr
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HazardSpec {
    Linear { lambda: f64 },
    Logit { lambda: f64, a: f64, b: f64 },
    Probit { lambda: f64, a: f64, b: f64 },
    Exponential { lambda: f64, b: f64 },
}

impl HazardSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let ok = match *self {
            HazardSpec::Linear { lambda } => pos(lambda),
            HazardSpec::Logit { lambda, a, b } | HazardSpec::Probit { lambda, a, b } => pos(lambda) && pos(b) && a.is_finite(),
            HazardSpec::Exponential { lambda, b } => pos(lambda) && pos(b),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("hazard rate and slope parameters must be positive"))
        }
    }

    /// `h(dV)`. Logit and probit with `a != 0` have `h(0) != 0`.
    pub fn h(&self, dv: f64) -> f64 {
        match *self {
            HazardSpec::Linear { lambda } => lambda * dv,
            HazardSpec::Logit { lambda, a, b } => lambda * (1.0 / (1.0 + (-(a + b * dv)).exp()) - 0.5),
            HazardSpec::Probit { lambda, a, b } => lambda * (norm_cdf(a + b * dv) - 0.5),
            HazardSpec::Exponential { lambda, b } => lambda * ((b * dv).exp() - 1.0),
        }
    }

    pub fn h0(&self) -> f64 {
        self.h(0.0)
    }

    /// Slope at zero: `lambda`, `lambda b s(a)(1 - s(a))` (`lambda b / 4` at
    /// `a = 0`), `lambda b phi(a)`, `lambda b`.
    pub fn hprime0(&self) -> f64 {
        match *self {
            HazardSpec::Linear { lambda } => lambda,
            HazardSpec::Logit { lambda, a, b } => {
                let s = 1.0 / (1.0 + (-a).exp());
                lambda * b * s * (1.0 - s)
            }
            HazardSpec::Probit { lambda, a, b } => lambda * b * norm_pdf(a),
            HazardSpec::Exponential { lambda, b } => lambda * b,
        }
    }
}

pub fn hazard_hprime0(spec: &HazardSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.hprime0())
}

/// Small-signal growth rate `beta = h'(0) dV / tau`.
pub fn beta_from_hazard(spec: &HazardSpec, tau_review: f64, delta_v: f64) -> Result<f64> {
    spec.validate()?;
    if !(tau_review > 0.0) {
        return Err(Error::domain("review time must be positive"));
    }
    Ok(spec.hprime0() / tau_review * delta_v)
}

/// `dbeta/dE = h'(0) / tau * c_fric * phi_dest`.
pub fn dbeta_de(spec: &HazardSpec, tau_review: f64, c_fric: f64, phi_dest: f64) -> Result<f64> {
    spec.validate()?;
    if !(tau_review > 0.0) {
        return Err(Error::domain("review time must be positive"));
    }
    Ok(spec.hprime0() / tau_review * c_fric * phi_dest)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrictionExpectation {
    pub value: f64,
    /// `d E[phi | E] / dE = -phi_dest`.
    pub derivative: f64,
}

/// `E[phi | E] = (1 - E) phi_dest`.
pub fn friction_expectation(e: f64, phi_dest: f64) -> Result<FrictionExpectation> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::domain("embedding factor must lie in [0, 1]"));
    }
    if !(phi_dest >= 0.0) {
        return Err(Error::domain("destination friction must be nonnegative"));
    }
    Ok(FrictionExpectation { value: (1.0 - e) * phi_dest, derivative: -phi_dest })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub switches: f64,
    pub interrupts: f64,
    pub measured_phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrictionCalibration {
    pub kappa_s: f64,
    pub kappa_i: f64,
    /// HC1 standard errors.
    pub se_s: f64,
    pub se_i: f64,
}

/// No-intercept OLS of `phi` on `(switches, interrupts)`.
pub fn friction_calibration(episodes: &[Episode]) -> Result<FrictionCalibration> {
    if episodes.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: episodes.len() });
    }
    let x = Matrix::from_fn(episodes.len(), 2, |i, j| if j == 0 { episodes[i].switches } else { episodes[i].interrupts });
    let y: Vec<f64> = episodes.iter().map(|e| e.measured_phi).collect();
    let fit = ols(&x, &y)?;
    Ok(FrictionCalibration {
        kappa_s: fit.coef[0],
        kappa_i: fit.coef[1],
        se_s: fit.cov_hc1[(0, 0)].max(0.0).sqrt(),
        se_i: fit.cov_hc1[(1, 1)].max(0.0).sqrt(),
    })
}

/// Inputs of the agency threshold `R* = R_chat + K / mu_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInputs {
    pub r_chat: f64,
    pub delta_tau: f64,
    pub delta_phi: f64,
    pub c_time: f64,
    pub c_fric: f64,
    pub mu_c: f64,
}

impl ThresholdInputs {
    /// `K = c_time dtau + c_fric dphi`.
    pub fn k(&self) -> f64 {
        self.c_time * self.delta_tau + self.c_fric * self.delta_phi
    }
}

pub fn agency_threshold(inp: &ThresholdInputs) -> Result<f64> {
    if !(inp.mu_c > 0.0) {
        return Err(Error::domain("mean failure cost must be positive"));
    }
    Ok(inp.r_chat + inp.k() / inp.mu_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub r_star: f64,
    pub k: f64,
    pub variance: f64,
    pub ci: (f64, f64),
    /// Threshold at the normal lower bound `mu_C - z_{1-a} sigma_mu`.
    pub robust_r_star: f64,
    pub mu_c_lower: f64,
    /// Threshold at the Hoeffding lower bound, when `C_max` and `n` were given.
    pub hoeffding_r_star: Option<f64>,
    pub hoeffding_penalty: Option<f64>,
    pub preference_probability: Option<f64>,
}

/// Bounded-cost information for the Hoeffding floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingBound {
    pub c_max: f64,
    pub n: usize,
}

/// `C_max sqrt(ln(1/a) / (2n))`.
pub fn hoeffding_penalty(c_max: f64, n: usize, alpha: f64) -> f64 {
    c_max * ((1.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Delta-method interval for `R*` and the robust thresholds.
pub fn threshold_uncertainty(
    inp: &ThresholdInputs,
    sigma_mu: f64,
    level: f64,
    hoeffding: Option<HoeffdingBound>,
) -> Result<ThresholdReport> {
    if !(sigma_mu >= 0.0) {
        return Err(Error::domain("sigma_mu must be nonnegative"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain("level must lie in (0, 1)"));
    }
    let r_star = agency_threshold(inp)?;
    let k = inp.k();
    let mu = inp.mu_c;
    let slope = k.abs() / (mu * mu);
    let variance = (slope * sigma_mu).powi(2);
    let half = z_two_sided(level) * slope * sigma_mu;
    let mu_c_lower = mu - norm_quantile(level) * sigma_mu;
    if !(mu_c_lower > 0.0) {
        return Err(Error::NonpositiveLowerBound(mu_c_lower));
    }
    let (hoeffding_r_star, hoeffding_penalty) = match hoeffding {
        Some(hb) => {
            if hb.n == 0 || !(hb.c_max > 0.0) {
                return Err(Error::domain("Hoeffding bound needs C_max > 0 and n >= 1"));
            }
            let pen = hoeffding_penalty(hb.c_max, hb.n, 1.0 - level);
            let lower = mu - pen;
            if !(lower > 0.0) {
                return Err(Error::NonpositiveLowerBound(lower));
            }
            (Some(inp.r_chat + k / lower), Some(pen))
        }
        None => (None, None),
    };
    Ok(ThresholdReport {
        r_star,
        k,
        variance,
        ci: (r_star - half, r_star + half),
        robust_r_star: inp.r_chat + k / mu_c_lower,
        mu_c_lower,
        hoeffding_r_star,
        hoeffding_penalty,
        preference_probability: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CfDistribution {
    Empirical { sample: Vec<f64> },
    Uniform { low: f64, high: f64 },
    /// `ln C_f ~ N(mu, sigma^2)`.
    LogNormal { mu: f64, sigma: f64 },
}

impl CfDistribution {
    /// `Pr{C_f >= c}`.
    pub fn tail(&self, c: f64) -> Result<f64> {
        match self {
            CfDistribution::Empirical { sample } => {
                if sample.is_empty() {
                    return Err(Error::domain("empirical sample is empty"));
                }
                Ok(sample.iter().filter(|&&x| x >= c).count() as f64 / sample.len() as f64)
            }
            CfDistribution::Uniform { low, high } => {
                if !(high > low) {
                    return Err(Error::domain("uniform bounds must satisfy low < high"));
                }
                Ok(((high - c) / (high - low)).clamp(0.0, 1.0))
            }
            CfDistribution::LogNormal { mu, sigma } => {
                if c <= 0.0 {
                    return Ok(1.0);
                }
                let d = LogNormal::new(*mu, *sigma).map_err(|e| Error::domain(e.to_string()))?;
                Ok(d.sf(c))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CfDistribution::Empirical { sample } => sample.iter().sum::<f64>() / sample.len() as f64,
            CfDistribution::Uniform { low, high } => 0.5 * (low + high),
            CfDistribution::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }
}

/// Share of tasks for which the agent is preferred: `Pr{C_f >= K / gap}`.
pub fn preference_probability(dist: &CfDistribution, k: f64, reliability_gap: f64) -> Result<f64> {
    if !(reliability_gap > 0.0) {
        return Err(Error::domain("reliability gap must be positive"));
    }
    dist.tail(k / reliability_gap)
}

/// Mass of tasks with positive long-run surplus at per-task reliabilities
/// `r`; with `saturation`, `sum w s(du)` instead of the indicator.
pub fn micro_umax(econ: &TaskEconomy, r: &[f64], saturation: Option<&dyn Fn(f64) -> f64>) -> Result<f64> {
    econ.validate()?;
    if r.len() != econ.tasks.len() {
        return Err(Error::domain("one reliability per task is required"));
    }
    let mut total = 0.0;
    for (task, &ri) in econ.tasks.iter().zip(r) {
        let du = task_utility(task, ri, econ.c_time, econ.c_fric)?;
        total += task.w
            * match saturation {
                Some(s) => s(du).clamp(0.0, 1.0),
                None => f64::from(u8::from(du > 0.0)),
            };
    }
    Ok(total)
}

/// `N0 = sum w n0`.
pub fn micro_n0(seed_probs: &[f64], weights: &[f64]) -> Result<f64> {
    if seed_probs.len() != weights.len() {
        return Err(Error::domain("seed probabilities and weights differ in length"));
    }
    if seed_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::domain("seed probabilities must lie in [0, 1]"));
    }
    let sw: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sw - 1.0).abs() > 1e-9 {
        return Err(Error::domain("weights must be nonnegative and sum to 1"));
    }
    Ok(seed_probs.iter().zip(weights).map(|(p, w)| p * w).sum())
}

//! Cross-cohort regressions: the embedding gradient and the hazard slope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::stats::{ols, variance, z_two_sided};

/// One cohort's embedding level and fitted growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub e: f64,
    pub beta_hat: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub t_stat: f64,
    pub weighted: bool,
}

/// Slope of `beta_hat` on `E`.
///
/// The unweighted slope carries the standard error implied by the cohort
/// standard errors, `sqrt(sum (E_i - mean E)^2 se_i^2) / Sxx`. The weighted
/// variant is WLS with weights `1 / se_i^2`. Cohorts without a positive `se`
/// fall back to the residual variance of the regression.
pub fn embedding_gradient(cohorts: &[Cohort], weighted: bool, level: f64) -> Result<GradientEstimate> {
    if cohorts.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: cohorts.len() });
    }
    if cohorts.iter().any(|c| !(c.e.is_finite() && c.beta_hat.is_finite() && c.se.is_finite())) {
        return Err(Error::domain("cohort fields must be finite"));
    }
    let have_se = cohorts.iter().all(|c| c.se > 0.0);
    let w: Vec<f64> = cohorts
        .iter()
        .map(|c| if weighted && have_se { 1.0 / (c.se * c.se) } else { 1.0 })
        .collect();
    let sw: f64 = w.iter().sum();
    let xbar = cohorts.iter().zip(&w).map(|(c, w)| w * c.e).sum::<f64>() / sw;
    let ybar = cohorts.iter().zip(&w).map(|(c, w)| w * c.beta_hat).sum::<f64>() / sw;
    let sxx: f64 = cohorts.iter().zip(&w).map(|(c, w)| w * (c.e - xbar).powi(2)).sum();
    if sxx <= 1e-14 * sw {
        return Err(Error::DegenerateDesign("all cohorts share the same E".into()));
    }
    let sxy: f64 = cohorts.iter().zip(&w).map(|(c, w)| w * (c.e - xbar) * (c.beta_hat - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;

    let se = if have_se {
        if weighted {
            (1.0 / sxx).sqrt()
        } else {
            cohorts.iter().map(|c| (c.e - xbar).powi(2) * c.se * c.se).sum::<f64>().sqrt() / sxx
        }
    } else {
        let n = cohorts.len();
        if n < 3 {
            f64::NAN
        } else {
            let rss: f64 = cohorts.iter().map(|c| (c.beta_hat - intercept - slope * c.e).powi(2)).sum();
            (rss / (n - 2) as f64 / sxx).sqrt()
        }
    };
    let z = z_two_sided(level);
    let t_stat = if se > 0.0 { slope / se } else { f64::NAN };
    Ok(GradientEstimate { slope, intercept, se, ci: (slope - z * se, slope + z * se), t_stat, weighted })
}

/// One panel observation for the hazard-slope regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardPanelRow {
    pub delta_beta: f64,
    pub delta_v: f64,
    pub controls: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hprime0Estimate {
    pub hprime0: f64,
    /// HC1 heteroskedasticity-robust standard error.
    pub se: f64,
    pub ci: (f64, f64),
    pub n: usize,
}

/// OLS of `delta_beta` on an intercept, `delta_v` and the controls; returns
/// the `delta_v` coefficient with an HC1 interval.
pub fn estimate_hprime0(panel: &[HazardPanelRow], level: f64) -> Result<Hprime0Estimate> {
    let n = panel.len();
    if n < 2 {
        return Err(Error::DegenerateDesign(format!("{n} observation(s)")));
    }
    let q = panel[0].controls.len();
    if panel.iter().any(|r| r.controls.len() != q) {
        return Err(Error::domain("control vectors differ in length"));
    }
    let dv: Vec<f64> = panel.iter().map(|r| r.delta_v).collect();
    if variance(&dv) <= 1e-14 * dv.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateDesign("delta_v has no variation".into()));
    }
    if n < q + 2 {
        return Err(Error::DegenerateDesign(format!("{n} observations for {} coefficients", q + 2)));
    }
    let x = Matrix::from_fn(n, q + 2, |i, j| match j {
        0 => 1.0,
        1 => panel[i].delta_v,
        _ => panel[i].controls[j - 2],
    });
    let y: Vec<f64> = panel.iter().map(|r| r.delta_beta).collect();
    let fit = ols(&x, &y).map_err(|e| match e {
        Error::CollinearDesign => Error::DegenerateDesign("delta_v collinear with controls".into()),
        other => other,
    })?;
    let se = fit.cov_hc1[(1, 1)].max(0.0).sqrt();
    let z = z_two_sided(level);
    let b = fit.coef[1];
    Ok(Hprime0Estimate { hprime0: b, se, ci: (b - z * se, b + z * se), n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, Normal};

    fn table_cohorts() -> Vec<Cohort> {
        vec![
            Cohort { e: 0.2, beta_hat: 0.120, se: 0.015 },
            Cohort { e: 0.6, beta_hat: 0.182, se: 0.018 },
            Cohort { e: 0.9, beta_hat: 0.238, se: 0.021 },
        ]
    }

    #[test]
    fn cohort_slope() {
        let g = embedding_gradient(&table_cohorts(), false, 0.95).unwrap();
        // Hand computation: Sxy / Sxx = 0.0414 / 0.246667.
        assert!((g.slope - 0.0414 / (0.74 / 3.0)).abs() < 1e-9, "{}", g.slope);
        assert!(g.ci.0 < g.slope && g.slope < g.ci.1);
        assert!(g.t_stat > 4.0);
    }

    #[test]
    fn equal_betas_give_zero_slope() {
        let c = [Cohort { e: 0.1, beta_hat: 0.2, se: 0.01 }, Cohort { e: 0.7, beta_hat: 0.2, se: 0.01 }];
        assert_eq!(embedding_gradient(&c, false, 0.95).unwrap().slope, 0.0);
    }

    #[test]
    fn equal_e_is_degenerate() {
        let c = [Cohort { e: 0.5, beta_hat: 0.1, se: 0.01 }, Cohort { e: 0.5, beta_hat: 0.2, se: 0.01 }];
        assert!(matches!(embedding_gradient(&c, false, 0.95), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn gradient_interval_coverage() {
        let truth = 0.15;
        let mut covered = 0;
        for rep in 0..400 {
            let mut rng = stream_rng(11, 0, rep);
            let cohorts: Vec<Cohort> = [(0.2, 0.015), (0.6, 0.018), (0.9, 0.021)]
                .iter()
                .map(|&(e, se)| Cohort { e, beta_hat: 0.09 + truth * e + Normal::new(0.0, se).unwrap().sample(&mut rng), se })
                .collect();
            let g = embedding_gradient(&cohorts, false, 0.95).unwrap();
            if g.ci.0 <= truth && truth <= g.ci.1 {
                covered += 1;
            }
        }
        assert!(covered as f64 / 400.0 >= 0.9, "{covered}");
    }

    fn panel(h: f64, noise: f64, n: usize, seed: u64) -> Vec<HazardPanelRow> {
        let mut rng = stream_rng(seed, 1, 0);
        let nd = Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|i| {
                let dv = 0.5 * nd.sample(&mut rng) + (i % 3) as f64 * 0.1;
                let c = nd.sample(&mut rng);
                let e = noise * nd.sample(&mut rng) * (1.0 + dv.abs());
                HazardPanelRow { delta_beta: 0.01 + h * dv + 0.02 * c + e, delta_v: dv, controls: vec![c] }
            })
            .collect()
    }

    #[test]
    fn exact_recovery_without_noise() {
        let est = estimate_hprime0(&panel(0.073, 0.0, 30, 1), 0.95).unwrap();
        assert!((est.hprime0 - 0.073).abs() < 1e-10);
    }

    #[test]
    fn hprime0_coverage() {
        let covered = (0..200)
            .filter(|&s| {
                let est = estimate_hprime0(&panel(0.073, 0.01, 200, s), 0.95).unwrap();
                est.ci.0 <= 0.073 && 0.073 <= est.ci.1
            })
            .count();
        assert!(covered >= 180, "{covered}");
    }

    #[test]
    fn constant_delta_v_is_degenerate() {
        let rows: Vec<HazardPanelRow> =
            (0..5).map(|i| HazardPanelRow { delta_beta: i as f64, delta_v: 0.0, controls: vec![] }).collect();
        assert!(matches!(estimate_hprime0(&rows, 0.95), Err(Error::DegenerateDesign(_))));
    }
}

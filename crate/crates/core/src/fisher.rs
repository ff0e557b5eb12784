//! Fisher information and Cramér-Rao bounds for the rates `(alpha, beta)`.
//!
//! Information matrices are indexed `(alpha, beta, N0, U_max)`, the order of
//! [`ThetaGradient::to_array`](crate::curves::ThetaGradient::to_array). The
//! first two indices are the rates `phi`, the last two the nuisance levels
//! `psi`, which are profiled out by a Schur complement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{Family, ThetaTwoComp};
use crate::error::{Error, Result};
use crate::estimate::{allow_singular, fit_nls, FitOptions};
use crate::linalg::Matrix;
use crate::rng::{stream_id, Purpose};
use crate::scalar::Scalar;
use crate::simgen::gen_series_at;
use crate::stats::variance;

const PHI: [usize; 2] = [0, 1];
const PSI: [usize; 2] = [2, 3];

/// Observation model for `y_i` around `A(t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorModel<T> {
    GaussianIid { sigma: T },
    /// Stationary AR(1) errors with marginal standard deviation `sigma`,
    /// so `Cov(e_i, e_j) = sigma^2 rho^|i-j|`.
    GaussianAr1 { sigma: T, rho: T },
    /// `y_i ~ Poisson(kappa A(t_i))`.
    Poisson { kappa: T },
    /// `y_i ~ Binomial(n_i, A(t_i) / m)`.
    Binomial { m: T, trials: Vec<u32> },
}

impl<T: Scalar> ErrorModel<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::domain(m.to_string()));
        match self {
            ErrorModel::GaussianIid { sigma } if !(*sigma > T::zero()) => bad("sigma must be positive"),
            ErrorModel::GaussianAr1 { sigma, .. } if !(*sigma > T::zero()) => bad("sigma must be positive"),
            ErrorModel::GaussianAr1 { rho, .. } if !(rho.abs() < T::one()) => bad("rho must lie in (-1, 1)"),
            ErrorModel::Poisson { kappa } if !(*kappa > T::zero()) => bad("kappa must be positive"),
            ErrorModel::Binomial { m, .. } if !(*m > T::zero()) => bad("M must be positive"),
            ErrorModel::Binomial { trials, .. } if trials.len() != n => bad("one trial count per design point is required"),
            ErrorModel::Binomial { trials, .. } if trials.contains(&0) => bad("trial counts must be at least 1"),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorModel::GaussianIid { .. } => "gaussian_iid",
            ErrorModel::GaussianAr1 { .. } => "gaussian_ar1",
            ErrorModel::Poisson { .. } => "poisson",
            ErrorModel::Binomial { .. } => "binomial",
        }
    }
}

/// `n x 4` matrix whose row `i` is the gradient of `A(t_i)`.
pub fn gradient_matrix<T: Scalar>(theta: &ThetaTwoComp<T>, times: &[T]) -> Result<Matrix<T>> {
    let mut g = Matrix::zeros(times.len(), 4);
    for (i, &t) in times.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::domain("design times must be finite"));
        }
        for (j, v) in theta.gradient(t)?.to_array().into_iter().enumerate() {
            g[(i, j)] = v;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoReport<T: Scalar> {
    pub error_model: String,
    pub info_full: Matrix<T>,
    pub info_profiled: Matrix<T>,
    pub crlb_alpha: T,
    pub crlb_beta: T,
    /// `I_ab / sqrt(I_aa I_bb)` from the unprofiled rate block.
    pub corr_alpha_beta: T,
    /// Asymptotic correlation of `(alpha_hat, beta_hat)` with the nuisance profiled out.
    pub corr_profiled: T,
}

/// Full information matrix for the given observation model.
pub fn information<T: Scalar>(theta: &ThetaTwoComp<T>, times: &[T], em: &ErrorModel<T>) -> Result<Matrix<T>> {
    theta.validate()?;
    if times.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    em.validate(times.len())?;
    let g = gradient_matrix(theta, times)?;
    let info = match em {
        ErrorModel::GaussianIid { sigma } => g.gram().scale(T::one() / (*sigma * *sigma)),
        ErrorModel::GaussianAr1 { sigma, rho } => ar1_whitened(&g, *sigma, *rho, Ar1Endpoint::Exact),
        ErrorModel::Poisson { kappa } => {
            let mut info = Matrix::zeros(4, 4);
            for (i, &t) in times.iter().enumerate() {
                let a = theta.value(t);
                if !(a > T::zero()) {
                    return Err(Error::PoissonBoundary { index: i });
                }
                info.add_outer(g.row(i), *kappa / a);
            }
            info
        }
        ErrorModel::Binomial { m, trials } => {
            let mut info = Matrix::zeros(4, 4);
            for (i, &t) in times.iter().enumerate() {
                let p = theta.value(t) / *m;
                if !(p > T::zero() && p < T::one()) {
                    return Err(Error::BinomialBoundary { index: i });
                }
                let ni = T::lit(f64::from(trials[i]));
                info.add_outer(g.row(i), ni / (*m * *m * p * (T::one() - p)));
            }
            info
        }
    };
    Ok(info.symmetrize())
}

/// Information, its Schur-complement profile for `(alpha, beta)` and the CRLBs.
pub fn info_matrix<T: Scalar>(theta: &ThetaTwoComp<T>, times: &[T], em: &ErrorModel<T>) -> Result<InfoReport<T>> {
    let info_full = information(theta, times, em)?;
    let unprofiled = info_full.select(&PHI, &PHI);
    let corr_alpha_beta = unprofiled[(0, 1)] / (unprofiled[(0, 0)] * unprofiled[(1, 1)]).sqrt();
    let singular = || Error::SingularNuisance {
        unprofiled: [
            [unprofiled[(0, 0)].to_f64_lossy(), unprofiled[(0, 1)].to_f64_lossy()],
            [unprofiled[(1, 0)].to_f64_lossy(), unprofiled[(1, 1)].to_f64_lossy()],
        ],
    };
    if times.len() < 4 {
        return Err(singular());
    }
    let info_profiled = schur_profile(&info_full).ok_or_else(singular)?;
    let inv = checked_inverse(&info_profiled).ok_or_else(singular)?;
    Ok(InfoReport {
        error_model: em.name().to_string(),
        info_full,
        info_profiled,
        crlb_alpha: inv[(0, 0)],
        crlb_beta: inv[(1, 1)],
        corr_alpha_beta,
        corr_profiled: inv[(0, 1)] / (inv[(0, 0)] * inv[(1, 1)]).sqrt(),
    })
}

/// Inverse of a symmetric PSD matrix, refused when numerically singular.
fn checked_inverse<T: Scalar>(m: &Matrix<T>) -> Option<Matrix<T>> {
    if m.condition_number() > T::one() / (T::epsilon() * T::lit(1e3)) {
        return None;
    }
    m.inverse()
}

/// `I_phiphi - I_phipsi I_psipsi^{-1} I_psiphi`.
pub fn schur_profile<T: Scalar>(info: &Matrix<T>) -> Option<Matrix<T>> {
    let pp = info.select(&PHI, &PHI);
    let pq = info.select(&PHI, &PSI);
    let qq = info.select(&PSI, &PSI);
    let qq_inv = checked_inverse(&qq)?;
    Some(pp.sub(&pq.matmul(&qq_inv).matmul(&pq.transpose())).symmetrize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ar1Endpoint {
    /// Prais-Winsten: the first whitened row is `sqrt(1 - rho^2) g(t_1)`,
    /// reproducing `Sigma^{-1}` exactly.
    Exact,
    /// First term `g(t_1) g(t_1)^T` inside the common `1/(sigma^2 (1 - rho^2))`
    /// prefactor, which overweights the first point by `1/(1 - rho^2)`.
    Simplified,
}

/// Sum of whitened gradient outer products.
pub fn ar1_whitened<T: Scalar>(g: &Matrix<T>, sigma: T, rho: T, endpoint: Ar1Endpoint) -> Matrix<T> {
    let one = T::one();
    let pref = one / (sigma * sigma * (one - rho * rho));
    let mut info = Matrix::zeros(g.cols(), g.cols());
    if g.rows() == 0 {
        return info;
    }
    let first = match endpoint {
        Ar1Endpoint::Exact => one - rho * rho,
        Ar1Endpoint::Simplified => one,
    };
    info.add_outer(g.row(0), first);
    for i in 1..g.rows() {
        let w: Vec<T> = g.row(i).iter().zip(g.row(i - 1)).map(|(&a, &b)| a - rho * b).collect();
        info.add_outer(&w, one);
    }
    info.scale(pref).symmetrize()
}

/// `G^T Sigma^{-1} G` with the AR(1) covariance formed densely and factored by Cholesky.
pub fn ar1_dense<T: Scalar>(g: &Matrix<T>, sigma: T, rho: T) -> Result<Matrix<T>> {
    let n = g.rows();
    let sigma2 = sigma * sigma;
    let cov = Matrix::from_fn(n, n, |i, j| sigma2 * rho.powi(i.abs_diff(j) as i32));
    let l = cov.cholesky().ok_or_else(|| Error::domain("AR(1) covariance is not positive definite"))?;
    // Forward substitution L X = G, then G^T Sigma^{-1} G = X^T X.
    let k = g.cols();
    let mut x = Matrix::zeros(n, k);
    for c in 0..k {
        for i in 0..n {
            let mut s = g[(i, c)];
            for j in 0..i {
                s = s - l[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x.gram().symmetrize())
}

/// The AR(1) information computed three ways.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ar1Variants<T: Scalar> {
    pub whitened_exact: Matrix<T>,
    pub dense: Matrix<T>,
    pub whitened_simplified: Matrix<T>,
    /// Max relative entrywise gap between the exact whitened sum and the dense form.
    pub exact_vs_dense: T,
    /// Same gap for the simplified endpoint form.
    pub simplified_vs_dense: T,
}

pub fn ar1_variants<T: Scalar>(theta: &ThetaTwoComp<T>, times: &[T], sigma: T, rho: T) -> Result<Ar1Variants<T>> {
    ErrorModel::GaussianAr1 { sigma, rho }.validate(times.len())?;
    let g = gradient_matrix(theta, times)?;
    let whitened_exact = ar1_whitened(&g, sigma, rho, Ar1Endpoint::Exact);
    let whitened_simplified = ar1_whitened(&g, sigma, rho, Ar1Endpoint::Simplified);
    let dense = ar1_dense(&g, sigma, rho)?;
    let gap = |a: &Matrix<T>| {
        let scale = dense.max_abs();
        a.sub(&dense).max_abs() / scale
    };
    Ok(Ar1Variants {
        exact_vs_dense: gap(&whitened_exact),
        simplified_vs_dense: gap(&whitened_simplified),
        whitened_exact,
        dense,
        whitened_simplified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignComparison<T> {
    pub crlb_ratio_alpha: T,
    pub crlb_ratio_beta: T,
    /// Profiled estimator correlations of `(alpha, beta)` under each design.
    pub corr_a: T,
    pub corr_b: T,
}

/// Profiled CRLBs of design `a` over design `b`, with both rate correlations.
pub fn design_compare<T: Scalar>(
    theta: &ThetaTwoComp<T>,
    design_a: &[T],
    design_b: &[T],
    em: &ErrorModel<T>,
) -> Result<DesignComparison<T>> {
    let ra = info_matrix(theta, design_a, em)?;
    let rb = info_matrix(theta, design_b, em)?;
    Ok(DesignComparison {
        crlb_ratio_alpha: ra.crlb_alpha / rb.crlb_alpha,
        crlb_ratio_beta: ra.crlb_beta / rb.crlb_beta,
        corr_a: ra.corr_profiled,
        corr_b: rb.corr_profiled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrlbCheck {
    pub mc_var_alpha: f64,
    pub mc_var_beta: f64,
    pub crlb_alpha: f64,
    pub crlb_beta: f64,
    pub replicates: usize,
    pub failures: usize,
}

impl CrlbCheck {
    pub fn ratio_alpha(&self) -> f64 {
        self.mc_var_alpha / self.crlb_alpha
    }

    pub fn ratio_beta(&self) -> f64 {
        self.mc_var_beta / self.crlb_beta
    }
}

/// Simulates `replicates` series at `theta`, refits each by least squares
/// and compares the empirical rate variances with the profiled CRLBs.
///
/// Counts and successes are rescaled to the level scale (`y / kappa`,
/// `M y / n_i`) before fitting. Failed fits are counted, not fatal.
pub fn crlb_check(
    theta: &ThetaTwoComp<f64>,
    times: &[f64],
    em: &ErrorModel<f64>,
    replicates: usize,
    seed: u64,
) -> Result<CrlbCheck> {
    if replicates < 100 {
        return Err(Error::domain("crlb_check needs at least 100 replicates"));
    }
    let report = info_matrix(theta, times, em)?;
    let stream = stream_id(0, Purpose::CrlbCheck);
    let init = theta.to_params();
    let draws: Vec<Option<(f64, f64)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let series = gen_series_at(theta, em, times, seed, stream, r as u64).ok()?;
            let level = crate::simgen::to_level_scale(&series, em);
            let opts = FitOptions::default();
            let fit = allow_singular(fit_nls(&level, Family::TwoComp, Some(&init), &opts))
                .or_else(|_| allow_singular(fit_nls(&level, Family::TwoComp, None, &opts)))
                .ok()?;
            Some((fit.theta_hat[1], fit.theta_hat[3]))
        })
        .collect();
    let ok: Vec<(f64, f64)> = draws.into_iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::NonConvergence { iterations: replicates });
    }
    let a: Vec<f64> = ok.iter().map(|p| p.0).collect();
    let b: Vec<f64> = ok.iter().map(|p| p.1).collect();
    Ok(CrlbCheck {
        mc_var_alpha: variance(&a),
        mc_var_beta: variance(&b),
        crlb_alpha: report.crlb_alpha,
        crlb_beta: report.crlb_beta,
        replicates,
        failures: replicates - ok.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> ThetaTwoComp<f64> {
        ThetaTwoComp::new(3.0, 0.8, 2.0, 0.25).unwrap()
    }

    fn grid(n: usize, horizon: f64) -> Vec<f64> {
        (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn gradient_rows() {
        let g = gradient_matrix(&reference(), &[0.0, 1.0]).unwrap();
        assert_eq!(g.row(0), &[0.0, 0.0, 1.0, 0.0]);
        assert!((g[(1, 0)] - (-3.0 * (-0.8f64).exp())).abs() < 1e-15);
        assert!((g[(1, 0)] + 1.348).abs() < 1e-3);
    }

    #[test]
    fn gradient_rows_match_finite_differences() {
        let theta = ThetaTwoComp::new(1.7, 0.65, 3.35, 0.22).unwrap();
        let times: Vec<f64> = (0..20).map(|i| 0.37 * i as f64 + 0.1).collect();
        let g = gradient_matrix(&theta, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let p = [theta.alpha, theta.beta, theta.n0, theta.umax];
            for j in 0..4 {
                let h = 1e-6 * p[j].abs().max(1.0);
                let mut up = p;
                let mut dn = p;
                up[j] += h;
                dn[j] -= h;
                let mk = |q: [f64; 4]| ThetaTwoComp { alpha: q[0], beta: q[1], n0: q[2], umax: q[3] }.value(t);
                let fd = (mk(up) - mk(dn)) / (2.0 * h);
                assert!((fd - g[(i, j)]).abs() <= 1e-6 * g[(i, j)].abs().max(1e-3));
            }
        }
    }

    #[test]
    fn single_point_gaussian_alpha_entry() {
        let theta = reference();
        let (t, sigma) = (1.7, 0.3);
        let em = ErrorModel::GaussianIid { sigma };
        let info = information(&theta, &[t], &em).unwrap();
        let expect = t * t * 9.0 * (-2.0 * 0.8 * t).exp() / (sigma * sigma);
        assert!((info[(0, 0)] - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn ar1_with_zero_rho_is_iid() {
        let times = grid(21, 20.0);
        let iid = information(&reference(), &times, &ErrorModel::GaussianIid { sigma: 0.1 }).unwrap();
        let ar = information(&reference(), &times, &ErrorModel::GaussianAr1 { sigma: 0.1, rho: 0.0 }).unwrap();
        assert!(iid.sub(&ar).max_abs() <= 1e-12 * iid.max_abs());
    }

    #[test]
    fn ar1_exact_matches_dense() {
        for rho in [-0.7, -0.2, 0.3, 0.6, 0.9] {
            let v = ar1_variants(&reference(), &grid(41, 20.0), 0.05, rho).unwrap();
            assert!(v.exact_vs_dense < 1e-8, "rho {rho}: {}", v.exact_vs_dense);
            if rho.abs() >= 0.5 {
                assert!(v.simplified_vs_dense > 1e-3, "rho {rho}: {}", v.simplified_vs_dense);
            }
        }
    }

    #[test]
    fn profiling_matches_explicit_schur_and_never_shrinks() {
        let times = grid(21, 20.0);
        let r = info_matrix(&reference(), &times, &ErrorModel::GaussianIid { sigma: 0.05 }).unwrap();
        let i = &r.info_full;
        let pp = i.select(&[0, 1], &[0, 1]);
        let pq = i.select(&[0, 1], &[2, 3]);
        let qq = i.select(&[2, 3], &[2, 3]);
        let det = qq[(0, 0)] * qq[(1, 1)] - qq[(0, 1)] * qq[(1, 0)];
        let qinv = Matrix::from_rows(&[[qq[(1, 1)] / det, -qq[(0, 1)] / det], [-qq[(1, 0)] / det, qq[(0, 0)] / det]]);
        let explicit = pp.sub(&pq.matmul(&qinv).matmul(&pq.transpose()));
        assert!(explicit.sub(&r.info_profiled).max_abs() < 1e-10 * pp.max_abs());
        let naive = pp.inverse().unwrap();
        assert!(r.crlb_alpha >= naive[(0, 0)]);
        assert!(r.crlb_beta >= naive[(1, 1)]);
    }

    #[test]
    fn gaussian_scaling_in_sigma() {
        let times = grid(11, 10.0);
        let a = information(&reference(), &times, &ErrorModel::GaussianIid { sigma: 0.1 }).unwrap();
        let b = information(&reference(), &times, &ErrorModel::GaussianIid { sigma: 0.3 }).unwrap();
        assert!(a.scale(1.0 / 9.0).sub(&b).max_abs() < 1e-12 * b.max_abs());
    }

    #[test]
    fn boundaries_and_singular_nuisance() {
        let theta = reference();
        let times = grid(11, 10.0);
        let em = ErrorModel::Binomial { m: 2.5, trials: vec![10; 11] };
        assert!(matches!(info_matrix(&theta, &times, &em), Err(Error::BinomialBoundary { index: 0 })));
        let em = ErrorModel::Binomial { m: 4.0, trials: vec![10; 11] };
        assert!(info_matrix(&theta, &times, &em).is_ok());
        let zero = ThetaTwoComp { n0: 0.0, alpha: 0.8, umax: 2.0, beta: 0.25 };
        assert!(matches!(
            info_matrix(&zero, &times, &ErrorModel::Poisson { kappa: 10.0 }),
            Err(Error::PoissonBoundary { index: 0 })
        ));
        assert!(matches!(
            info_matrix(&theta, &[1.0, 2.0, 3.0], &ErrorModel::GaussianIid { sigma: 0.1 }),
            Err(Error::SingularNuisance { .. })
        ));
    }

    #[test]
    fn poisson_information_matches_score_covariance() {
        use rand_distr::{Distribution, Poisson};
        let theta = reference();
        let times = grid(10, 9.0);
        let kappa = 20.0;
        let info = information(&theta, &times, &ErrorModel::Poisson { kappa }).unwrap();
        let g = gradient_matrix(&theta, &times).unwrap();
        let lam: Vec<f64> = times.iter().map(|&t| kappa * theta.value(t)).collect();
        let reps = 100_000;
        let mut rng = crate::rng::stream_rng(5, 0, 0);
        let mut sum: Matrix<f64> = Matrix::zeros(4, 4);
        let mut sumsq: Matrix<f64> = Matrix::zeros(4, 4);
        for _ in 0..reps {
            let mut score = [0.0; 4];
            for i in 0..times.len() {
                let y: f64 = Poisson::new(lam[i]).unwrap().sample(&mut rng);
                let w = (y - lam[i]) / lam[i] * kappa;
                for (j, s) in score.iter_mut().enumerate() {
                    *s += w * g[(i, j)];
                }
            }
            for j in 0..4 {
                for k in 0..4 {
                    let v = score[j] * score[k];
                    sum[(j, k)] += v;
                    sumsq[(j, k)] += v * v;
                }
            }
        }
        for j in 0..4 {
            for k in 0..4 {
                let m: f64 = sum[(j, k)] / reps as f64;
                let var = sumsq[(j, k)] / reps as f64 - m * m;
                let se = (var / reps as f64).sqrt();
                assert!((m - info[(j, k)]).abs() < 3.0 * se + 1e-12, "({j},{k}) {m} vs {}", info[(j, k)]);
            }
        }
    }

    #[test]
    fn design_comparison_direction() {
        let theta = reference();
        let mid: Vec<f64> = (4..=8).map(f64::from).collect();
        let early_late = [0.0, 1.0, 2.0, 18.0, 19.0, 20.0];
        let em = ErrorModel::GaussianIid { sigma: 0.1 };
        let c = design_compare(&theta, &mid, &early_late, &em).unwrap();
        assert!(c.crlb_ratio_alpha > 1.0 && c.crlb_ratio_beta > 1.0);
        assert!(c.corr_b.abs() < c.corr_a.abs(), "{c:?}");
        let same = design_compare(&theta, &mid, &mid, &em).unwrap();
        assert_eq!((same.crlb_ratio_alpha, same.crlb_ratio_beta), (1.0, 1.0));
        assert!(design_compare(&theta, &mid, &[], &em).is_err());
    }

    #[test]
    fn ar1_inflates_beta_bound() {
        let times = grid(41, 20.0);
        let iid = info_matrix(&reference(), &times, &ErrorModel::GaussianIid { sigma: 0.05 }).unwrap();
        let ar = info_matrix(&reference(), &times, &ErrorModel::GaussianAr1 { sigma: 0.05, rho: 0.6 }).unwrap();
        assert!(ar.crlb_beta > iid.crlb_beta);
    }

    #[test]
    fn works_in_single_precision() {
        let theta = ThetaTwoComp::<f32>::new(3.0, 0.8, 2.0, 0.25).unwrap();
        let times: Vec<f32> = (0..21).map(|i| i as f32).collect();
        let r = info_matrix(&theta, &times, &ErrorModel::GaussianIid { sigma: 0.05f32 }).unwrap();
        let r64 = info_matrix(&reference(), &grid(21, 20.0), &ErrorModel::GaussianIid { sigma: 0.05 }).unwrap();
        assert!(((r.crlb_beta as f64) - r64.crlb_beta).abs() < 1e-3 * r64.crlb_beta);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn info_is_symmetric_psd_with_negative_rate_correlation(
            n0 in 0.1f64..5.0, a in 0.05f64..2.0, u in 0.1f64..5.0, b in 0.05f64..2.0,
            n in 2usize..30, horizon in 1.0f64..40.0, model in 0usize..3,
        ) {
            let theta = ThetaTwoComp::new(n0, a, u, b).unwrap();
            let times: Vec<f64> = (0..n).map(|i| horizon * (i + 1) as f64 / n as f64).collect();
            let em = match model {
                0 => ErrorModel::GaussianIid { sigma: 0.1 },
                1 => ErrorModel::GaussianAr1 { sigma: 0.1, rho: 0.4 },
                _ => ErrorModel::Poisson { kappa: 5.0 },
            };
            let info = information(&theta, &times, &em).unwrap();
            prop_assert!(info.is_symmetric(1e-12 * info.max_abs()));
            let ev = info.symmetric_eigenvalues();
            prop_assert!(ev[0] > -1e-10 * info.max_abs());
            if model == 0 {
                prop_assert!(info[(0, 1)] / (info[(0, 0)] * info[(1, 1)]).sqrt() < 0.0);
            }
        }
    }
}

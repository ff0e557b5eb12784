//! Levenberg-Marquardt for small dense least-squares problems.

use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iter: usize,
    /// Stationarity tolerance: stop when `|grad SSE| < tol * (1 + SSE)`.
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sse_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Central-difference Jacobian of `residuals` at `x`.
pub(crate) fn numeric_jacobian<R>(residuals: &R, x: &[f64], n: usize) -> Option<Matrix<f64>>
where
    R: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let k = x.len();
    let mut jac = Matrix::zeros(n, k);
    let mut xp = x.to_vec();
    for j in 0..k {
        let h = 1e-6 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = residuals(&xp)?;
        xp[j] = x[j] - h;
        let rm = residuals(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Some(jac)
}

/// Minimizes `sum r_i(x)^2`. `residuals` returns `None` for non-finite
/// evaluations, which the step control treats as a rejected step.
pub(crate) fn minimize<R, J>(residuals: R, jacobian: J, x0: Vec<f64>, opts: LmOptions) -> Option<LmOutcome>
where
    R: Fn(&[f64]) -> Option<Vec<f64>>,
    J: Fn(&[f64], &[f64]) -> Option<Matrix<f64>>,
{
    let k = x0.len();
    let mut x = x0;
    let mut r = residuals(&x)?;
    let mut sse = sse_of(&r);
    let mut lambda = 1e-3;

    for iter in 0..opts.max_iter {
        let jac = jacobian(&x, &r)?;
        let jtj = jac.gram();
        let g = jac.tmatvec(&r);
        let grad_norm = 2.0 * g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm < opts.tol * (1.0 + sse) {
            return Some(LmOutcome { x, sse, iterations: iter, converged: true });
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..k {
                a[(i, i)] = a[(i, i)] + lambda * jtj[(i, i)].max(1e-12);
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(step) = a.solve(&rhs) else {
                lambda *= 4.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            match residuals(&xn) {
                Some(rn) if sse_of(&rn) < sse => {
                    let sse_new = sse_of(&rn);
                    let rel_drop = (sse - sse_new) / sse.max(f64::MIN_POSITIVE);
                    let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let x_norm = xn.iter().map(|v| v * v).sum::<f64>().sqrt();
                    x = xn;
                    r = rn;
                    sse = sse_new;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel_drop < 1e-15 && step_norm < 1e-12 * (1.0 + x_norm) {
                        return Some(stalled(&jacobian, x, r, sse, iter + 1, opts));
                    }
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !accepted {
            return Some(stalled(&jacobian, x, r, sse, iter + 1, opts));
        }
    }
    Some(LmOutcome { x, sse, iterations: opts.max_iter, converged: false })
}

/// No further decrease is possible; accept when the gradient is small on a
/// looser scale (round-off dominates the last digits of the SSE).
fn stalled<J>(jacobian: &J, x: Vec<f64>, r: Vec<f64>, sse: f64, iterations: usize, opts: LmOptions) -> LmOutcome
where
    J: Fn(&[f64], &[f64]) -> Option<Matrix<f64>>,
{
    let converged = jacobian(&x, &r)
        .map(|jac| {
            let g = jac.tmatvec(&r);
            2.0 * g.iter().map(|v| v * v).sum::<f64>().sqrt() < opts.tol.sqrt() * (1.0 + sse)
        })
        .unwrap_or(false);
    LmOutcome { x, sse, iterations, converged }
}

use crate::curves::ThetaTwoComp;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::TimeSeries;

/// Recovers `(alpha, beta)` from the level `A(0)`, slope `A'(0)`, curvature
/// `A''(0)` and the asymptote `U_max`.
///
/// The rates solve `N0 (U - N0) a^2 - 2 N0 d1 a - (d1^2 + d2 U) = 0` with
/// `beta = (d1 + a N0) / U`. Both roots can be admissible; every root giving
/// positive rates is returned, ordered by `alpha`. When `d3 = A'''(0)` is
/// supplied the candidate closest to `-a^3 N0 + b^3 U = d3` is returned alone.
pub fn identify_from_moments(a0: f64, d1: f64, d2: f64, umax: f64, d3: Option<f64>) -> Result<Vec<ThetaTwoComp<f64>>> {
    if (umax - a0).abs() <= 1e-9 * umax.abs().max(1.0) {
        return Err(Error::DegenerateIdentification);
    }
    if !(a0 > 0.0 && umax > 0.0) {
        return Err(Error::DegenerateIdentification);
    }
    let qa = a0 * (umax - a0);
    let qb = -2.0 * a0 * d1;
    let qc = -(d1 * d1 + d2 * umax);
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Err(Error::NoPositiveRoot);
    }
    // Cancellation-free roots.
    let sq = disc.sqrt();
    let q = -0.5 * (qb + qb.signum() * sq);
    let mut roots = vec![q / qa];
    if q != 0.0 {
        roots.push(qc / q);
    } else {
        roots.push(-qb / (2.0 * qa));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));

    let mut cands: Vec<ThetaTwoComp<f64>> = roots
        .into_iter()
        .filter(|a| a.is_finite() && *a > 0.0)
        .filter_map(|alpha| {
            let beta = (d1 + alpha * a0) / umax;
            (beta > 0.0).then_some(ThetaTwoComp { n0: a0, alpha, umax, beta })
        })
        .collect();
    if cands.is_empty() {
        return Err(Error::NoPositiveRoot);
    }
    if let Some(d3) = d3 {
        let miss = |c: &ThetaTwoComp<f64>| (c.third_derivative(0.0) - d3).abs();
        let best = cands
            .iter()
            .copied()
            .min_by(|a, b| miss(a).partial_cmp(&miss(b)).expect("finite"))
            .expect("non-empty");
        cands = vec![best];
    }
    Ok(cands)
}

/// Orders candidates by their SSE against a series, best first.
pub fn rank_candidates_by_sse(cands: &[ThetaTwoComp<f64>], series: &TimeSeries) -> Vec<(ThetaTwoComp<f64>, f64)> {
    let mut ranked: Vec<_> = cands
        .iter()
        .map(|c| {
            let sse = series.times.iter().zip(&series.values).map(|(&t, y)| (c.value(t) - y).powi(2)).sum::<f64>();
            (*c, sse)
        })
        .collect();
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    ranked
}

/// Level, slope and curvature at the first time point from a local quadratic
/// least-squares fit to the first few observations.
pub fn smoothed_moments(series: &TimeSeries) -> (f64, f64, f64) {
    let m = series.len().min(5);
    if m < 3 {
        let y0 = series.values.first().copied().unwrap_or(0.0);
        return (y0, 0.0, 0.0);
    }
    let t0 = series.times[0];
    let x = Matrix::from_fn(m, 3, |i, j| (series.times[i] - t0).powi(j as i32));
    let y = &series.values[..m];
    let coef = x.gram().solve(&x.tmatvec(y)).unwrap_or_else(|| vec![y[0], 0.0, 0.0]);
    (coef[0], coef[1], 2.0 * coef[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Moments of the model, computed from the closed-form derivatives.
    fn moments(theta: &ThetaTwoComp<f64>) -> (f64, f64, f64) {
        (theta.derivative(0.0), theta.second_derivative(0.0), theta.third_derivative(0.0))
    }

    #[test]
    fn two_candidates_for_reference_theta() {
        let cands = identify_from_moments(3.0, -1.9, 1.795, 2.0, None).unwrap();
        assert_eq!(cands.len(), 2);
        assert!((cands[0].alpha - 0.8).abs() < 1e-12 && (cands[0].beta - 0.25).abs() < 1e-12);
        assert!((cands[1].alpha - 3.0).abs() < 1e-12 && (cands[1].beta - 3.55).abs() < 1e-12);
        for c in &cands {
            let (d1, d2, _) = moments(c);
            assert!((d1 + 1.9).abs() < 1e-10 && (d2 - 1.795).abs() < 1e-10);
        }
        let competitor_d3 = moments(&cands[1]).2;
        assert!((competitor_d3 - 8.478).abs() < 1e-3);
    }

    #[test]
    fn third_moment_disambiguates() {
        let truth = ThetaTwoComp::new(3.0, 0.8, 2.0, 0.25).unwrap();
        let d3 = moments(&truth).2;
        assert!((d3 + 1.5047).abs() < 1e-4);
        let cands = identify_from_moments(3.0, -1.9, 1.795, 2.0, Some(-1.5047)).unwrap();
        assert_eq!(cands.len(), 1);
        assert!((cands[0].alpha - 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_when_levels_coincide() {
        assert!(matches!(identify_from_moments(2.0, -0.5, 0.3, 2.0, None), Err(Error::DegenerateIdentification)));
    }

    #[test]
    fn no_positive_root() {
        // Large positive curvature with U > N0 gives complex roots.
        assert!(matches!(identify_from_moments(1.0, 0.0, -10.0, 1.5, None), Err(Error::NoPositiveRoot)));
    }

    #[test]
    fn ranking_by_sse_prefers_truth() {
        let truth = ThetaTwoComp::new(3.0, 0.8, 2.0, 0.25).unwrap();
        let times: Vec<f64> = (0..21).map(f64::from).collect();
        let series = TimeSeries::new(times.clone(), times.iter().map(|&t| truth.value(t)).collect()).unwrap();
        let cands = identify_from_moments(3.0, -1.9, 1.795, 2.0, None).unwrap();
        let ranked = rank_candidates_by_sse(&cands, &series);
        assert!((ranked[0].0.alpha - 0.8).abs() < 1e-12);
        assert!(ranked[0].1 < 1e-20);
    }

    proptest::proptest! {
        #[test]
        fn candidates_reproduce_moments(n0 in 0.1f64..5.0, a in 0.05f64..3.0, u in 0.1f64..5.0, b in 0.05f64..3.0) {
            proptest::prop_assume!((u - n0).abs() > 0.05);
            let truth = ThetaTwoComp { n0, alpha: a, umax: u, beta: b };
            let (d1, d2, _) = moments(&truth);
            let cands = identify_from_moments(n0, d1, d2, u, None).unwrap();
            proptest::prop_assert!(cands.iter().any(|c| (c.alpha - a).abs() < 1e-8 * a.max(1.0)));
            for c in cands {
                let (e1, e2, _) = moments(&c);
                proptest::prop_assert!((e1 - d1).abs() < 1e-10 * d1.abs().max(1.0));
                proptest::prop_assert!((e2 - d2).abs() < 1e-10 * d2.abs().max(1.0));
            }
        }
    }
}

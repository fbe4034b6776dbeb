//! Empirical modulus of smoothness.
//!
//! For each grid step `u`, the largest symmetric second difference
//! `|E(x+uy) + E(x-uy) - 2E(x)| / 2` seen over sampled points `x` of the
//! level set and unit directions `y` is a lower estimate of the modulus.
//! A log-log least-squares fit then produces (gamma, q). Random directions
//! are augmented with curvature-refined directions (power iterations on
//! gradient differences), which pins the top curvature exactly on
//! quadratics while keeping every probe a genuine second difference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::sampling::{random_unit, DomainSampler};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::objective::Objective;
use crate::space::{norm_of, NormSpec, Point};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessFit {
    /// (u, rho_hat(u)) over the requested grid.
    pub samples: Vec<(f64, f64)>,
    /// Reported constants: declared analytic values when the objective
    /// carries them, otherwise the fitted ones.
    pub gamma: f64,
    pub q: f64,
    pub fitted_gamma: f64,
    pub fitted_q: f64,
    /// Root-mean-square residual of the log-log fit.
    pub fit_residual: f64,
    pub from_declared: bool,
}

/// Number of sampled base points that get curvature-refined directions.
const REFINED_POINTS: usize = 8;
const POWER_ITERATIONS: usize = 40;
/// Fitted exponents may exceed 2 only by numerical noise.
const Q_FIT_SLACK: f64 = 1e-6;

pub fn estimate_smoothness(
    objective: &Objective,
    norm: NormSpec,
    u_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<SmoothnessFit> {
    if u_grid.is_empty() {
        return Err(Error::FitUnderdetermined { usable: 0 });
    }
    for w in u_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Problem("u grid must be strictly ascending".into()));
        }
    }
    if !(u_grid[0] > 0.0) {
        return Err(Error::Problem("u grid must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = DomainSampler::new(objective, 16, &mut rng)?;

    let mut pairs: Vec<(Point, Point)> = Vec::with_capacity(n_samples + REFINED_POINTS);
    for _ in 0..n_samples.max(1) {
        let x = sampler.sample(objective, &mut rng)?;
        let y = random_unit(&mut rng, objective.dim(), norm);
        pairs.push((x, y));
    }
    for i in 0..REFINED_POINTS.min(pairs.len()) {
        let x = pairs[i].0.clone();
        let seed_dir = pairs[i].1.clone();
        if let Some(y) = refine_direction(objective, &x, &seed_dir, norm) {
            pairs.push((x, y));
        }
    }

    let samples: Vec<(f64, f64)> = u_grid
        .iter()
        .map(|&u| {
            let rho = pairs
                .iter()
                .map(|(x, y)| second_difference(objective, x, y, u))
                .fold(0.0_f64, f64::max);
            (u, rho)
        })
        .collect();

    if samples.iter().all(|&(_, r)| r == 0.0) {
        return Err(Error::FlatObjective);
    }
    let usable: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, r)| r > 0.0).collect();
    if usable.len() < 2 {
        return Err(Error::FitUnderdetermined {
            usable: usable.len(),
        });
    }

    let (slope, intercept, residual) = log_log_fit(&usable);
    let mut fitted_q = slope;
    let fitted_gamma = intercept.exp();
    if fitted_q > 2.0 && fitted_q <= 2.0 + Q_FIT_SLACK {
        // Convex objectives cannot beat quadratic smoothness order; the
        // overshoot is fit noise.
        fitted_q = 2.0;
    }
    if !(fitted_q > 1.0 && fitted_q <= 2.0) {
        return Err(Error::FitExponentOutOfRange(fitted_q));
    }

    let (gamma, q, from_declared) = match objective.declared_smoothness() {
        Some((g, qq)) => (g, qq, true),
        None => (fitted_gamma, fitted_q, false),
    };
    Ok(SmoothnessFit {
        samples,
        gamma,
        q,
        fitted_gamma,
        fitted_q,
        fit_residual: residual,
        from_declared,
    })
}

/// Half the absolute symmetric second difference at (x, y, u).
pub fn second_difference(objective: &Objective, x: &Point, y: &Point, u: f64) -> f64 {
    let up = objective.value(&x.add_scaled(u, y));
    let dn = objective.value(&x.add_scaled(-u, y));
    let mid = objective.value(x);
    0.5 * (up + dn - 2.0 * mid).abs()
}

/// Power iteration on the curvature operator sensed through gradient
/// differences; exact for quadratics, a useful direction otherwise.
fn refine_direction(
    objective: &Objective,
    x: &Point,
    seed_dir: &Point,
    norm: NormSpec,
) -> Option<Point> {
    let h = 1e-4;
    let mut v = seed_dir.clone();
    for _ in 0..POWER_ITERATIONS {
        let gp = objective.gradient(&x.add_scaled(h, &v));
        let gm = objective.gradient(&x.add_scaled(-h, &v));
        let hv: Vec<f64> = gp
            .as_slice()
            .iter()
            .zip(gm.as_slice())
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect();
        let n = dot(&hv, &hv).sqrt();
        if n < 1e-14 {
            return None;
        }
        v = Point::from_vec_unchecked(hv.into_iter().map(|z| z / n).collect());
    }
    let n = norm_of(&v, norm);
    (n > 1e-12).then(|| v.scaled(1.0 / n))
}

/// Least squares of ln(rho) against ln(u): returns (slope, intercept, rms).
fn log_log_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(u, r) in points {
        let x = u.ln();
        let y = r.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut rss = 0.0;
    for &(u, r) in points {
        let e = r.ln() - (intercept + slope * u.ln());
        rss += e * e;
    }
    (slope, intercept, (rss / n).sqrt())
}

/// Default grid: eight log-spaced steps in [1e-3, 1].
pub fn default_u_grid() -> Vec<f64> {
    (0..8)
        .map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 7.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{LinearOperator, QuadraticModel};

    fn identity_quadratic(b: Vec<f64>) -> Objective {
        QuadraticModel::new(LinearOperator::Identity, Point::new(b).unwrap())
            .unwrap()
            .into_objective("||x - b||^2")
    }

    #[test]
    fn identity_quadratic_fits_gamma_one_q_two() {
        // The second difference is exactly 2 u^2 ||y||^2.
        let obj = identity_quadratic(vec![1.0, -2.0, 0.5, 3.0]);
        let fit = estimate_smoothness(&obj, NormSpec::L2, &default_u_grid(), 50, 11).unwrap();
        assert!(!fit.from_declared);
        assert!(
            (fit.fitted_gamma - 1.0).abs() < 1e-6,
            "gamma {}",
            fit.fitted_gamma
        );
        assert!((fit.fitted_q - 2.0).abs() < 1e-6, "q {}", fit.fitted_q);
    }

    #[test]
    fn linear_plus_ridge_fits_delta() {
        // E(x) = a . x + delta ||x||^2: the linear part cancels in the
        // second difference, leaving rho(u) = delta u^2.
        let delta = 0.3;
        let a = vec![1.0, -0.5, 0.25];
        let a2 = a.clone();
        let obj = Objective::from_oracles(
            3,
            "a . x + delta ||x||^2",
            move |x| dot(&a, x.as_slice()) + delta * dot(x.as_slice(), x.as_slice()),
            move |x| {
                Point::from_vec_unchecked(
                    a2.iter()
                        .zip(x.as_slice())
                        .map(|(ai, xi)| ai + 2.0 * delta * xi)
                        .collect(),
                )
            },
        );
        let fit = estimate_smoothness(&obj, NormSpec::L2, &default_u_grid(), 60, 5).unwrap();
        assert!((fit.fitted_gamma - delta).abs() < 1e-6 * delta.max(1.0));
        assert!((fit.fitted_q - 2.0).abs() < 1e-6);
    }

    #[test]
    fn declared_constants_override_the_fit() {
        let obj = identity_quadratic(vec![1.0, 1.0]).with_smoothness(1.0, 2.0);
        let fit = estimate_smoothness(&obj, NormSpec::L2, &default_u_grid(), 30, 3).unwrap();
        assert!(fit.from_declared);
        assert_eq!(fit.gamma, 1.0);
        assert_eq!(fit.q, 2.0);
        // The fit is still reported as a cross-check.
        assert!((fit.fitted_gamma - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_grid_point_is_underdetermined() {
        let obj = identity_quadratic(vec![1.0, 1.0]);
        let err = estimate_smoothness(&obj, NormSpec::L2, &[0.1], 10, 1).unwrap_err();
        assert!(matches!(err, Error::FitUnderdetermined { usable: 1 }));
    }

    #[test]
    fn rho_hat_is_nondecreasing_on_the_grid() {
        let obj = identity_quadratic(vec![2.0, -1.0, 0.0]);
        let fit = estimate_smoothness(&obj, NormSpec::L2, &default_u_grid(), 40, 9).unwrap();
        for w in fit.samples.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9);
        }
    }
}

//! Sampling from the level set { x : E(x) <= E(0) } and from unit spheres.
//!
//! The level set is bounded and convex. Proposals are drawn uniformly from
//! a ball found by descending to an interior anchor and bisecting ray
//! crossings of the level boundary, then filtered by rejection. Points
//! produced this way always lie inside the level set, which is all the
//! estimators need: evaluating at real members of the set keeps every
//! sup estimate a lower estimate and every inf estimate an upper estimate.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::objective::Objective;
use crate::space::{norm_of, NormSpec, Point};

const REJECTION_CAP: usize = 100_000;

#[derive(Clone, Debug)]
pub struct DomainSampler {
    center: Point,
    radius: f64,
    threshold: f64,
}

impl DomainSampler {
    /// Build a sampler for the level set of `objective`, probing `probes`
    /// random ray directions for the enclosing radius.
    pub fn new<R: Rng>(objective: &Objective, probes: usize, rng: &mut R) -> Result<Self> {
        let threshold = objective.value(&Point::zeros(objective.dim()));
        let center = interior_anchor(objective, threshold);
        let mut radius = 0.0_f64;
        for _ in 0..probes.max(4) {
            let dir = random_unit(rng, objective.dim(), NormSpec::L2);
            radius = radius.max(crossing_radius(objective, &center, &dir, threshold)?);
        }
        if radius <= 0.0 {
            return Err(Error::Problem(
                "level set has no measurable extent around the anchor".into(),
            ));
        }
        Ok(DomainSampler {
            center,
            radius,
            threshold,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// One point of the level set.
    pub fn sample<R: Rng>(&self, objective: &Objective, rng: &mut R) -> Result<Point> {
        let d = self.center.dim();
        for _ in 0..REJECTION_CAP {
            let dir = random_unit(rng, d, NormSpec::L2);
            let u: f64 = rng.random::<f64>();
            let r = self.radius * u.powf(1.0 / d as f64);
            let x = self.center.add_scaled(r, &dir);
            if objective.value(&x) <= self.threshold {
                return Ok(x);
            }
        }
        Err(Error::SamplerStalled {
            attempts: REJECTION_CAP,
        })
    }
}

/// A few backtracking gradient steps from the origin. Any point with
/// E(x) <= E(0) works as an anchor; deeper is better for acceptance rates.
fn interior_anchor(objective: &Objective, threshold: f64) -> Point {
    let mut x = Point::zeros(objective.dim());
    let mut value = threshold;
    let mut step = 1.0;
    for _ in 0..200 {
        let grad = objective.gradient(&x);
        let g2 = dot(grad.as_slice(), grad.as_slice());
        if g2 < 1e-24 {
            break;
        }
        let mut s = step;
        let mut moved = false;
        for _ in 0..60 {
            let trial = x.add_scaled(-s, &grad);
            let tv = objective.value(&trial);
            if tv < value - 1e-4 * s * g2 {
                x = trial;
                value = tv;
                step = s * 2.0;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}

/// Radius along `dir` from `center` at which the level boundary is crossed,
/// by doubling then bisection.
fn crossing_radius(
    objective: &Objective,
    center: &Point,
    dir: &Point,
    threshold: f64,
) -> Result<f64> {
    let above = |r: f64| objective.value(&center.add_scaled(r, dir)) > threshold;
    let mut hi = 1.0_f64;
    let mut lo = 0.0_f64;
    while !above(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > (1u64 << 60) as f64 {
            return Err(Error::Problem(
                "level set appears unbounded along a probe direction".into(),
            ));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Standard normal via Box-Muller; one value per call.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        if u1 > 1e-300 {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// A direction of unit norm under `norm`: Gaussian, then rescaled.
pub fn random_unit<R: Rng>(rng: &mut R, dim: usize, norm: NormSpec) -> Point {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let p = Point::from_vec_unchecked(v);
        let n = norm_of(&p, norm);
        if n > 1e-12 {
            return p.scaled(1.0 / n);
        }
    }
}

/// `count` distinct indices below `n`, in ascending order.
pub fn random_support<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<usize> {
    debug_assert!(count <= n);
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        let i = rng.random_range(0..n);
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked.sort_unstable();
    picked
}

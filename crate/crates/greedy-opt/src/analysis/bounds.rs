//! Per-iteration convergence bounds and the qualitative decay-rate check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::Variant;
use crate::space::Point;

/// The measured or analytic constants the bound evaluators consume.
/// Everything is optional so partially assembled profiles can be carried
/// around; the evaluators name whatever is missing.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConstantsProfile {
    /// Smoothness scale: rho(E, u) <= gamma u^q.
    pub gamma: Option<f64>,
    pub q: Option<f64>,
    /// Restricted strong convexity constant at sparsity `s`.
    pub beta: Option<f64>,
    /// Dictionary incoherence scale and exponent.
    pub v: Option<f64>,
    pub r: Option<f64>,
    /// Weakness parameter the run was quoted with.
    pub t: Option<f64>,
    /// Distance from the minimizer to its sparse stand-in.
    pub epsilon: Option<f64>,
    /// Sparsity of the stand-in.
    pub k: Option<usize>,
    /// Window for the incoherence certificate; bounds are quoted only for
    /// K + m <= S.
    pub s: Option<usize>,
    /// Initial gap E(0) - E(f0).
    pub a0: Option<f64>,
    /// The sparse stand-in itself, when planted.
    pub f_eps: Option<Point>,
    /// Hull scaling of the reference (targets of bounded complexity).
    pub a1_scale: Option<f64>,
}

impl ConstantsProfile {
    fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
        v.ok_or(Error::MissingConstant(name))
    }

    /// Positivity and the elementary relation beta <= 2 gamma, which any
    /// consistent (smoothness, convexity) pair satisfies.
    pub fn check_consistency(&self) -> Result<()> {
        if let (Some(b), Some(g)) = (self.beta, self.gamma) {
            if b > 2.0 * g * (1.0 + 1e-9) {
                return Err(Error::ProfileInconsistent(format!(
                    "beta = {b} exceeds 2 gamma = {}",
                    2.0 * g
                )));
            }
        }
        for (name, value) in [("gamma", self.gamma), ("beta", self.beta), ("v", self.v)] {
            if let Some(x) = value {
                if !(x > 0.0) {
                    return Err(Error::ProfileInconsistent(format!(
                        "{name} must be positive, got {x}"
                    )));
                }
            }
        }
        if let Some(t) = self.t {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::ProfileInconsistent(format!(
                    "t must lie in (0, 1], got {t}"
                )));
            }
        }
        if let Some(r) = self.r {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::ProfileInconsistent(format!(
                    "r must lie in [0, 1], got {r}"
                )));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return Err(Error::ProfileInconsistent(format!(
                    "epsilon must be nonnegative, got {e}"
                )));
            }
        }
        if let Some(a0) = self.a0 {
            if !(a0 >= -1e-12) {
                return Err(Error::ProfileInconsistent(format!(
                    "a0 must be nonnegative, got {a0}"
                )));
            }
        }
        Ok(())
    }
}

/// Gap bound after m iterations of the gradient-pairing driver:
///
///   max( a0 exp(-c1 m / K^{2r}), 8 (gamma^2 / beta) eps^2 ) + 2 gamma eps^2
///
/// with c1 = beta t^2 / (64 gamma V^2).
pub fn evaluate_thm21_bound(profile: &ConstantsProfile, m: usize) -> Result<f64> {
    let t = ConstantsProfile::need(profile.t, "t")?;
    bound_with_c1_factor(profile, m, t * t)
}

/// Same bound for the energy-rule driver; c1 = beta / (64 gamma V^2), with
/// no weakness factor.
pub fn evaluate_thm22_bound(profile: &ConstantsProfile, m: usize) -> Result<f64> {
    bound_with_c1_factor(profile, m, 1.0)
}

pub fn evaluate_bound(profile: &ConstantsProfile, variant: Variant, m: usize) -> Result<f64> {
    match variant {
        Variant::Wcga => evaluate_thm21_bound(profile, m),
        Variant::Egca => evaluate_thm22_bound(profile, m),
    }
}

fn bound_with_c1_factor(profile: &ConstantsProfile, m: usize, t_sq: f64) -> Result<f64> {
    profile.check_consistency()?;
    let gamma = ConstantsProfile::need(profile.gamma, "gamma")?;
    let beta = ConstantsProfile::need(profile.beta, "beta")?;
    let v = ConstantsProfile::need(profile.v, "v")?;
    let r = ConstantsProfile::need(profile.r, "r")?;
    let eps = ConstantsProfile::need(profile.epsilon, "epsilon")?;
    let a0 = ConstantsProfile::need(profile.a0, "a0")?;
    let k = profile.k.ok_or(Error::MissingConstant("k"))?;
    if k == 0 {
        return Err(Error::ProfileInconsistent("k must be at least 1".into()));
    }
    if let Some(s) = profile.s {
        if k + m > s {
            return Err(Error::SparsityWindow { m, k, s });
        }
    }
    let c1 = beta * t_sq / (64.0 * gamma * v * v);
    let exp_branch = a0 * (-c1 * m as f64 / (k as f64).powf(2.0 * r)).exp();
    let eps_branch = 8.0 * (gamma * gamma / beta) * eps * eps;
    Ok(exp_branch.max(eps_branch) + 2.0 * gamma * eps * eps)
}

/// Least-squares slope of log(gap) against log(m), with the pass mark at
/// (1 - q) plus slack. The multiplicative constants in the underlying
/// guarantee are unspecified, so only the decay exponent is checkable.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub threshold: f64,
    pub pass: bool,
    pub points_used: usize,
}

pub const RATE_SLACK: f64 = 0.2;
const RATE_GAP_FLOOR: f64 = 1e-14;
const RATE_MIN_POINTS: usize = 5;

pub fn evaluate_thm11_rate(
    gaps: &[(usize, f64)],
    m_lo: usize,
    m_hi: usize,
    q: f64,
) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = gaps
        .iter()
        .filter(|&&(m, g)| m >= m_lo.max(1) && m <= m_hi && g > RATE_GAP_FLOOR)
        .map(|&(m, g)| ((m as f64).ln(), g.ln()))
        .collect();
    if usable.len() < RATE_MIN_POINTS {
        return Err(Error::TooFewRatePoints {
            needed: RATE_MIN_POINTS,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in &usable {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let threshold = (1.0 - q) + RATE_SLACK;
    Ok(RateFit {
        slope,
        intercept,
        threshold,
        pass: slope <= threshold,
        points_used: usable.len(),
    })
}

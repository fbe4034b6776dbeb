//! First-order objective oracles.
//!
//! An [`Objective`] carries a value oracle and a gradient oracle over a
//! fixed dimension. Objectives built from a least-squares model also expose
//! that structure so span minimization can take an exact-solve path, and
//! may declare analytic smoothness constants for the analysis layer.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::space::Point;

pub type ValueFn = dyn Fn(&Point) -> f64 + Send + Sync;
pub type GradientFn = dyn Fn(&Point) -> Point + Send + Sync;

#[derive(Clone)]
pub struct Objective {
    dim: usize,
    description: String,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
    quadratic: Option<QuadraticModel>,
    smoothness: Option<(f64, f64)>,
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .field("quadratic", &self.quadratic.is_some())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl Objective {
    pub fn from_oracles(
        dim: usize,
        description: impl Into<String>,
        value: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Objective {
            dim,
            description: description.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            quadratic: None,
            smoothness: None,
        }
    }

    /// Declare analytic smoothness constants (gamma, q).
    pub fn with_smoothness(mut self, gamma: f64, q: f64) -> Self {
        self.smoothness = Some((gamma, q));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn value(&self, x: &Point) -> f64 {
        debug_assert_eq!(x.dim(), self.dim);
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Point) -> Point {
        debug_assert_eq!(x.dim(), self.dim);
        (self.gradient)(x)
    }

    pub fn quadratic(&self) -> Option<&QuadraticModel> {
        self.quadratic.as_ref()
    }

    pub fn declared_smoothness(&self) -> Option<(f64, f64)> {
        self.smoothness
    }
}

/// E(x) = ||A x - b||_2^2, the structure behind the exact span solve.
#[derive(Clone, Debug)]
pub struct QuadraticModel {
    operator: LinearOperator,
    target: Point,
}

#[derive(Clone, Debug)]
pub enum LinearOperator {
    Identity,
    Dense(Matrix),
}

impl QuadraticModel {
    pub fn new(operator: LinearOperator, target: Point) -> Result<Self> {
        if let LinearOperator::Dense(a) = &operator {
            if a.rows() != target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: a.rows(),
                    got: target.dim(),
                });
            }
        }
        Ok(QuadraticModel { operator, target })
    }

    pub fn target(&self) -> &Point {
        &self.target
    }

    /// A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.operator {
            LinearOperator::Identity => x.to_vec(),
            LinearOperator::Dense(a) => a.matvec(x),
        }
    }

    /// A^T y
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        match &self.operator {
            LinearOperator::Identity => y.to_vec(),
            LinearOperator::Dense(a) => a.t_matvec(y),
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.operator {
            LinearOperator::Identity => self.target.dim(),
            LinearOperator::Dense(a) => a.cols(),
        }
    }

    fn value_at(&self, x: &Point) -> f64 {
        let ax = self.apply(x.as_slice());
        let r: Vec<f64> = ax
            .iter()
            .zip(self.target.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        dot(&r, &r)
    }

    fn gradient_at(&self, x: &Point) -> Point {
        let ax = self.apply(x.as_slice());
        let r: Vec<f64> = ax
            .iter()
            .zip(self.target.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        let g = self.apply_transpose(&r);
        Point::from_vec_unchecked(g.into_iter().map(|v| 2.0 * v).collect())
    }

    /// Materialize the operator as a dense matrix by applying it to the
    /// basis vectors.
    pub fn to_matrix(&self) -> Matrix {
        let d = self.input_dim();
        let mut cols = Vec::with_capacity(d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            cols.push(self.apply(&e));
        }
        let rows = cols[0].len();
        let mut data = vec![0.0; rows * d];
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * d + j] = v;
            }
        }
        Matrix::new(rows, d, data).expect("finite by construction")
    }

    /// Wrap the model as a full objective. The oracles evaluate the model
    /// directly, so model and oracle can never disagree.
    pub fn into_objective(self, description: impl Into<String>) -> Objective {
        let dim = self.input_dim();
        let value_model = self.clone();
        let grad_model = self.clone();
        Objective {
            dim,
            description: description.into(),
            value: Arc::new(move |x| value_model.value_at(x)),
            gradient: Arc::new(move |x| grad_model.gradient_at(x)),
            quadratic: Some(self),
            smoothness: None,
        }
    }
}

/// Midpoint convexity spot test over the given pairs.
pub fn spot_check_convexity(
    objective: &Objective,
    pairs: &[(Point, Point)],
    tol: f64,
) -> Result<()> {
    for (x, y) in pairs {
        let mid = x.add(y).scaled(0.5);
        let lhs = objective.value(&mid);
        let rhs = 0.5 * (objective.value(x) + objective.value(y));
        if lhs > rhs + tol {
            return Err(Error::Problem(format!(
                "midpoint convexity violated by {:.3e}",
                lhs - rhs
            )));
        }
    }
    Ok(())
}

/// Compare the gradient oracle against central finite differences at each
/// probe, coordinate by coordinate.
pub fn check_gradient(
    objective: &Objective,
    probes: &[Point],
    step: f64,
    rel_tol: f64,
) -> Result<()> {
    for probe in probes {
        let grad = objective.gradient(probe);
        let scale = 1.0 + norm_inf(grad.as_slice());
        for i in 0..objective.dim() {
            let mut up = probe.as_slice().to_vec();
            let mut dn = up.clone();
            up[i] += step;
            dn[i] -= step;
            let fd = (objective.value(&Point::from_vec_unchecked(up))
                - objective.value(&Point::from_vec_unchecked(dn)))
                / (2.0 * step);
            if (fd - grad.get(i)).abs() > rel_tol * scale {
                return Err(Error::Problem(format!(
                    "gradient mismatch at coordinate {i}: oracle {:.9e}, finite difference {:.9e}",
                    grad.get(i),
                    fd
                )));
            }
        }
    }
    Ok(())
}

fn norm_inf(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

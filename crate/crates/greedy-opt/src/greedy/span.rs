//! Minimization of the objective over the span of the selected atoms.
//!
//! The stopping certificate is first-order optimality over the subspace:
//! every pairing of the gradient with a spanning atom must fall below
//! `orth_tol`. Objectives with least-squares structure get an exact normal
//! equations solve first; everything else (and rank-deficient solves) runs
//! coefficient-space gradient descent with backtracking.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot};
use crate::objective::Objective;
use crate::space::Point;

#[derive(Clone, Debug)]
pub struct SpanSolution {
    pub coefficients: Vec<f64>,
    pub iterate: Point,
    pub energy: f64,
    /// Largest absolute pairing of the gradient with a spanning atom.
    pub residual: f64,
    pub inner_iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const CHOLESKY_REL_TOL: f64 = 1e-13;

pub fn minimize_over_span(
    objective: &Objective,
    atoms: &[Point],
    warm_start: &[f64],
    orth_tol: f64,
    max_inner: usize,
) -> Result<SpanSolution> {
    if warm_start.len() != atoms.len() {
        return Err(Error::DimensionMismatch {
            expected: atoms.len(),
            got: warm_start.len(),
        });
    }
    if !(orth_tol > 0.0) {
        return Err(Error::InvalidSolverConfig(format!(
            "orth_tol must be positive, got {orth_tol}"
        )));
    }
    let dim = objective.dim();
    if atoms.is_empty() {
        let iterate = Point::zeros(dim);
        let energy = objective.value(&iterate);
        return Ok(SpanSolution {
            coefficients: vec![],
            iterate,
            energy,
            residual: 0.0,
            inner_iterations: 0,
        });
    }

    let mut coeffs = warm_start.to_vec();
    if let Some(model) = objective.quadratic() {
        // Reduced normal equations: with columns v_j = A phi_j, solve
        // (V^T V) u = V^T b.
        let m = atoms.len();
        let cols: Vec<Vec<f64>> = atoms.iter().map(|a| model.apply(a.as_slice())).collect();
        let mut gram = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            for j in 0..=i {
                let v = dot(&cols[i], &cols[j]);
                gram[i * m + j] = v;
                gram[j * m + i] = v;
            }
            rhs[i] = dot(&cols[i], model.target().as_slice());
        }
        if let Some(factor) = cholesky(&gram, m, CHOLESKY_REL_TOL) {
            let exact = factor.solve(&rhs);
            let state = evaluate(objective, atoms, &exact, dim);
            if state.residual <= orth_tol {
                return Ok(SpanSolution {
                    coefficients: exact,
                    iterate: state.iterate,
                    energy: state.energy,
                    residual: state.residual,
                    inner_iterations: 0,
                });
            }
            // Ill-conditioned solve; polish by descent from the solution.
            coeffs = exact;
        }
        // A singular reduced Gram (repeated atom) falls through to descent,
        // which still converges to a subspace minimizer.
    }

    descend(objective, atoms, coeffs, orth_tol, max_inner, dim)
}

struct EvalState {
    iterate: Point,
    energy: f64,
    pairings: Vec<f64>,
    residual: f64,
}

fn evaluate(objective: &Objective, atoms: &[Point], coeffs: &[f64], dim: usize) -> EvalState {
    let iterate = Point::combination(atoms, coeffs, dim);
    let energy = objective.value(&iterate);
    let grad = objective.gradient(&iterate);
    let pairings: Vec<f64> = atoms
        .iter()
        .map(|a| dot(grad.as_slice(), a.as_slice()))
        .collect();
    let residual = pairings.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    EvalState {
        iterate,
        energy,
        pairings,
        residual,
    }
}

fn descend(
    objective: &Objective,
    atoms: &[Point],
    mut coeffs: Vec<f64>,
    orth_tol: f64,
    max_inner: usize,
    dim: usize,
) -> Result<SpanSolution> {
    let mut state = evaluate(objective, atoms, &coeffs, dim);
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (coeffs, pairings)
    let mut iterations = 0usize;

    while state.residual > orth_tol {
        if iterations >= max_inner {
            return Err(Error::SpanConvergence {
                residual: state.residual,
                tol: orth_tol,
                iterations,
            });
        }
        iterations += 1;

        // Barzilai-Borwein step from the previous accepted move, clamped to
        // a sane range; backtracking guards it.
        if let Some((pc, pg)) = &prev {
            let mut su = 0.0;
            let mut sy = 0.0;
            for j in 0..coeffs.len() {
                let du = coeffs[j] - pc[j];
                let dg = state.pairings[j] - pg[j];
                su += du * du;
                sy += du * dg;
            }
            if sy > 1e-300 && su > 0.0 {
                step = (su / sy).clamp(1e-16, 1e16);
            }
        }

        let g2: f64 = state.pairings.iter().map(|p| p * p).sum();
        let mut s = step;
        let mut accepted = None;
        for _ in 0..200 {
            let trial: Vec<f64> = coeffs
                .iter()
                .zip(&state.pairings)
                .map(|(c, g)| c - s * g)
                .collect();
            let trial_state = evaluate(objective, atoms, &trial, dim);
            if trial_state.energy <= state.energy - ARMIJO * s * g2 {
                accepted = Some((trial, trial_state));
                break;
            }
            s *= 0.5;
        }
        match accepted {
            Some((trial, trial_state)) => {
                prev = Some((coeffs, std::mem::take(&mut state.pairings)));
                coeffs = trial;
                state = trial_state;
                step = s;
            }
            None => {
                // No decrease at any step length: the gradient signal is
                // below what the arithmetic can act on.
                return Err(Error::SpanConvergence {
                    residual: state.residual,
                    tol: orth_tol,
                    iterations,
                });
            }
        }
    }

    Ok(SpanSolution {
        coefficients: coeffs,
        iterate: state.iterate,
        energy: state.energy,
        residual: state.residual,
        inner_iterations: iterations,
    })
}

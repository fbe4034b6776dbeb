//! Atom selection rules for the two greedy drivers.
//!
//! Ties break toward the lowest atom index, positive sign first, so runs
//! are reproducible.

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::greedy::line_search::{line_minimize, LineMinimum};
use crate::linalg::dot;
use crate::objective::Objective;
use crate::space::Point;

/// A signed atom chosen by pairing against the negative gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingChoice {
    pub index: usize,
    pub sign: i8,
    /// Pairing of the chosen signed atom with the negative gradient.
    pub pairing: f64,
    /// Largest pairing over all signed atoms.
    pub sup_pairing: f64,
}

/// Outcome of gradient-based selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Selection {
    Atom(PairingChoice),
    /// The supremum of pairings is not positive: the current iterate
    /// already minimizes the objective over the span of the dictionary.
    Stationary {
        sup_pairing: f64,
    },
}

fn signed_pairings(objective: &Objective, iterate: &Point, dictionary: &Dictionary) -> Vec<f64> {
    let grad = objective.gradient(iterate);
    let neg: Vec<f64> = grad.as_slice().iter().map(|g| -g).collect();
    dictionary
        .atoms()
        .iter()
        .map(|atom| dot(&neg, atom.as_slice()))
        .collect()
}

fn validate_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidWeakness { step: 0, value: t });
    }
    Ok(())
}

/// Select the signed atom with the largest pairing against the negative
/// gradient. Any atom with pairing at least `t_m` times the supremum would
/// satisfy the selection contract; the exact argmax trivially does.
pub fn select_atom_wcga(
    objective: &Objective,
    iterate: &Point,
    dictionary: &Dictionary,
    t_m: f64,
) -> Result<Selection> {
    validate_t(t_m)?;
    let pairings = signed_pairings(objective, iterate, dictionary);
    let mut best_index = 0usize;
    let mut best_sign = 1i8;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &p) in pairings.iter().enumerate() {
        let (value, sign) = if p >= -p { (p, 1) } else { (-p, -1) };
        if value > best_value {
            best_value = value;
            best_index = i;
            best_sign = sign;
        }
    }
    if best_value <= 0.0 {
        return Ok(Selection::Stationary {
            sup_pairing: best_value,
        });
    }
    Ok(Selection::Atom(PairingChoice {
        index: best_index,
        sign: best_sign,
        pairing: best_value,
        sup_pairing: best_value,
    }))
}

/// Among all signed atoms admissible at weakness `t_m` (pairing at least
/// `t_m` times the supremum), return the one with the smallest pairing.
/// Stress-tests how the convergence bounds degrade with `t`.
pub fn select_atom_wcga_adversarial(
    objective: &Objective,
    iterate: &Point,
    dictionary: &Dictionary,
    t_m: f64,
) -> Result<Selection> {
    validate_t(t_m)?;
    let pairings = signed_pairings(objective, iterate, dictionary);
    let mut sup = f64::NEG_INFINITY;
    for &p in &pairings {
        sup = sup.max(p.abs());
    }
    if sup <= 0.0 {
        return Ok(Selection::Stationary { sup_pairing: sup });
    }
    let threshold = t_m * sup;
    let mut worst: Option<(usize, i8, f64)> = None;
    for (i, &p) in pairings.iter().enumerate() {
        for (value, sign) in [(p, 1i8), (-p, -1i8)] {
            if value >= threshold && worst.map_or(true, |(_, _, w)| value < w) {
                worst = Some((i, sign, value));
            }
        }
    }
    let (index, sign, pairing) = worst.expect("argmax is always admissible");
    Ok(Selection::Atom(PairingChoice {
        index,
        sign,
        pairing,
        sup_pairing: sup,
    }))
}

/// Evaluate the pairing and supremum the selection rule would see, for
/// recording alongside iterations chosen by other rules.
pub fn pairing_diagnostics(
    objective: &Objective,
    iterate: &Point,
    dictionary: &Dictionary,
    index: usize,
    sign: i8,
) -> (f64, f64) {
    let pairings = signed_pairings(objective, iterate, dictionary);
    let sup = pairings.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    (f64::from(sign) * pairings[index], sup)
}

/// An atom chosen by the best one-dimensional update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyChoice {
    pub index: usize,
    /// Sign of the minimizing step; the step is reported relative to the
    /// unsigned atom and may be negative.
    pub sign: i8,
    pub step: f64,
    pub value: f64,
}

/// Run a line minimization along every atom (signs folded into the signed
/// step) and return the atom whose best update gives the smallest value.
pub fn select_atom_egca(
    objective: &Objective,
    iterate: &Point,
    dictionary: &Dictionary,
    line_tol: f64,
) -> Result<EnergyChoice> {
    let mut best: Option<EnergyChoice> = None;
    for (i, atom) in dictionary.atoms().iter().enumerate() {
        let LineMinimum { step, value } = line_minimize(objective, iterate, atom, line_tol)?;
        if best.as_ref().map_or(true, |b| value < b.value) {
            best = Some(EnergyChoice {
                index: i,
                sign: if step < 0.0 { -1 } else { 1 },
                step,
                value,
            });
        }
    }
    Ok(best.expect("dictionary is never empty"))
}

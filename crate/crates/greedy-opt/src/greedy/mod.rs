//! The two greedy drivers.
//!
//! Both start from the origin. Each iteration selects a signed atom (by
//! gradient pairing or by best one-dimensional update), appends it to the
//! active set, then re-minimizes the objective over the span of everything
//! selected so far. Energies are nonincreasing by construction since spans
//! are nested and each refit is certified.

pub mod line_search;
pub mod select;
pub mod span;

pub use line_search::{line_minimize, LineMinimum};
pub use select::{
    pairing_diagnostics, select_atom_egca, select_atom_wcga, select_atom_wcga_adversarial,
    EnergyChoice, PairingChoice, Selection,
};
pub use span::{minimize_over_span, SpanSolution};

use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::space::Point;
use crate::weakness::WeaknessSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Wcga,
    Egca,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Wcga => write!(f, "wcga"),
            Variant::Egca => write!(f, "egca"),
        }
    }
}

/// How weak selection is realized when the weakness factor is below one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakMode {
    /// Exact argmax; satisfies every weakness contract.
    Exact,
    /// Deliberately the worst admissible signed atom.
    Adversarial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub weakness: WeaknessSequence,
    pub weak_mode: WeakMode,
    /// Subspace optimality certificate tolerance.
    pub orth_tol: f64,
    /// Final bracket width for one-dimensional minimizations.
    pub line_tol: f64,
    /// Inner iteration cap for the span solver.
    pub span_max_inner: usize,
    /// Stop once energy minus the reference energy falls to this level.
    pub stop_gap: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 20,
            weakness: WeaknessSequence::Constant(1.0),
            weak_mode: WeakMode::Exact,
            orth_tol: 1e-10,
            line_tol: 1e-12,
            span_max_inner: 10_000,
            stop_gap: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.orth_tol > 0.0) {
            return Err(Error::InvalidSolverConfig(format!(
                "orth_tol must be positive, got {}",
                self.orth_tol
            )));
        }
        if !(self.line_tol > 0.0) {
            return Err(Error::InvalidSolverConfig(format!(
                "line_tol must be positive, got {}",
                self.line_tol
            )));
        }
        if let Some(g) = self.stop_gap {
            if !(g >= 0.0) {
                return Err(Error::InvalidSolverConfig(format!(
                    "stop_gap must be nonnegative, got {g}"
                )));
            }
        }
        match &self.weakness {
            WeaknessSequence::Constant(t) => WeaknessSequence::constant(*t).map(|_| ())?,
            WeaknessSequence::Explicit(ts) => WeaknessSequence::explicit(ts.clone()).map(|_| ())?,
        }
        Ok(())
    }
}

/// Current iterate together with its span coordinates.
#[derive(Clone, Debug)]
pub struct GreedyState {
    pub iterate: Point,
    /// Selected (atom index, sign) pairs in pick order.
    pub selected: Vec<(usize, i8)>,
    /// Coordinates of the iterate over the selected signed atoms.
    pub coefficients: Vec<f64>,
    pub m: usize,
    pub energy: f64,
}

/// One row of the per-iteration trace. The `m = 0` row has no selection
/// fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterateRecord {
    pub m: usize,
    pub atom_index: Option<usize>,
    pub sign: Option<i8>,
    /// Pairing of the chosen signed atom with the negative gradient at the
    /// previous iterate.
    pub pairing: Option<f64>,
    /// Largest such pairing over all signed atoms.
    pub sup_pairing: Option<f64>,
    /// Weakness factor in force at this iteration (gradient-rule runs).
    pub weakness_t: Option<f64>,
    /// Best one-dimensional value found by the selection step, when the
    /// rule computed one.
    pub line_value: Option<f64>,
    pub energy: f64,
    /// Energy minus the reference energy, when a reference is known.
    pub gap: Option<f64>,
    /// Subspace optimality residual after the refit.
    pub orth_residual: Option<f64>,
    /// Span coordinates of the iterate over the selected signed atoms.
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    /// No signed atom pairs positively with the negative gradient.
    Stationary,
    GapReached,
    /// The refit produced no measurable energy decrease.
    NoProgress,
}

#[derive(Clone, Debug)]
pub struct GreedyRun {
    pub variant: Variant,
    pub config: SolverConfig,
    pub records: Vec<IterateRecord>,
    pub state: GreedyState,
    pub stop: StopReason,
    /// Energy at the reference minimizer, when one was supplied.
    pub reference_energy: Option<f64>,
}

impl GreedyRun {
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.gap)
    }

    /// (m, gap) series for records that carry a gap.
    pub fn gap_series(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.gap.map(|g| (r.m, g)))
            .collect()
    }
}

/// Progress below this fraction of the current energy scale stops a run.
const NO_PROGRESS_FLOOR: f64 = 1e-14;

pub fn run_greedy(
    variant: Variant,
    objective: &Objective,
    dictionary: &Dictionary,
    config: &SolverConfig,
    reference: Option<&Point>,
) -> Result<GreedyRun> {
    config.validate()?;
    if dictionary.dim() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            got: dictionary.dim(),
        });
    }
    if let Some(f0) = reference {
        if f0.dim() != objective.dim() {
            return Err(Error::DimensionMismatch {
                expected: objective.dim(),
                got: f0.dim(),
            });
        }
    }
    if config.stop_gap.is_some() && reference.is_none() {
        return Err(Error::InvalidSolverConfig(
            "stop_gap requires a reference minimizer".into(),
        ));
    }

    let dim = objective.dim();
    let reference_energy = reference.map(|f0| objective.value(f0));
    let mut state = GreedyState {
        iterate: Point::zeros(dim),
        selected: vec![],
        coefficients: vec![],
        m: 0,
        energy: objective.value(&Point::zeros(dim)),
    };
    let gap0 = reference_energy.map(|er| state.energy - er);
    let mut records = vec![IterateRecord {
        m: 0,
        atom_index: None,
        sign: None,
        pairing: None,
        sup_pairing: None,
        weakness_t: None,
        line_value: None,
        energy: state.energy,
        gap: gap0,
        orth_residual: None,
        coefficients: vec![],
    }];

    let mut signed_atoms: Vec<Point> = vec![];
    let mut stop = StopReason::MaxIterations;

    if let (Some(target), Some(g)) = (config.stop_gap, gap0) {
        if g <= target {
            return Ok(GreedyRun {
                variant,
                config: config.clone(),
                records,
                state,
                stop: StopReason::GapReached,
                reference_energy,
            });
        }
    }

    struct Picked {
        index: usize,
        sign: i8,
        weakness_t: Option<f64>,
        pairing: f64,
        sup_pairing: f64,
        line_value: Option<f64>,
        /// Warm-start coefficient for the new signed atom.
        warm_coeff: f64,
    }

    for m in 1..=config.max_iterations {
        let picked: Picked = match variant {
            Variant::Wcga => {
                let t_m = config.weakness.at(m);
                let selection = match config.weak_mode {
                    WeakMode::Exact => select_atom_wcga(objective, &state.iterate, dictionary, t_m),
                    WeakMode::Adversarial => {
                        select_atom_wcga_adversarial(objective, &state.iterate, dictionary, t_m)
                    }
                }
                .map_err(|e| e.at_iteration(m))?;
                match selection {
                    Selection::Stationary { .. } => {
                        stop = StopReason::Stationary;
                        break;
                    }
                    Selection::Atom(c) => Picked {
                        index: c.index,
                        sign: c.sign,
                        weakness_t: Some(t_m),
                        pairing: c.pairing,
                        sup_pairing: c.sup_pairing,
                        line_value: None,
                        warm_coeff: 0.0,
                    },
                }
            }
            Variant::Egca => {
                let choice =
                    select_atom_egca(objective, &state.iterate, dictionary, config.line_tol)
                        .map_err(|e| e.at_iteration(m))?;
                let (pairing, sup) = pairing_diagnostics(
                    objective,
                    &state.iterate,
                    dictionary,
                    choice.index,
                    choice.sign,
                );
                Picked {
                    index: choice.index,
                    sign: choice.sign,
                    weakness_t: None,
                    pairing,
                    sup_pairing: sup,
                    line_value: Some(choice.value),
                    // Step along the signed atom; sign folded out.
                    warm_coeff: choice.step.abs(),
                }
            }
        };
        let Picked {
            index,
            sign,
            weakness_t,
            pairing,
            sup_pairing,
            line_value,
            warm_coeff,
        } = picked;

        signed_atoms.push(dictionary.signed_atom(index, sign));
        let mut warm = state.coefficients.clone();
        warm.push(warm_coeff);
        let solution = minimize_over_span(
            objective,
            &signed_atoms,
            &warm,
            config.orth_tol,
            config.span_max_inner,
        )
        .map_err(|e| e.at_iteration(m))?;

        let improvement = state.energy - solution.energy;
        state = GreedyState {
            iterate: solution.iterate,
            selected: {
                let mut s = state.selected;
                s.push((index, sign));
                s
            },
            coefficients: solution.coefficients.clone(),
            m,
            energy: solution.energy,
        };
        let gap = reference_energy.map(|er| state.energy - er);
        records.push(IterateRecord {
            m,
            atom_index: Some(index),
            sign: Some(sign),
            pairing: Some(pairing),
            sup_pairing: Some(sup_pairing),
            weakness_t,
            line_value,
            energy: state.energy,
            gap,
            orth_residual: Some(solution.residual),
            coefficients: solution.coefficients,
        });

        if let (Some(target), Some(g)) = (config.stop_gap, gap) {
            if g <= target {
                stop = StopReason::GapReached;
                break;
            }
        }
        if improvement <= NO_PROGRESS_FLOOR * state.energy.abs().max(1.0) {
            stop = StopReason::NoProgress;
            break;
        }
    }

    Ok(GreedyRun {
        variant,
        config: config.clone(),
        records,
        state,
        stop,
        reference_energy,
    })
}

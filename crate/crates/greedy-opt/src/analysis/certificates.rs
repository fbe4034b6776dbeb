//! Certificate checks on objectives and recorded runs:
//!
//! - the smoothness sandwich: for x in the level set and any step,
//!   0 <= E(x+uy) - E(x) - u <E'(x), y> <= 2 rho(E, u ||y||);
//! - subspace optimality: the refit gradient pairs to zero with every
//!   selected atom, re-verified from the recorded coefficients;
//! - hull reduction: pairings over convex combinations of signed atoms
//!   never beat the best signed atom.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::sampling::{random_unit, standard_normal, DomainSampler};
use crate::dictionary::Dictionary;
use crate::error::Result;
use crate::greedy::GreedyRun;
use crate::linalg::dot;
use crate::objective::Objective;
use crate::space::{norm_of, Point};

pub const CERTIFICATE_SLACK: f64 = 1e-9;
pub const HULL_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichWitness {
    pub sample: usize,
    pub u: f64,
    pub lower_slack: f64,
    pub upper_slack: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub samples: usize,
    /// Smallest observed E(x+uy) - E(x) - u <E'(x), y>; nonnegative up to
    /// slack when the objective is convex.
    pub min_lower_slack: f64,
    /// Smallest observed 2 gamma (u ||y||)^q minus the expansion term.
    pub min_upper_slack: f64,
    pub violations: usize,
    pub worst: Option<SandwichWitness>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthogonalityCheck {
    pub tol: f64,
    /// Largest residual recomputed from the recorded span coordinates.
    pub max_recomputed: f64,
    /// Largest residual the run recorded.
    pub max_recorded: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HullCheck {
    pub samples: usize,
    /// Largest pairing excess of a convex combination over the best signed
    /// atom.
    pub max_excess: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub sandwich: SandwichCheck,
    pub orthogonality: Option<OrthogonalityCheck>,
    pub hull: HullCheck,
    pub pass: bool,
}

/// Run all certificate checks. `gamma` and `q` describe the smoothness
/// envelope used for the sandwich upper arm.
#[allow(clippy::too_many_arguments)]
pub fn verify_certificates(
    objective: &Objective,
    run: Option<&GreedyRun>,
    dictionary: &Dictionary,
    gamma: f64,
    q: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sandwich = sandwich_check(objective, dictionary, gamma, q, n_samples, &mut rng)?;
    let orthogonality = run.map(|r| orthogonality_check(objective, r, dictionary));
    let hull = hull_check(dictionary, n_samples, &mut rng);
    let pass = sandwich.pass && hull.pass && orthogonality.as_ref().map_or(true, |o| o.pass);
    Ok(CertificateReport {
        sandwich,
        orthogonality,
        hull,
        pass,
    })
}

fn sandwich_check<R: Rng>(
    objective: &Objective,
    dictionary: &Dictionary,
    gamma: f64,
    q: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<SandwichCheck> {
    let sampler = DomainSampler::new(objective, 16, rng)?;
    let norm = dictionary.norm();
    let mut min_lower = f64::INFINITY;
    let mut min_upper = f64::INFINITY;
    let mut violations = 0usize;
    let mut worst: Option<SandwichWitness> = None;
    for i in 0..n_samples {
        let x = sampler.sample(objective, rng)?;
        let y = random_unit(rng, objective.dim(), norm);
        // Log-uniform steps over [1e-3, 1].
        let u = 10f64.powf(rng.random_range(-3.0..0.0));
        let (lower, upper) = sandwich_slacks(objective, &x, &y, u, gamma, q, norm);
        min_lower = min_lower.min(lower);
        min_upper = min_upper.min(upper);
        let bad = lower < -CERTIFICATE_SLACK || upper < -CERTIFICATE_SLACK;
        if bad {
            violations += 1;
        }
        if worst.as_ref().map_or(bad, |w| {
            bad && lower.min(upper) < w.lower_slack.min(w.upper_slack)
        }) {
            worst = Some(SandwichWitness {
                sample: i,
                u,
                lower_slack: lower,
                upper_slack: upper,
            });
        }
    }
    Ok(SandwichCheck {
        samples: n_samples,
        min_lower_slack: min_lower,
        min_upper_slack: min_upper,
        violations,
        worst,
        pass: violations == 0,
    })
}

/// (lower, upper) slack of the sandwich at one triple: both are
/// nonnegative exactly when the inequalities hold.
pub fn sandwich_slacks(
    objective: &Objective,
    x: &Point,
    y: &Point,
    u: f64,
    gamma: f64,
    q: f64,
    norm: crate::space::NormSpec,
) -> (f64, f64) {
    let expansion = objective.value(&x.add_scaled(u, y))
        - objective.value(x)
        - u * dot(objective.gradient(x).as_slice(), y.as_slice());
    let envelope = 2.0 * gamma * (u * norm_of(y, norm)).powf(q);
    (expansion, envelope - expansion)
}

fn orthogonality_check(
    objective: &Objective,
    run: &GreedyRun,
    dictionary: &Dictionary,
) -> OrthogonalityCheck {
    let dim = objective.dim();
    let mut max_recomputed = 0.0_f64;
    let mut max_recorded = 0.0_f64;
    let mut signed: Vec<Point> = vec![];
    for record in &run.records {
        if record.m == 0 {
            continue;
        }
        let (index, sign) = (record.atom_index.unwrap(), record.sign.unwrap());
        signed.push(dictionary.signed_atom(index, sign));
        let iterate = Point::combination(&signed, &record.coefficients, dim);
        let grad = objective.gradient(&iterate);
        let residual = signed
            .iter()
            .map(|phi| dot(grad.as_slice(), phi.as_slice()).abs())
            .fold(0.0_f64, f64::max);
        max_recomputed = max_recomputed.max(residual);
        if let Some(r) = record.orth_residual {
            max_recorded = max_recorded.max(r);
        }
    }
    let tol = run.config.orth_tol;
    OrthogonalityCheck {
        tol,
        max_recomputed,
        max_recorded,
        pass: max_recomputed <= tol && max_recorded <= tol,
    }
}

fn hull_check<R: Rng>(dictionary: &Dictionary, n_samples: usize, rng: &mut R) -> HullCheck {
    let dim = dictionary.dim();
    let n = dictionary.len();
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..n_samples {
        let functional =
            Point::from_vec_unchecked((0..dim).map(|_| standard_normal(rng)).collect());
        let best_signed = dictionary
            .atoms()
            .iter()
            .map(|g| dot(functional.as_slice(), g.as_slice()).abs())
            .fold(0.0_f64, f64::max);

        // Convex combination of random signed atoms with simplex weights.
        let count = rng.random_range(1..=n.min(8));
        let mut weights: Vec<f64> = (0..count).map(|_| -rng.random::<f64>().ln()).collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        let mut combined = 0.0;
        for &w in &weights {
            let idx = rng.random_range(0..n);
            let sign = if rng.random_range(0..2) == 0 {
                1.0
            } else {
                -1.0
            };
            combined += w * sign * dot(functional.as_slice(), dictionary.atom(idx).as_slice());
        }
        max_excess = max_excess.max(combined - best_signed);
    }
    HullCheck {
        samples: n_samples,
        max_excess,
        pass: max_excess <= HULL_SLACK,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub compared: usize,
    /// Largest amount by which the energy rule's selected line value
    /// exceeded the gradient rule's at the same state.
    pub max_excess: f64,
    pub violations: usize,
    pub pass: bool,
}

/// At every recorded state of an energy-rule run, the selected atom's
/// line-minimized value can be no worse than the value along the atom the
/// exact gradient rule would pick at that state.
pub fn egca_dominance_check(
    objective: &Objective,
    dictionary: &Dictionary,
    run: &GreedyRun,
    line_tol: f64,
) -> Result<DominanceCheck> {
    use crate::greedy::{line_minimize, select_atom_wcga, Selection};

    let dim = objective.dim();
    let mut compared = 0usize;
    let mut violations = 0usize;
    let mut max_excess = f64::NEG_INFINITY;
    let mut signed: Vec<Point> = vec![];
    let mut state = Point::zeros(dim);
    for record in &run.records {
        if record.m == 0 {
            continue;
        }
        let Some(egca_value) = record.line_value else {
            continue;
        };
        if let Selection::Atom(choice) = select_atom_wcga(objective, &state, dictionary, 1.0)? {
            let atom = dictionary.signed_atom(choice.index, choice.sign);
            let wcga_value = line_minimize(objective, &state, &atom, line_tol)?.value;
            let excess = egca_value - wcga_value;
            max_excess = max_excess.max(excess);
            compared += 1;
            if excess > HULL_SLACK {
                violations += 1;
            }
        }
        let (index, sign) = (record.atom_index.unwrap(), record.sign.unwrap());
        signed.push(dictionary.signed_atom(index, sign));
        state = Point::combination(&signed, &record.coefficients, dim);
    }
    Ok(DominanceCheck {
        compared,
        max_excess,
        violations,
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::canonical_dictionary;
    use crate::greedy::{run_greedy, SolverConfig, Variant};
    use crate::objective::{LinearOperator, QuadraticModel};
    use crate::space::NormSpec;

    fn identity_quadratic(b: Vec<f64>) -> Objective {
        QuadraticModel::new(LinearOperator::Identity, Point::new(b).unwrap())
            .unwrap()
            .into_objective("||x - b||^2")
            .with_smoothness(1.0, 2.0)
    }

    #[test]
    fn identity_quadratic_sandwich_has_factor_two_headroom() {
        // The expansion term is exactly u^2 ||y||^2 and the envelope is
        // 2 u^2 ||y||^2.
        let obj = identity_quadratic(vec![1.0, -0.5, 2.0]);
        let x = Point::new(vec![0.5, 0.0, 1.0]).unwrap();
        let y = Point::new(vec![0.6, -0.8, 0.0]).unwrap();
        for u in [1e-3, 0.1, 0.7] {
            let (lower, upper) = sandwich_slacks(&obj, &x, &y, u, 1.0, 2.0, NormSpec::L2);
            let middle = u * u; // ||y|| = 1
            assert!((lower - middle).abs() < 1e-9);
            assert!((upper - middle).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_step_collapses_the_sandwich() {
        let obj = identity_quadratic(vec![1.0, 2.0]);
        let x = Point::new(vec![0.1, 0.3]).unwrap();
        let y = Point::new(vec![1.0, 0.0]).unwrap();
        let (lower, upper) = sandwich_slacks(&obj, &x, &y, 0.0, 1.0, 2.0, NormSpec::L2);
        assert_eq!(lower, 0.0);
        assert_eq!(upper, 0.0);
    }

    #[test]
    fn hull_never_beats_best_signed_atom() {
        // max pairing of F = (6, 2, -4) with signed canonical atoms is 6;
        // convex combinations attain their max at a vertex.
        let dict = canonical_dictionary(3, NormSpec::L2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let check = hull_check(&dict, 2_000, &mut rng);
        assert!(check.pass, "excess {}", check.max_excess);
    }

    #[test]
    fn dominance_holds_on_an_energy_rule_run() {
        let obj = identity_quadratic(vec![1.5, -0.5, 0.75, 0.0]);
        let f0 = Point::new(vec![1.5, -0.5, 0.75, 0.0]).unwrap();
        let dict = canonical_dictionary(4, NormSpec::L2).unwrap();
        let run = run_greedy(
            Variant::Egca,
            &obj,
            &dict,
            &SolverConfig::default(),
            Some(&f0),
        )
        .unwrap();
        let check = egca_dominance_check(&obj, &dict, &run, 1e-12).unwrap();
        assert!(check.compared >= 3);
        assert!(check.pass, "excess {}", check.max_excess);
    }

    #[test]
    fn full_report_on_a_recorded_run() {
        let obj = identity_quadratic(vec![3.0, 1.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let f0 = Point::new(vec![3.0, 1.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let dict = canonical_dictionary(8, NormSpec::L2).unwrap();
        let cfg = SolverConfig {
            stop_gap: Some(1e-10),
            ..SolverConfig::default()
        };
        let run = run_greedy(Variant::Wcga, &obj, &dict, &cfg, Some(&f0)).unwrap();
        let report = verify_certificates(&obj, Some(&run), &dict, 1.0, 2.0, 500, 9).unwrap();
        assert!(report.pass);
        let orth = report.orthogonality.unwrap();
        assert!(orth.max_recomputed <= orth.tol);
        assert_eq!(report.sandwich.violations, 0);
        assert!(report.sandwich.min_lower_slack >= -CERTIFICATE_SLACK);
        assert!(report.sandwich.min_upper_slack >= -CERTIFICATE_SLACK);
    }
}

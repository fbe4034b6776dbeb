//! Empirical restricted strong convexity.
//!
//! Samples sparse combinations of dictionary atoms at several radii and
//! takes the worst ratio (E(f) - E(f0)) / ||f - f0||^2. The minimum over a
//! sample is an upper estimate of the true restricted constant, so bound
//! checks should prefer analytic constants and treat this as a cross-check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::sampling::{random_support, standard_normal};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::space::{norm_of, Point};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RscEstimate {
    pub beta: f64,
    pub sparsity: usize,
    pub samples_used: usize,
}

const RADII: [f64; 3] = [0.25, 1.0, 4.0];
const DEGENERATE_DISTANCE: f64 = 1e-12;

pub fn estimate_rsc(
    objective: &Objective,
    dictionary: &Dictionary,
    f0: &Point,
    sparsity: usize,
    n_samples: usize,
    seed: u64,
) -> Result<RscEstimate> {
    if f0.dim() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            got: f0.dim(),
        });
    }
    let e0 = objective.value(f0);
    let norm = dictionary.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut used = 0usize;

    let consider = |f: &Point, best: &mut f64, used: &mut usize| {
        let diff = f.sub(f0);
        let dist = norm_of(&diff, norm);
        if dist < DEGENERATE_DISTANCE {
            return;
        }
        let ratio = (objective.value(f) - e0) / (dist * dist);
        *best = best.min(ratio.max(0.0));
        *used += 1;
    };

    if sparsity == 0 {
        // The only 0-sparse element is the origin.
        consider(&Point::zeros(objective.dim()), &mut best, &mut used);
    } else {
        let scale = 1.0 + norm_of(f0, norm);
        for _ in 0..n_samples {
            let support =
                random_support(&mut rng, dictionary.len(), sparsity.min(dictionary.len()));
            let coeffs: Vec<f64> = support.iter().map(|_| standard_normal(&mut rng)).collect();
            for radius in RADII {
                let scaled: Vec<f64> = coeffs.iter().map(|c| c * radius * scale).collect();
                let atoms: Vec<Point> = support
                    .iter()
                    .map(|&i| dictionary.atom(i).clone())
                    .collect();
                let f = Point::combination(&atoms, &scaled, objective.dim());
                consider(&f, &mut best, &mut used);
            }
        }
    }

    if used == 0 {
        return Err(Error::NoUsableSamples);
    }
    Ok(RscEstimate {
        beta: best,
        sparsity,
        samples_used: used,
    })
}

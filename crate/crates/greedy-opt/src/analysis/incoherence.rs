//! The l1 incoherence constant of a dictionary.
//!
//! For nested index sets A inside B with |A| <= K and |B| <= S, the
//! constant is the largest value of
//!
//!   sum_{i in A} |c_i|  /  ( |A|^r  ||sum_{i in B} c_i g_i|| )
//!
//! over nonzero coefficients. Growing B only adds freedom, so only
//! |B| = min(S, n) matters. In exact mode (l2 norm) the inner supremum per
//! sign pattern s on A is sqrt(s^T G_B^{-1} s), the support value of the
//! Gram ellipsoid, and the search enumerates every B, A, and sign pattern.
//! Monte Carlo mode samples (B, A, c) and reports a lower bound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::sampling::{random_support, standard_normal};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{binomial, cholesky, Combinations};
use crate::space::{norm_of, NormSpec, Point};
use crate::threads::thread_cap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncoherenceMode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncoherenceProfile {
    pub v: f64,
    pub r: f64,
    pub k: usize,
    pub s: usize,
    /// Exact enumeration certifies the value; Monte Carlo only bounds it
    /// from below.
    pub certified_exact: bool,
    /// Subsets enumerated (exact) or samples drawn (Monte Carlo).
    pub work: u64,
}

/// Enumeration is capped at this subset size.
pub const EXACT_S_CAP: usize = 12;
const GRAM_REL_TOL: f64 = 1e-12;

pub fn incoherence_constant(
    dictionary: &Dictionary,
    k: usize,
    s: usize,
    r: f64,
    mode: IncoherenceMode,
    budget: u64,
    seed: u64,
) -> Result<IncoherenceProfile> {
    if k == 0 || k > s {
        return Err(Error::Problem(format!(
            "incoherence needs 1 <= K <= S, got K = {k}, S = {s}"
        )));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Problem(format!(
            "exponent r = {r} is outside [0, 1]"
        )));
    }
    let n = dictionary.len();
    let s_eff = s.min(n);
    let k_eff = k.min(s_eff);
    match mode {
        IncoherenceMode::Exact => exact(dictionary, k_eff, s_eff, r, budget),
        IncoherenceMode::MonteCarlo => monte_carlo(dictionary, k_eff, s_eff, r, budget, seed),
    }
}

fn exact(
    dictionary: &Dictionary,
    k: usize,
    s: usize,
    r: f64,
    budget: u64,
) -> Result<IncoherenceProfile> {
    if dictionary.norm() != NormSpec::L2 {
        return Err(Error::EnumerationNeedsL2);
    }
    if s > EXACT_S_CAP {
        return Err(Error::EnumerationTooLarge(s));
    }
    let n = dictionary.len();
    let subsets = binomial(n, s);
    if subsets > budget as u128 {
        return Err(Error::EnumerationBudget {
            subsets,
            budget: budget as u128,
        });
    }
    let gram = dictionary.gram();

    let threads = thread_cap().min(subsets.max(1) as usize);
    let chunk = subsets.div_ceil(threads as u128);
    let results: Vec<Result<f64>> = std::thread::scope(|scope| {
        let gram = &gram;
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let start = chunk * t as u128;
                let end = (start + chunk).min(subsets);
                scope.spawn(move || scan_range(gram, n, k, s, r, start, end))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut best = 0.0_f64;
    for res in results {
        best = best.max(res?);
    }
    Ok(IncoherenceProfile {
        v: best,
        r,
        k,
        s,
        certified_exact: true,
        work: subsets as u64,
    })
}

/// Largest ellipsoid support value over the B subsets with lexicographic
/// ranks in [start, end).
fn scan_range(
    gram: &[f64],
    n: usize,
    k: usize,
    s: usize,
    r: f64,
    start: u128,
    end: u128,
) -> Result<f64> {
    if start >= end {
        return Ok(0.0);
    }
    let mut combo = Combinations::unrank(n, s, start).expect("rank checked against budget");
    let mut best = 0.0_f64;
    let mut gram_b = vec![0.0; s * s];
    let mut rank = start;
    loop {
        let b = &combo.current;
        for i in 0..s {
            for j in 0..s {
                gram_b[i * s + j] = gram[b[i] * n + b[j]];
            }
        }
        let factor = cholesky(&gram_b, s, GRAM_REL_TOL)
            .ok_or_else(|| Error::SingularGram { indices: b.clone() })?;
        let w = factor.inverse();
        best = best.max(scan_subsets(&w, s, k, r));

        rank += 1;
        if rank >= end || !combo.advance() {
            break;
        }
    }
    Ok(best)
}

/// max over A (|A| <= k) and sign patterns of sqrt(s^T W s) / |A|^r for the
/// inverse Gram W.
fn scan_subsets(w: &[f64], s: usize, k: usize, r: f64) -> f64 {
    let mut best = 0.0_f64;
    let mut signs = vec![1.0_f64; k];
    for a in 1..=k {
        let scale = (a as f64).powf(-r);
        let mut subset = match Combinations::first(s, a) {
            Some(c) => c,
            None => break,
        };
        loop {
            // First sign fixed positive; s and -s give the same value.
            for bits in 0..(1u32 << (a - 1)) {
                signs[0] = 1.0;
                for i in 1..a {
                    signs[i] = if bits >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 };
                }
                let mut quad = 0.0;
                for i in 0..a {
                    let wi = subset.current[i];
                    for j in 0..a {
                        quad += signs[i] * signs[j] * w[wi * s + subset.current[j]];
                    }
                }
                best = best.max(quad.max(0.0).sqrt() * scale);
            }
            if !subset.advance() {
                break;
            }
        }
    }
    best
}

fn monte_carlo(
    dictionary: &Dictionary,
    k: usize,
    s: usize,
    r: f64,
    budget: u64,
    seed: u64,
) -> Result<IncoherenceProfile> {
    let n = dictionary.len();
    let dim = dictionary.dim();
    let norm = dictionary.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..budget {
        let b = random_support(&mut rng, n, s);
        let coeffs: Vec<f64> = (0..s).map(|_| standard_normal(&mut rng)).collect();
        let a_size = rng.random_range(1..=k);
        let a_positions = random_support(&mut rng, s, a_size);

        let atoms: Vec<Point> = b.iter().map(|&i| dictionary.atom(i).clone()).collect();
        let point = Point::combination(&atoms, &coeffs, dim);
        let den = norm_of(&point, norm);
        let num: f64 = a_positions.iter().map(|&p| coeffs[p].abs()).sum();
        if den <= 1e-14 * (1.0 + num) {
            return Err(Error::SingularGram { indices: b });
        }
        best = best.max(num / ((a_size as f64).powf(r) * den));
    }
    Ok(IncoherenceProfile {
        v: best,
        r,
        k,
        s,
        certified_exact: false,
        work: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::canonical_dictionary;
    use rand::Rng;

    #[test]
    fn orthonormal_dictionary_gives_v_one_at_half() {
        // Gram = identity: per A the value is sqrt(|A|) / |A|^{1/2} = 1.
        let dict = canonical_dictionary(6, NormSpec::L2).unwrap();
        let p =
            incoherence_constant(&dict, 3, 5, 0.5, IncoherenceMode::Exact, 1_000_000, 0).unwrap();
        assert!(p.certified_exact);
        assert!((p.v - 1.0).abs() < 1e-12, "V = {}", p.v);
    }

    #[test]
    fn orthonormal_dictionary_r_zero_k_four_gives_two() {
        let dict = canonical_dictionary(6, NormSpec::L2).unwrap();
        let p =
            incoherence_constant(&dict, 4, 5, 0.0, IncoherenceMode::Exact, 1_000_000, 0).unwrap();
        assert!((p.v - 2.0).abs() < 1e-12, "V = {}", p.v);
    }

    #[test]
    fn duplicate_atoms_make_the_constant_infinite() {
        let e1 = Point::new(vec![1.0, 0.0]).unwrap();
        let dict = Dictionary::new(
            vec![e1.clone(), e1, Point::new(vec![0.0, 1.0]).unwrap()],
            NormSpec::L2,
        )
        .unwrap();
        let err = incoherence_constant(&dict, 1, 2, 0.5, IncoherenceMode::Exact, 1_000_000, 0)
            .unwrap_err();
        assert!(matches!(err, Error::SingularGram { .. }));
    }

    #[test]
    fn monte_carlo_never_exceeds_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..5 {
            let dim = 5;
            let n = 8;
            let atoms: Vec<Point> = (0..n)
                .map(|_| {
                    Point::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
                })
                .collect();
            let dict = Dictionary::normalized(atoms, NormSpec::L2).unwrap();
            let exact =
                incoherence_constant(&dict, 2, 4, 0.5, IncoherenceMode::Exact, 1_000_000, 0)
                    .unwrap();
            let mc =
                incoherence_constant(&dict, 2, 4, 0.5, IncoherenceMode::MonteCarlo, 2_000, trial)
                    .unwrap();
            assert!(!mc.certified_exact);
            assert!(
                mc.v <= exact.v * (1.0 + 1e-9),
                "mc {} > exact {}",
                mc.v,
                exact.v
            );
        }
    }

    #[test]
    fn guards_reject_oversized_requests() {
        let dict = canonical_dictionary(20, NormSpec::L2).unwrap();
        assert!(matches!(
            incoherence_constant(&dict, 3, 13, 0.5, IncoherenceMode::Exact, u64::MAX, 0),
            Err(Error::EnumerationTooLarge(13))
        ));
        assert!(matches!(
            incoherence_constant(&dict, 3, 10, 0.5, IncoherenceMode::Exact, 10, 0),
            Err(Error::EnumerationBudget { .. })
        ));
        let l1 = canonical_dictionary(4, NormSpec::L1).unwrap();
        assert!(matches!(
            incoherence_constant(&l1, 1, 2, 0.5, IncoherenceMode::Exact, 100, 0),
            Err(Error::EnumerationNeedsL2)
        ));
        assert!(incoherence_constant(&dict, 0, 4, 0.5, IncoherenceMode::Exact, 100, 0).is_err());
    }
}

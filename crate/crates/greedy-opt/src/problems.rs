//! Reproducible synthetic problems: objectives with analytic constants
//! where they exist, dictionaries, and planted sparse references.
//!
//! Generators are pure functions of (spec, seed). The dictionary draws
//! from its own seed stream so a family of instances can share one
//! dictionary while re-planting per seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::sampling::{random_support, standard_normal};
use crate::dictionary::{canonical_dictionary, Dictionary};
use crate::error::{Error, Result};
use crate::linalg::{
    binomial, cholesky, dot, orthonormalize, power_max_eig, sym_eigenvalues, Combinations, Matrix,
};
use crate::objective::{LinearOperator, Objective, QuadraticModel};
use crate::space::{norm_of, NormSpec, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ObjectiveKind,
    pub dimension: usize,
    pub dictionary: DictionaryKind,
    pub planted: PlantedKind,
    pub norm: NormSpec,
    pub seed: u64,
    /// Separate stream for the dictionary, so instance families can share
    /// one dictionary across planting seeds.
    pub dict_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum ObjectiveKind {
    /// E(x) = ||x - b||_2^2 with b assembled from the planted reference.
    IdentityQuadratic,
    /// E(x) = ||A x - b||_2^2 with a seeded Gaussian A.
    GeneralQuadratic { rows: usize },
    /// Ridge-regularized logistic loss over seeded Gaussian data.
    RegularizedLogistic { rows: usize, delta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum DictionaryKind {
    Canonical,
    GaussianNormalized { atoms: usize },
    TwoOrthoUnion { second: SecondBasis },
    FromFile { path: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondBasis {
    /// Sylvester construction; dimension must be a power of two.
    Hadamard,
    /// Seeded random orthonormal basis.
    Rotation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum PlantedKind {
    None,
    /// K atoms with magnitudes in [0.5, 1.5) and random signs.
    Sparse {
        k: usize,
    },
    /// K main atoms plus a dense coordinate tail of the given l2 norm
    /// (canonical dictionary only).
    SparseWithTail {
        k: usize,
        tail_norm: f64,
    },
    /// Dense coefficients proportional to 1/i^2, scaled to unit l1 mass
    /// (canonical dictionary only), so the reference lies in the convex
    /// hull of the signed atoms.
    InverseSquare,
}

/// A reference with a known representation over dictionary atoms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Planted {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub point: Point,
    /// Sparsity of the intended sparse stand-in (the support size for
    /// exactly sparse plants, the head size when a tail is present).
    pub main_k: usize,
}

/// Constants that hold by construction for a generated problem.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AnalyticConstants {
    pub gamma: Option<f64>,
    pub q: Option<f64>,
    /// Valid at every sparsity level (a global lower bound for the ridge
    /// objectives, the exact constant for the identity quadratic).
    pub beta: Option<f64>,
    /// (V, r) known analytically for this dictionary under l2.
    pub dictionary_v: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct ProblemBundle {
    pub spec: ProblemSpec,
    pub objective: Objective,
    pub dictionary: Dictionary,
    pub reference: Option<Point>,
    pub planted: Option<Planted>,
    pub constants: AnalyticConstants,
}

fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const DICT_SALT: u64 = 1;
const PLANT_SALT: u64 = 2;
const OBJ_SALT: u64 = 3;

pub fn make_problem(spec: &ProblemSpec) -> Result<ProblemBundle> {
    if spec.dimension == 0 {
        return Err(Error::Problem("dimension must be positive".into()));
    }
    let dict_seed = spec.dict_seed.unwrap_or(spec.seed);
    let dictionary = build_dictionary(spec, &mut stream(dict_seed, DICT_SALT))?;
    let planted = build_planted(spec, &dictionary, &mut stream(spec.seed, PLANT_SALT))?;
    let mut obj_rng = stream(spec.seed, OBJ_SALT);

    let dictionary_v = match (&spec.dictionary, spec.norm) {
        // Orthonormal atoms: Cauchy-Schwarz gives V = 1 at r = 1/2.
        (DictionaryKind::Canonical, NormSpec::L2) => Some((1.0, 0.5)),
        _ => None,
    };

    let (objective, reference, constants) = match &spec.kind {
        ObjectiveKind::IdentityQuadratic => {
            let b = match &planted {
                Some(p) => p.point.clone(),
                None => random_point(&mut obj_rng, spec.dimension),
            };
            let objective = QuadraticModel::new(LinearOperator::Identity, b.clone())?
                .into_objective("identity quadratic ||x - b||^2")
                .with_smoothness(1.0, 2.0);
            let constants = AnalyticConstants {
                gamma: Some(1.0),
                q: Some(2.0),
                beta: Some(1.0),
                dictionary_v,
            };
            (objective, Some(b), constants)
        }
        ObjectiveKind::GeneralQuadratic { rows } => {
            if *rows == 0 {
                return Err(Error::Problem("general quadratic needs rows >= 1".into()));
            }
            let a = gaussian_matrix(&mut obj_rng, *rows, spec.dimension);
            let (b, reference) = match &planted {
                Some(p) => {
                    let ax = a.matvec(p.point.as_slice());
                    (Point::new(ax)?, Some(p.point.clone()))
                }
                None => {
                    let b = random_point(&mut obj_rng, *rows);
                    let reference = least_squares_solution(&a, &b)?;
                    (b, Some(reference))
                }
            };
            let gamma = spectral_gamma(&a);
            let objective = QuadraticModel::new(LinearOperator::Dense(a), b)?
                .into_objective("general quadratic ||Ax - b||^2")
                .with_smoothness(gamma, 2.0);
            let constants = AnalyticConstants {
                gamma: Some(gamma),
                q: Some(2.0),
                beta: None,
                dictionary_v,
            };
            (objective, reference, constants)
        }
        ObjectiveKind::RegularizedLogistic { rows, delta } => {
            if !matches!(spec.planted, PlantedKind::None) {
                return Err(Error::Problem(
                    "regularized logistic does not take a planted reference".into(),
                ));
            }
            if !(*delta > 0.0) {
                return Err(Error::Problem(
                    "regularized logistic needs delta > 0 for a bounded level set".into(),
                ));
            }
            let data = gaussian_matrix(&mut obj_rng, *rows, spec.dimension);
            let labels: Vec<f64> = (0..*rows)
                .map(|_| {
                    if obj_rng.random_range(0..2) == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let gamma = logistic_gamma(&data, *delta);
            let objective = logistic_objective(data.clone(), labels.clone(), *delta)?
                .with_smoothness(gamma, 2.0);
            let delta_owned = *delta;
            let reference = newton_minimize(
                &objective,
                |x| logistic_hessian(&data, &labels, delta_owned, x),
                1e-12,
                200,
            )?;
            let constants = AnalyticConstants {
                gamma: Some(gamma),
                q: Some(2.0),
                // The ridge term alone already gives this much curvature.
                beta: Some(*delta),
                dictionary_v,
            };
            (objective, Some(reference), constants)
        }
    };

    if dictionary.dim() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            got: dictionary.dim(),
        });
    }
    Ok(ProblemBundle {
        spec: spec.clone(),
        objective,
        dictionary,
        reference,
        planted,
        constants,
    })
}

fn build_dictionary(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> Result<Dictionary> {
    let d = spec.dimension;
    match &spec.dictionary {
        DictionaryKind::Canonical => canonical_dictionary(d, spec.norm),
        DictionaryKind::GaussianNormalized { atoms } => {
            if *atoms == 0 {
                return Err(Error::EmptyDictionary);
            }
            let points: Vec<Point> = (0..*atoms).map(|_| random_point(rng, d)).collect();
            Dictionary::normalized(points, spec.norm)
        }
        DictionaryKind::TwoOrthoUnion { second } => {
            let mut atoms: Vec<Point> = (0..d)
                .map(|i| {
                    let mut v = vec![0.0; d];
                    v[i] = 1.0;
                    Point::from_vec_unchecked(v)
                })
                .collect();
            let mut labels: Vec<String> = (0..d).map(|i| format!("e{}", i + 1)).collect();
            let rows = match second {
                SecondBasis::Hadamard => hadamard_rows(d)?,
                SecondBasis::Rotation => rotation_rows(rng, d)?,
            };
            for (j, row) in rows.into_iter().enumerate() {
                atoms.push(Point::new(row)?);
                labels.push(format!("h{}", j + 1));
            }
            Dictionary::normalized(atoms, spec.norm)?.with_labels(labels)
        }
        DictionaryKind::FromFile { path } => {
            let text = std::fs::read_to_string(path)?;
            let dict = Dictionary::from_matrix_str(&text, spec.norm)?;
            if dict.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: dict.dim(),
                });
            }
            Ok(dict)
        }
    }
}

fn build_planted(
    spec: &ProblemSpec,
    dictionary: &Dictionary,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Planted>> {
    let d = spec.dimension;
    let n = dictionary.len();
    match &spec.planted {
        PlantedKind::None => Ok(None),
        PlantedKind::Sparse { k } => {
            if *k == 0 || *k > n {
                return Err(Error::Problem(format!(
                    "planted sparsity k = {k} must lie in 1..={n}"
                )));
            }
            let support = random_support(rng, n, *k);
            let values: Vec<f64> = (0..*k).map(|_| signed_magnitude(rng)).collect();
            let atoms: Vec<Point> = support
                .iter()
                .map(|&i| dictionary.atom(i).clone())
                .collect();
            let point = Point::combination(&atoms, &values, d);
            Ok(Some(Planted {
                support,
                values,
                point,
                main_k: *k,
            }))
        }
        PlantedKind::SparseWithTail { k, tail_norm } => {
            require_canonical(spec, "sparse_with_tail")?;
            if *k == 0 || *k >= d {
                return Err(Error::Problem(format!(
                    "sparse_with_tail needs 1 <= k < dimension, got k = {k}"
                )));
            }
            if !(*tail_norm >= 0.0) {
                return Err(Error::Problem("tail_norm must be nonnegative".into()));
            }
            let head = random_support(rng, d, *k);
            let mut coords = vec![0.0; d];
            for &i in &head {
                coords[i] = signed_magnitude(rng);
            }
            let mut tail: Vec<(usize, f64)> = (0..d)
                .filter(|i| !head.contains(i))
                .map(|i| (i, standard_normal(rng)))
                .collect();
            let tail_len = tail.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
            if tail_len > 0.0 && *tail_norm > 0.0 {
                for (_, v) in tail.iter_mut() {
                    *v *= tail_norm / tail_len;
                }
                for &(i, v) in &tail {
                    coords[i] = v;
                }
            }
            let support: Vec<usize> = (0..d).filter(|&i| coords[i] != 0.0).collect();
            let values: Vec<f64> = support.iter().map(|&i| coords[i]).collect();
            Ok(Some(Planted {
                support,
                values,
                point: Point::new(coords)?,
                main_k: *k,
            }))
        }
        PlantedKind::InverseSquare => {
            require_canonical(spec, "inverse_square")?;
            let raw: Vec<f64> = (0..d).map(|i| 1.0 / ((i + 1) as f64).powi(2)).collect();
            let mass: f64 = raw.iter().sum();
            let values: Vec<f64> = raw.into_iter().map(|v| v / mass).collect();
            let support: Vec<usize> = (0..d).collect();
            let point = Point::new(values.clone())?;
            Ok(Some(Planted {
                support,
                values,
                point,
                main_k: d,
            }))
        }
    }
}

fn require_canonical(spec: &ProblemSpec, what: &str) -> Result<()> {
    if spec.dictionary != DictionaryKind::Canonical {
        return Err(Error::Problem(format!(
            "{what} plants coordinates and needs the canonical dictionary"
        )));
    }
    Ok(())
}

fn signed_magnitude(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.random_range(0.5..1.5);
    if rng.random_range(0..2) == 0 {
        mag
    } else {
        -mag
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    Point::from_vec_unchecked((0..dim).map(|_| standard_normal(rng)).collect())
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let scale = 1.0 / (rows as f64).sqrt();
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| scale * standard_normal(rng))
        .collect();
    Matrix::new(rows, cols, data).expect("finite by construction")
}

/// Smoothness scale of ||Ax - b||^2: the top eigenvalue of A^T A, nudged
/// up by 1e-9 to absorb power-iteration slack so the declared constant
/// stays an upper envelope.
fn spectral_gamma(a: &Matrix) -> f64 {
    let top = power_max_eig(|v| a.t_matvec(&a.matvec(v)), a.cols(), 20_000, 1e-15);
    top * (1.0 + 1e-9)
}

fn logistic_gamma(data: &Matrix, delta: f64) -> f64 {
    // The per-sample curvature factor never exceeds 1/4.
    let top = power_max_eig(
        |v| data.t_matvec(&data.matvec(v)),
        data.cols(),
        20_000,
        1e-15,
    );
    top * (1.0 + 1e-9) / 8.0 + delta
}

fn least_squares_solution(a: &Matrix, b: &Point) -> Result<Point> {
    let d = a.cols();
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = 0.0;
            for r in 0..a.rows() {
                s += a.get(r, i) * a.get(r, j);
            }
            gram[i * d + j] = s;
            gram[j * d + i] = s;
        }
    }
    let rhs = a.t_matvec(b.as_slice());
    let factor = cholesky(&gram, d, 1e-13).ok_or_else(|| {
        Error::Problem("design matrix is rank deficient; no unique minimizer".into())
    })?;
    Point::new(factor.solve(&rhs))
}

/// Ridge-regularized logistic loss: sum_i log(1 + exp(-y_i a_i . x)) plus
/// delta ||x||^2. Labels must be +1 or -1.
pub fn logistic_objective(data: Matrix, labels: Vec<f64>, delta: f64) -> Result<Objective> {
    if labels.len() != data.rows() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            got: labels.len(),
        });
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Problem("labels must be +1 or -1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Problem("delta must be positive".into()));
    }
    let dim = data.cols();
    let value_data = data.clone();
    let value_labels = labels.clone();
    let value = move |x: &Point| {
        let mut total = delta * dot(x.as_slice(), x.as_slice());
        for (i, &y) in value_labels.iter().enumerate() {
            let z = y * dot(value_data.row(i), x.as_slice());
            total += softplus(-z);
        }
        total
    };
    let grad_data = data;
    let grad_labels = labels;
    let gradient = move |x: &Point| {
        let mut g: Vec<f64> = x.as_slice().iter().map(|xi| 2.0 * delta * xi).collect();
        for (i, &y) in grad_labels.iter().enumerate() {
            let z = y * dot(grad_data.row(i), x.as_slice());
            let w = -y * sigmoid(-z);
            for (gj, aj) in g.iter_mut().zip(grad_data.row(i)) {
                *gj += w * aj;
            }
        }
        Point::from_vec_unchecked(g)
    };
    Ok(Objective::from_oracles(
        dim,
        "regularized logistic",
        value,
        gradient,
    ))
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Hessian of the ridge-regularized logistic loss, flat row-major.
fn logistic_hessian(data: &Matrix, labels: &[f64], delta: f64, x: &Point) -> Vec<f64> {
    let d = data.cols();
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        hess[i * d + i] = 2.0 * delta;
    }
    for (r, &y) in labels.iter().enumerate() {
        let z = y * dot(data.row(r), x.as_slice());
        let s = sigmoid(-z);
        let w = s * (1.0 - s);
        let row = data.row(r);
        for i in 0..d {
            let wi = w * row[i];
            for j in 0..=i {
                hess[i * d + j] += wi * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            hess[j * d + i] = hess[i * d + j];
        }
    }
    hess
}

/// Damped Newton with an analytic Hessian; pins the full-space minimizer
/// of the smooth strongly convex generators. Near the optimum the value
/// change drops below float resolution, so a step is also accepted when
/// it shrinks the gradient norm.
fn newton_minimize<H>(
    objective: &Objective,
    hessian: H,
    grad_tol: f64,
    max_iters: usize,
) -> Result<Point>
where
    H: Fn(&Point) -> Vec<f64>,
{
    let d = objective.dim();
    let mut x = Point::zeros(d);
    for _ in 0..max_iters {
        let grad = objective.gradient(&x);
        let gmax = grad.as_slice().iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gmax <= grad_tol {
            return Ok(x);
        }
        let hess = hessian(&x);
        let step = match cholesky(&hess, d, 1e-13) {
            Some(f) => f.solve(grad.as_slice()),
            None => grad.as_slice().to_vec(),
        };
        let value = objective.value(&x);
        let mut eta = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = Point::from_vec_unchecked(
                x.as_slice()
                    .iter()
                    .zip(&step)
                    .map(|(xi, si)| xi - eta * si)
                    .collect(),
            );
            let trial_grad = objective.gradient(&trial);
            let trial_gmax = trial_grad
                .as_slice()
                .iter()
                .fold(0.0_f64, |m, g| m.max(g.abs()));
            if objective.value(&trial) < value || trial_gmax < gmax {
                x = trial;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let grad = objective.gradient(&x);
    let gmax = grad.as_slice().iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    if gmax <= grad_tol {
        Ok(x)
    } else {
        Err(Error::Problem(format!(
            "full-space minimization stalled at gradient norm {gmax:.3e}"
        )))
    }
}

fn hadamard_rows(d: usize) -> Result<Vec<Vec<f64>>> {
    if !d.is_power_of_two() {
        return Err(Error::Problem(format!(
            "hadamard basis needs a power-of-two dimension, got {d}"
        )));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let rows = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let parity = (i & j).count_ones() & 1;
                    if parity == 0 {
                        scale
                    } else {
                        -scale
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows)
}

fn rotation_rows(rng: &mut ChaCha8Rng, d: usize) -> Result<Vec<Vec<f64>>> {
    for _ in 0..8 {
        let mut rows: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| standard_normal(rng)).collect())
            .collect();
        if orthonormalize(&mut rows).is_some() {
            return Ok(rows);
        }
    }
    Err(Error::Problem(
        "could not draw a nonsingular rotation basis".into(),
    ))
}

/// Smallest restricted Gram eigenvalue of the design over coordinate
/// supports of the given size; the restricted strong convexity constant of
/// ||Ax - b||^2 at that sparsity when the residual at the minimizer
/// vanishes. Interlacing makes only the largest support size matter.
pub fn restricted_gram_beta(a: &Matrix, sparsity: usize, budget: u128) -> Result<f64> {
    let d = a.cols();
    let s = sparsity.min(d).max(1);
    let subsets = binomial(d, s);
    if subsets > budget {
        return Err(Error::EnumerationBudget { subsets, budget });
    }
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut acc = 0.0;
            for r in 0..a.rows() {
                acc += a.get(r, i) * a.get(r, j);
            }
            gram[i * d + j] = acc;
            gram[j * d + i] = acc;
        }
    }
    let mut combo = Combinations::first(d, s).expect("s <= d");
    let mut best = f64::INFINITY;
    let mut block = vec![0.0; s * s];
    loop {
        for i in 0..s {
            for j in 0..s {
                block[i * s + j] = gram[combo.current[i] * d + combo.current[j]];
            }
        }
        best = best.min(sym_eigenvalues(&block, s)[0]);
        if !combo.advance() {
            break;
        }
    }
    Ok(best)
}

/// Truncation result from [`plant_eps_approximant`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseTruncation {
    pub point: Point,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    /// Distance from the original reference under the requested norm.
    pub tail_norm: f64,
}

/// Best K-term coordinate truncation of `f0`, accepted only when the
/// discarded tail fits inside `eps`.
pub fn plant_eps_approximant(
    f0: &Point,
    k: usize,
    eps: f64,
    norm: NormSpec,
) -> Result<SparseTruncation> {
    if !(eps >= 0.0) {
        return Err(Error::Problem("epsilon must be nonnegative".into()));
    }
    let d = f0.dim();
    if k > d {
        return Err(Error::Problem(format!(
            "truncation sparsity k = {k} exceeds dimension {d}"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    // Largest magnitudes first; index order breaks ties deterministically.
    order.sort_by(|&i, &j| {
        f0.get(j)
            .abs()
            .partial_cmp(&f0.get(i).abs())
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut coords = vec![0.0; d];
    let mut support = Vec::new();
    let mut values = Vec::new();
    for &i in order.iter().take(k) {
        if f0.get(i) != 0.0 {
            coords[i] = f0.get(i);
            support.push(i);
            values.push(f0.get(i));
        }
    }
    let point = Point::new(coords)?;
    let tail_norm = norm_of(&f0.sub(&point), norm);
    if tail_norm > eps {
        return Err(Error::InfeasibleEpsilon {
            eps,
            tail: tail_norm,
        });
    }
    let mut paired: Vec<(usize, f64)> = support.into_iter().zip(values).collect();
    paired.sort_by_key(|&(i, _)| i);
    let (support, values) = paired.into_iter().unzip();
    Ok(SparseTruncation {
        point,
        support,
        values,
        tail_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{default_u_grid, estimate_smoothness};
    use crate::objective::{check_gradient, spot_check_convexity};

    fn spec(
        kind: ObjectiveKind,
        dimension: usize,
        dictionary: DictionaryKind,
        planted: PlantedKind,
        seed: u64,
    ) -> ProblemSpec {
        ProblemSpec {
            kind,
            dimension,
            dictionary,
            planted,
            norm: NormSpec::L2,
            seed,
            dict_seed: None,
        }
    }

    #[test]
    fn identity_quadratic_planted_is_exact_minimizer() {
        let bundle = make_problem(&spec(
            ObjectiveKind::IdentityQuadratic,
            3,
            DictionaryKind::Canonical,
            PlantedKind::Sparse { k: 3 },
            0,
        ))
        .unwrap();
        let f0 = bundle.reference.as_ref().unwrap();
        assert_eq!(bundle.objective.value(f0), 0.0);
        assert_eq!(bundle.constants.gamma, Some(1.0));
        assert_eq!(bundle.constants.beta, Some(1.0));
        let norm2 = dot(f0.as_slice(), f0.as_slice());
        assert!((bundle.objective.value(&Point::zeros(3)) - norm2).abs() < 1e-12);
        assert_eq!(bundle.planted.as_ref().unwrap().support.len(), 3);
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let s = spec(
            ObjectiveKind::GeneralQuadratic { rows: 12 },
            6,
            DictionaryKind::GaussianNormalized { atoms: 10 },
            PlantedKind::Sparse { k: 3 },
            99,
        );
        let a = make_problem(&s).unwrap();
        let b = make_problem(&s).unwrap();
        assert_eq!(a.dictionary.atoms(), b.dictionary.atoms());
        assert_eq!(
            a.reference.as_ref().unwrap().as_slice(),
            b.reference.as_ref().unwrap().as_slice()
        );
        let x = Point::new(vec![0.1, -0.2, 0.3, 0.0, 0.5, -0.6]).unwrap();
        assert_eq!(
            a.objective.value(&x).to_bits(),
            b.objective.value(&x).to_bits()
        );
    }

    #[test]
    fn dict_seed_fixes_the_dictionary_across_plants() {
        let mut s1 = spec(
            ObjectiveKind::IdentityQuadratic,
            6,
            DictionaryKind::TwoOrthoUnion {
                second: SecondBasis::Rotation,
            },
            PlantedKind::Sparse { k: 2 },
            5,
        );
        s1.dict_seed = Some(123);
        let mut s2 = s1.clone();
        s2.seed = 6;
        let a = make_problem(&s1).unwrap();
        let b = make_problem(&s2).unwrap();
        assert_eq!(a.dictionary.atoms(), b.dictionary.atoms());
        assert_ne!(
            a.reference.as_ref().unwrap().as_slice(),
            b.reference.as_ref().unwrap().as_slice()
        );
    }

    #[test]
    fn generated_oracles_pass_convexity_and_gradient_checks() {
        let specs = vec![
            spec(
                ObjectiveKind::IdentityQuadratic,
                5,
                DictionaryKind::Canonical,
                PlantedKind::Sparse { k: 2 },
                1,
            ),
            spec(
                ObjectiveKind::GeneralQuadratic { rows: 8 },
                5,
                DictionaryKind::Canonical,
                PlantedKind::Sparse { k: 2 },
                2,
            ),
            spec(
                ObjectiveKind::RegularizedLogistic {
                    rows: 20,
                    delta: 0.1,
                },
                4,
                DictionaryKind::Canonical,
                PlantedKind::None,
                3,
            ),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in specs {
            let bundle = make_problem(&s).unwrap();
            let probes: Vec<Point> = (0..100)
                .map(|_| random_point(&mut rng, s.dimension).scaled(0.5))
                .collect();
            check_gradient(&bundle.objective, &probes, 1e-5, 1e-6).unwrap();
            let pairs: Vec<(Point, Point)> = (0..50)
                .map(|_| {
                    (
                        random_point(&mut rng, s.dimension),
                        random_point(&mut rng, s.dimension),
                    )
                })
                .collect();
            spot_check_convexity(&bundle.objective, &pairs, 1e-9).unwrap();
        }
    }

    #[test]
    fn declared_gamma_brackets_the_estimate() {
        // The estimator is a lower estimate and the declaration an upper
        // envelope: estimate <= gamma (1 + 1e-6) and estimate >= 0.8 gamma.
        for s in [
            spec(
                ObjectiveKind::IdentityQuadratic,
                6,
                DictionaryKind::Canonical,
                PlantedKind::Sparse { k: 3 },
                11,
            ),
            spec(
                ObjectiveKind::GeneralQuadratic { rows: 10 },
                6,
                DictionaryKind::Canonical,
                PlantedKind::Sparse { k: 3 },
                12,
            ),
            spec(
                ObjectiveKind::RegularizedLogistic {
                    rows: 30,
                    delta: 0.1,
                },
                5,
                DictionaryKind::Canonical,
                PlantedKind::None,
                13,
            ),
        ] {
            let bundle = make_problem(&s).unwrap();
            let analytic = bundle.constants.gamma.unwrap();
            let fit =
                estimate_smoothness(&bundle.objective, NormSpec::L2, &default_u_grid(), 60, 21)
                    .unwrap();
            assert!(
                fit.fitted_gamma <= analytic * (1.0 + 1e-6),
                "{}: estimate {} above analytic {}",
                bundle.objective.description(),
                fit.fitted_gamma,
                analytic
            );
            assert!(
                fit.fitted_gamma >= 0.8 * analytic,
                "{}: estimate {} too far below analytic {}",
                bundle.objective.description(),
                fit.fitted_gamma,
                analytic
            );
        }
    }

    #[test]
    fn restricted_beta_matches_singleton_oracle_and_decreases() {
        let s = spec(
            ObjectiveKind::GeneralQuadratic { rows: 20 },
            8,
            DictionaryKind::Canonical,
            PlantedKind::None,
            42,
        );
        let bundle = make_problem(&s).unwrap();
        let model = bundle.objective.quadratic().unwrap();
        let d = 8;
        let mut cols = Vec::with_capacity(d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            cols.push(model.apply(&e));
        }
        let rows = cols[0].len();
        let mut data = vec![0.0; rows * d];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..rows {
                data[i * d + j] = col[i];
            }
        }
        let a = Matrix::new(rows, d, data).unwrap();

        // Singleton supports are squared column norms.
        let beta1 = restricted_gram_beta(&a, 1, 1_000_000).unwrap();
        let min_col: f64 = cols.iter().map(|c| dot(c, c)).fold(f64::INFINITY, f64::min);
        assert!((beta1 - min_col).abs() < 1e-10);

        let beta3 = restricted_gram_beta(&a, 3, 1_000_000).unwrap();
        let beta6 = restricted_gram_beta(&a, 6, 1_000_000).unwrap();
        assert!(beta3 <= beta1 + 1e-12);
        assert!(beta6 <= beta3 + 1e-12);
        assert!(beta6 > 0.0);
    }

    #[test]
    fn degenerate_logistic_minimizes_at_the_origin() {
        // All-zero rows: the loss is n log 2 plus the ridge, minimized at 0.
        let rows = 6;
        let data = Matrix::zeros(rows, 3);
        let labels = vec![1.0; rows];
        let obj = logistic_objective(data.clone(), labels.clone(), 0.1).unwrap();
        let f0 = newton_minimize(
            &obj,
            |x| logistic_hessian(&data, &labels, 0.1, x),
            1e-12,
            100,
        )
        .unwrap();
        assert!(f0.as_slice().iter().all(|&x| x.abs() < 1e-12));
        let expected = rows as f64 * std::f64::consts::LN_2;
        assert!((obj.value(&f0) - expected).abs() < 1e-12);
    }

    #[test]
    fn logistic_reference_has_tiny_gradient() {
        let s = spec(
            ObjectiveKind::RegularizedLogistic {
                rows: 25,
                delta: 0.1,
            },
            4,
            DictionaryKind::Canonical,
            PlantedKind::None,
            8,
        );
        let bundle = make_problem(&s).unwrap();
        let grad = bundle
            .objective
            .gradient(bundle.reference.as_ref().unwrap());
        let gmax = grad.as_slice().iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        assert!(gmax <= 1e-12, "gradient norm {gmax}");
    }

    #[test]
    fn two_ortho_union_has_two_unit_bases() {
        for second in [SecondBasis::Hadamard, SecondBasis::Rotation] {
            let s = spec(
                ObjectiveKind::IdentityQuadratic,
                8,
                DictionaryKind::TwoOrthoUnion { second },
                PlantedKind::Sparse { k: 2 },
                31,
            );
            let bundle = make_problem(&s).unwrap();
            assert_eq!(bundle.dictionary.len(), 16);
            for atom in bundle.dictionary.atoms() {
                assert!((norm_of(atom, NormSpec::L2) - 1.0).abs() < 1e-12);
            }
            for i in 8..16 {
                for j in 8..i {
                    let ip = dot(
                        bundle.dictionary.atom(i).as_slice(),
                        bundle.dictionary.atom(j).as_slice(),
                    );
                    assert!(ip.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn inverse_square_plant_has_unit_l1_mass() {
        let s = spec(
            ObjectiveKind::IdentityQuadratic,
            16,
            DictionaryKind::Canonical,
            PlantedKind::InverseSquare,
            1,
        );
        let bundle = make_problem(&s).unwrap();
        let p = bundle.planted.unwrap();
        let mass: f64 = p.values.iter().map(|v| v.abs()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(p.values[0] > p.values[1]);
    }

    #[test]
    fn truncation_cases_match_contract() {
        let f0 = Point::new(vec![3.0, 1.0, -2.0, 0.01]).unwrap();
        let t = plant_eps_approximant(&f0, 3, 0.02, NormSpec::L2).unwrap();
        assert_eq!(t.point.as_slice(), &[3.0, 1.0, -2.0, 0.0]);
        assert!((t.tail_norm - 0.01).abs() < 1e-15);
        assert_eq!(t.support, vec![0, 1, 2]);

        let exact = Point::new(vec![0.0, 2.0, 0.0, -1.0]).unwrap();
        let t = plant_eps_approximant(&exact, 2, 0.0, NormSpec::L2).unwrap();
        assert_eq!(t.point, exact);
        assert_eq!(t.tail_norm, 0.0);

        let dense = Point::new(vec![1.0, 0.5, 0.25, 0.125]).unwrap();
        match plant_eps_approximant(&dense, 2, 0.0, NormSpec::L2) {
            Err(Error::InfeasibleEpsilon { tail, .. }) => {
                assert!((tail - (0.25f64 * 0.25 + 0.125 * 0.125).sqrt()).abs() < 1e-15);
            }
            other => panic!("expected infeasible epsilon, got {other:?}"),
        }
    }

    #[test]
    fn sparse_with_tail_plants_the_requested_tail_mass() {
        let s = spec(
            ObjectiveKind::IdentityQuadratic,
            32,
            DictionaryKind::Canonical,
            PlantedKind::SparseWithTail {
                k: 5,
                tail_norm: 0.01,
            },
            77,
        );
        let bundle = make_problem(&s).unwrap();
        let p = bundle.planted.unwrap();
        assert_eq!(p.main_k, 5);
        let trunc = plant_eps_approximant(&p.point, 5, 0.0100000001, NormSpec::L2).unwrap();
        assert!((trunc.tail_norm - 0.01).abs() < 1e-12);
        assert_eq!(trunc.support.len(), 5);
    }
}

//! Points of R^d, the lp norms they are measured in, and the pairing
//! between gradients and directions.
//!
//! Everything downstream works in R^d: a gradient acts on a direction
//! through the coordinate dot product, which is exactly the Frechet
//! derivative action in this setting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// A point (or direction, or gradient) of R^d. Entries are always finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        Ok(Point(coords))
    }

    /// For values already known to be finite (sums and scalings of
    /// validated points).
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|x| x.is_finite()));
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Point {
        Point(self.0.iter().map(|x| a * x).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// self + a * other
    pub fn add_scaled(&self, a: f64, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| x + a * y)
                .collect(),
        )
    }

    /// Sum of `coeffs[j] * atoms[j]`. Dimension comes from the atoms;
    /// an empty list yields the origin of `dim`.
    pub fn combination(atoms: &[Point], coeffs: &[f64], dim: usize) -> Point {
        debug_assert_eq!(atoms.len(), coeffs.len());
        let mut acc = vec![0.0; dim];
        for (atom, &c) in atoms.iter().zip(coeffs) {
            for (a, x) in acc.iter_mut().zip(atom.as_slice()) {
                *a += c * x;
            }
        }
        Point(acc)
    }
}

/// Which lp norm the ambient space carries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    L1,
    L2,
    LInf,
    /// Finite exponent other than 1 or 2.
    Lp(f64),
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidNormExponent(p));
        }
        Ok(if p == 1.0 {
            NormSpec::L1
        } else if p == 2.0 {
            NormSpec::L2
        } else if p.is_infinite() {
            NormSpec::LInf
        } else {
            NormSpec::Lp(p)
        })
    }

    pub fn exponent(&self) -> f64 {
        match self {
            NormSpec::L1 => 1.0,
            NormSpec::L2 => 2.0,
            NormSpec::LInf => f64::INFINITY,
            NormSpec::Lp(p) => *p,
        }
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormSpec::L1 => write!(f, "l1"),
            NormSpec::L2 => write!(f, "l2"),
            NormSpec::LInf => write!(f, "linf"),
            NormSpec::Lp(p) => write!(f, "l{p}"),
        }
    }
}

/// lp norm of a point.
pub fn norm_of(point: &Point, norm: NormSpec) -> f64 {
    let xs = point.as_slice();
    match norm {
        NormSpec::L1 => xs.iter().map(|x| x.abs()).sum(),
        NormSpec::L2 => dot(xs, xs).sqrt(),
        NormSpec::LInf => xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
        NormSpec::Lp(p) => xs
            .iter()
            .map(|x| x.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    }
}

/// Action of the functional `functional` on `atom`: the coordinate dot
/// product. Bilinear, and exactly antisymmetric under atom negation.
pub fn dual_pairing(functional: &Point, atom: &Point) -> Result<f64> {
    if functional.dim() != atom.dim() {
        return Err(Error::DimensionMismatch {
            expected: functional.dim(),
            got: atom.dim(),
        });
    }
    Ok(dot(functional.as_slice(), atom.as_slice()))
}

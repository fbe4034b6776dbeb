//! Finite symmetric dictionaries of unit-bounded atoms.
//!
//! Atoms are stored unsigned; negation is applied at selection time, so
//! closure under sign flips holds by construction.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::space::{norm_of, NormSpec, Point};

/// Atoms may exceed unit norm by at most this much.
pub const ATOM_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    atoms: Vec<Point>,
    norm: NormSpec,
    labels: Option<Vec<String>>,
}

impl Dictionary {
    /// Validates that every atom has norm at most 1 under `norm`.
    pub fn new(atoms: Vec<Point>, norm: NormSpec) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let dim = atoms[0].dim();
        for (index, atom) in atoms.iter().enumerate() {
            if atom.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: atom.dim(),
                });
            }
            let n = norm_of(atom, norm);
            if n > 1.0 + ATOM_NORM_TOL {
                return Err(Error::AtomNormExceedsOne { index, norm: n });
            }
        }
        Ok(Dictionary {
            atoms,
            norm,
            labels: None,
        })
    }

    /// Rescales every atom to unit norm before validating.
    pub fn normalized(atoms: Vec<Point>, norm: NormSpec) -> Result<Self> {
        let mut scaled = Vec::with_capacity(atoms.len());
        for (index, atom) in atoms.into_iter().enumerate() {
            let n = norm_of(&atom, norm);
            if n < 1e-300 {
                return Err(Error::Problem(format!(
                    "atom {index} is zero; cannot normalize"
                )));
            }
            scaled.push(atom.scaled(1.0 / n));
        }
        Dictionary::new(scaled, norm)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.atoms.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    pub fn atom(&self, index: usize) -> &Point {
        &self.atoms[index]
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[index].as_str())
    }

    /// `sign * atoms[index]`; sign must be +1 or -1.
    pub fn signed_atom(&self, index: usize, sign: i8) -> Point {
        debug_assert!(sign == 1 || sign == -1);
        self.atoms[index].scaled(f64::from(sign))
    }

    /// l2 Gram matrix of all atoms, flat row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.atoms.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = crate::linalg::dot(self.atoms[i].as_slice(), self.atoms[j].as_slice());
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }

    /// Plain-text matrix form: one atom per row, whitespace-separated
    /// decimals, 17 significant digits.
    pub fn to_matrix_string(&self) -> String {
        let mut out = String::new();
        for atom in &self.atoms {
            let mut first = true;
            for x in atom.as_slice() {
                if !first {
                    out.push(' ');
                }
                write!(out, "{x:.16e}").unwrap();
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Parse the matrix form produced by [`Dictionary::to_matrix_string`].
    pub fn from_matrix_str(text: &str, norm: NormSpec) -> Result<Self> {
        let mut atoms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let coords: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            let coords = coords.map_err(|e| {
                Error::Problem(format!("dictionary matrix line {}: {e}", lineno + 1))
            })?;
            atoms.push(Point::new(coords)?);
        }
        Dictionary::new(atoms, norm)
    }
}

/// Write a single point in the same row format dictionaries use.
pub fn point_to_row(point: &Point) -> String {
    let mut out = String::new();
    let mut first = true;
    for x in point.as_slice() {
        if !first {
            out.push(' ');
        }
        write!(out, "{x:.16e}").unwrap();
        first = false;
    }
    out
}

/// Parse a point from a whitespace-separated row of decimals.
pub fn point_from_row(row: &str) -> Result<Point> {
    let coords: std::result::Result<Vec<f64>, _> =
        row.split_whitespace().map(str::parse::<f64>).collect();
    Point::new(coords.map_err(|e| Error::Problem(format!("point row: {e}")))?)
}

/// The canonical basis of R^d (unit atoms under every lp norm).
pub fn canonical_dictionary(dim: usize, norm: NormSpec) -> Result<Dictionary> {
    let atoms = (0..dim)
        .map(|i| {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            Point::from_vec_unchecked(v)
        })
        .collect();
    let labels = (0..dim).map(|i| format!("e{}", i + 1)).collect();
    Dictionary::new(atoms, norm)?.with_labels(labels)
}

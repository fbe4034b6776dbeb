//! Small dense linear algebra: enough for Gram systems, restricted
//! eigenvalues, and spectral norms at the dimensions this crate works at.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// y = A^T x
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (yj, aij) in y.iter_mut().zip(self.row(i)) {
                *yj += aij * xi;
            }
        }
        y
    }
}

/// Cholesky factor of a symmetric positive definite matrix, stored as the
/// lower triangle of a flat n x n buffer.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

/// Factor the flat symmetric matrix `a` (row-major, n x n). Returns `None`
/// when a pivot falls below `rel_tol` times the largest diagonal entry,
/// which is how callers detect rank deficiency.
pub fn cholesky(a: &[f64], n: usize, rel_tol: f64) -> Option<Cholesky> {
    debug_assert_eq!(a.len(), n * n);
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0_f64, f64::max);
    let floor = rel_tol * max_diag.max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Some(Cholesky { n, l })
}

impl Cholesky {
    /// Solve A x = rhs via the two triangular solves.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    /// Full symmetric inverse, flat row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }
}

/// Eigenvalues of a flat symmetric matrix by cyclic Jacobi sweeps,
/// returned in ascending order.
pub fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a symmetric positive semidefinite operator given
/// through its action, by plain power iteration from a fixed start vector.
pub fn power_max_eig<F>(apply: F, dim: usize, max_iters: usize, rel_tol: f64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    // Deterministic start with a mild asymmetry so eigenvectors orthogonal
    // to the all-ones vector are still reachable.
    let mut v: Vec<f64> = (0..dim)
        .map(|i| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3)
        .collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let mut w = apply(&v);
        let next = dot(&v, &w);
        let n = norm2(&w);
        if n < 1e-300 {
            return 0.0;
        }
        for x in w.iter_mut() {
            *x /= n;
        }
        let done = (next - lambda).abs() <= rel_tol * next.abs().max(1e-300);
        v = w;
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Orthonormalize the given rows in place by modified Gram-Schmidt.
/// Returns `None` when the rows are numerically dependent.
pub fn orthonormalize(rows: &mut [Vec<f64>]) -> Option<()> {
    for i in 0..rows.len() {
        for j in 0..i {
            let proj = dot(&rows[i], &rows[j]);
            let prev = rows[j].clone();
            for (x, p) in rows[i].iter_mut().zip(&prev) {
                *x -= proj * p;
            }
        }
        let n = norm2(&rows[i]);
        if n < 1e-10 {
            return None;
        }
        for x in rows[i].iter_mut() {
            *x /= n;
        }
    }
    Some(())
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Lexicographic k-combinations of {0, .., n-1}. `advance` steps to the
/// successor and reports whether one exists.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    k: usize,
    pub current: Vec<usize>,
}

impl Combinations {
    pub fn first(n: usize, k: usize) -> Option<Self> {
        if k > n {
            return None;
        }
        Some(Combinations {
            n,
            k,
            current: (0..k).collect(),
        })
    }

    /// Combination with the given lexicographic rank.
    pub fn unrank(n: usize, k: usize, mut rank: u128) -> Option<Self> {
        if k > n || rank >= binomial(n, k) {
            return None;
        }
        let mut current = Vec::with_capacity(k);
        let mut next = 0usize;
        for remaining in (1..=k).rev() {
            let mut v = next;
            loop {
                let count = binomial(n - v - 1, remaining - 1);
                if rank < count {
                    break;
                }
                rank -= count;
                v += 1;
            }
            current.push(v);
            next = v + 1;
        }
        Some(Combinations { n, k, current })
    }

    pub fn advance(&mut self) -> bool {
        if self.k == 0 {
            return false;
        }
        let mut i = self.k;
        while i > 0 {
            i -= 1;
            if self.current[i] < self.n - self.k + i {
                self.current[i] += 1;
                for j in (i + 1)..self.k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = [[4,2],[2,3]], rhs = [2,5] -> x = [-0.5, 2]
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let f = cholesky(&a, 2, 1e-14).unwrap();
        let x = f.solve(&[2.0, 5.0]);
        assert!((x[0] + 0.5).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
        let inv = f.inverse();
        // A^{-1} = 1/8 [[3,-2],[-2,4]]
        assert!((inv[0] - 3.0 / 8.0).abs() < 1e-12);
        assert!((inv[1] + 2.0 / 8.0).abs() < 1e-12);
        assert!((inv[3] - 4.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = vec![1.0, 1.0, 1.0, 1.0];
        assert!(cholesky(&a, 2, 1e-12).is_none());
    }

    #[test]
    fn jacobi_matches_hand_eigenvalues() {
        // [[2,1],[1,2]] -> {1, 3}
        let eig = sym_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let top = power_max_eig(
            |v| vec![a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]],
            2,
            500,
            1e-15,
        );
        assert!((top - 3.0).abs() < 1e-10);
    }

    #[test]
    fn combinations_enumerate_and_unrank_agree() {
        let n = 7;
        let k = 3;
        let mut c = Combinations::first(n, k).unwrap();
        let mut all = vec![c.current.clone()];
        while c.advance() {
            all.push(c.current.clone());
        }
        assert_eq!(all.len() as u128, binomial(n, k));
        for (rank, expect) in all.iter().enumerate() {
            let u = Combinations::unrank(n, k, rank as u128).unwrap();
            assert_eq!(&u.current, expect);
        }
    }

    #[test]
    fn orthonormalize_produces_orthonormal_rows() {
        let mut rows = vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ];
        orthonormalize(&mut rows).unwrap();
        for i in 0..3 {
            assert!((dot(&rows[i], &rows[i]) - 1.0).abs() < 1e-12);
            for j in 0..i {
                assert!(dot(&rows[i], &rows[j]).abs() < 1e-12);
            }
        }
    }
}

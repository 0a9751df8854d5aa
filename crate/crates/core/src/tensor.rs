//! Dense `d x d` matrices for `d <= 3`.
//!
//! Element Jacobians, diffusion tensors and metric tensors all live here. The
//! storage is a fixed 3x3 array; entries outside the leading `dim x dim` block
//! are kept at zero.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMatrix {
    dim: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl SmallMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} not in 1..=3");
        SmallMatrix {
            dim,
            a: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.a[i][i] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be `dim * dim`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.a[i][j] = entries[i * dim + j];
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let dim = columns.len();
        let mut m = Self::zeros(dim);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), dim);
            for i in 0..dim {
                m.a[i][j] = col[i];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.a[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i][..self.dim]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.a[j][i] = self.a[i][j];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] *= s;
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i][i]).sum()
    }

    pub fn determinant(&self) -> f64 {
        let a = &self.a;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Inverse by the adjugate formula. Returns `None` for an exactly singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let a = &self.a;
        let mut inv = Self::zeros(self.dim);
        match self.dim {
            1 => inv.a[0][0] = 1.0 / det,
            2 => {
                inv.a[0][0] = a[1][1] / det;
                inv.a[0][1] = -a[0][1] / det;
                inv.a[1][0] = -a[1][0] / det;
                inv.a[1][1] = a[0][0] / det;
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                        inv.a[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn mul_vec(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let mut y = [0.0; MAX_DIM];
        for i in 0..self.dim {
            y[i] = (0..self.dim).map(|j| self.a[i][j] * x[j]).sum();
        }
        y
    }

    /// Quadratic form `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        (0..self.dim).map(|i| x[i] * ay[i]).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.a[i][j] - self.a[j][i]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    /// Eigenvalues of the symmetric part, ascending.
    ///
    /// Closed form for `d <= 2`; the trigonometric solution of the
    /// characteristic cubic for `d = 3`.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let s = |i: usize, j: usize| 0.5 * (self.a[i][j] + self.a[j][i]);
        match self.dim {
            1 => vec![self.a[0][0]],
            2 => {
                let (p, q, r) = (s(0, 0), s(0, 1), s(1, 1));
                let mean = 0.5 * (p + r);
                let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
                // The smaller root via the product avoids cancellation.
                let hi = mean + rad;
                let lo = if hi != 0.0 && mean > 0.0 {
                    (p * r - q * q) / hi
                } else {
                    mean - rad
                };
                vec![lo, hi]
            }
            _ => {
                let off = s(0, 1).powi(2) + s(0, 2).powi(2) + s(1, 2).powi(2);
                let diag = [s(0, 0), s(1, 1), s(2, 2)];
                if off == 0.0 {
                    let mut e = diag.to_vec();
                    e.sort_by(f64::total_cmp);
                    return e;
                }
                let q = diag.iter().sum::<f64>() / 3.0;
                let p2 = diag.iter().map(|d| (d - q).powi(2)).sum::<f64>() + 2.0 * off;
                let p = (p2 / 6.0).sqrt();
                let mut b = SmallMatrix::zeros(3);
                for i in 0..3 {
                    for j in 0..3 {
                        b.a[i][j] = (s(i, j) - if i == j { q } else { 0.0 }) / p;
                    }
                }
                let r = (0.5 * b.determinant()).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let hi = q + 2.0 * p * phi.cos();
                let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
                let mid = 3.0 * q - hi - lo;
                let mut e = vec![lo, mid, hi];
                e.sort_by(f64::total_cmp);
                e
            }
        }
    }

    /// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
    pub fn symmetric_norm(&self) -> f64 {
        self.symmetric_eigenvalues()
            .into_iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Spectral norm of a general matrix, `sqrt(lambda_max(A^T A))`.
    pub fn spectral_norm(&self) -> f64 {
        let ata = self.transpose() * *self;
        ata.symmetric_eigenvalues()
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
            .sqrt()
    }

    /// True if symmetric (to `1e-14` relative) with positive eigenvalues.
    pub fn is_spd(&self) -> bool {
        let scale = self.max_abs();
        if !(scale.is_finite() && scale > 0.0) || self.max_asymmetry() > 1e-14 * scale {
            return false;
        }
        // Leading principal minors; exact enough for the small sizes used here.
        let mut minor = SmallMatrix::zeros(1);
        for k in 1..=self.dim {
            minor.dim = k;
            for i in 0..k {
                for j in 0..k {
                    minor.a[i][j] = self.a[i][j];
                }
            }
            if minor.determinant() <= 0.0 {
                return false;
            }
        }
        true
    }
}

impl Mul for SmallMatrix {
    type Output = SmallMatrix;

    fn mul(self, rhs: SmallMatrix) -> SmallMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut c = SmallMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                c.a[i][j] = (0..self.dim).map(|k| self.a[i][k] * rhs.a[k][j]).sum();
            }
        }
        c
    }
}

impl Add for SmallMatrix {
    type Output = SmallMatrix;

    fn add(self, rhs: SmallMatrix) -> SmallMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut c = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                c.a[i][j] += rhs.a[i][j];
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip_3d() {
        let m = SmallMatrix::from_row_major(3, &[2.0, 1.0, 0.5, 0.0, 3.0, -1.0, 1.0, 0.0, 4.0]);
        let p = m * m.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p.get(i, j) - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn symmetric_eigenvalues_3d_match_known_spectrum() {
        // Q diag(1, 4, 9) Q^T with a rotation about z.
        let (c, s) = (0.6_f64, 0.8_f64);
        let q = SmallMatrix::from_row_major(3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let m = q * SmallMatrix::diagonal(&[1.0, 4.0, 9.0]) * q.transpose();
        let e = m.symmetric_eigenvalues();
        for (got, want) in e.iter().zip([1.0, 4.0, 9.0]) {
            assert!((got - want).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn spectral_norm_of_nonsymmetric() {
        // [[0, 2], [0, 0]] has singular values 2 and 0.
        let m = SmallMatrix::from_row_major(2, &[0.0, 2.0, 0.0, 0.0]);
        assert!((m.spectral_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spd_detection() {
        assert!(SmallMatrix::diagonal(&[4.0, 9.0]).is_spd());
        assert!(!SmallMatrix::diagonal(&[4.0, -9.0]).is_spd());
        assert!(!SmallMatrix::from_row_major(2, &[1.0, 2.0, 0.0, 1.0]).is_spd());
    }
}

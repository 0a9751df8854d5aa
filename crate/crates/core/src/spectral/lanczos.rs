//! Thick-restart Lanczos with full reorthogonalization.
//!
//! Each cycle extends the basis to `steps` vectors, then restarts from the
//! `keep` largest Ritz vectors plus the residual direction. Keeping several
//! Ritz vectors makes convergence insensitive to a close second eigenvalue,
//! which a single-vector restart handles poorly.

use crate::error::{Error, Result};

/// Dominant Ritz pair after a Lanczos cycle.
#[derive(Clone, Debug)]
pub(crate) struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `||A u - theta u||`, exact in exact arithmetic.
    pub residual: f64,
    /// Next Ritz value below `value`, if any.
    pub second: Option<f64>,
    /// Operator applications used by this cycle.
    pub applications: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Eigen decomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Values ascending; `vectors[i]` belongs to `values[i]`.
fn small_symmetric_eigen(h: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = h.len();
    let mut a: Vec<Vec<f64>> = h.to_vec();
    // Columns of v are eigenvectors.
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| f64::from(i == j)).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = m < 2 || scale == 0.0;
    for _ in 0..100 {
        if converged {
            break;
        }
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            converged = true;
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q].abs() <= 1e-18 * (a[p][p].abs() + a[q][q].abs()) {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations: 100,
            residual: f64::NAN,
        });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..m).map(|k| v[k][i]).collect())
        .collect();
    Ok((values, vectors))
}

pub(crate) struct ThickLanczos<F> {
    op: F,
    steps: usize,
    keep: usize,
    /// Orthonormal basis; the first `locked` vectors are kept Ritz vectors.
    basis: Vec<Vec<f64>>,
    /// Projection `V^T A V` of the current basis.
    h: Vec<Vec<f64>>,
    /// Whether the next basis vector still needs its column of `h`.
    exact: bool,
}

impl<F: FnMut(&[f64], &mut [f64])> ThickLanczos<F> {
    pub(crate) fn new(op: F, start: &[f64], steps: usize, keep: usize) -> Self {
        let n = start.len();
        let steps = steps.clamp(1, n);
        let s = norm(start);
        ThickLanczos {
            op,
            steps,
            keep: keep.min(steps.saturating_sub(1)),
            basis: vec![start.iter().map(|x| x / s).collect()],
            h: Vec::new(),
            exact: false,
        }
    }

    /// Extends the basis to `steps` vectors and restarts.
    pub(crate) fn cycle(&mut self) -> Result<RitzPair> {
        let n = self.basis[0].len();
        let mut w = vec![0.0; n];
        let mut applications = 0;
        let mut last_norm = 0.0;
        // Columns for the vectors that still lack them; the kept Ritz block already has its columns.
        let mut j = self.h.len();
        while j < self.basis.len() {
            (self.op)(&self.basis[j], &mut w);
            applications += 1;
            let mut coeffs = vec![0.0; self.basis.len()];
            // Two passes of classical Gram-Schmidt.
            for _ in 0..2 {
                for (c, v) in coeffs.iter_mut().zip(&self.basis) {
                    let d = dot(v, &w);
                    axpy(-d, v, &mut w);
                    *c += d;
                }
            }
            for row in self.h.iter_mut() {
                row.push(0.0);
            }
            self.h.push(vec![0.0; j + 1]);
            for i in 0..=j {
                self.h[i][j] = coeffs[i];
                self.h[j][i] = coeffs[i];
            }
            let b = norm(&w);
            let scale = self.h[j][j]
                .abs()
                .max(coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())));
            last_norm = b;
            if b <= 1e-13 * scale.max(f64::MIN_POSITIVE) || self.basis.len() == n {
                self.exact = true;
                break;
            }
            if self.basis.len() < self.steps {
                self.basis.push(w.iter().map(|x| x / b).collect());
            } else {
                break;
            }
            j += 1;
        }
        let m = self.h.len();
        let (values, vectors) = small_symmetric_eigen(&self.h)?;
        let residual_of = |y: &[f64]| {
            if self.exact {
                0.0
            } else {
                last_norm * y[m - 1].abs()
            }
        };
        let ritz = |y: &[f64]| {
            let mut u = vec![0.0; n];
            for (v, &c) in self.basis.iter().zip(y) {
                axpy(c, v, &mut u);
            }
            let un = norm(&u);
            u.iter_mut().for_each(|x| *x /= un);
            u
        };
        let top = &vectors[m - 1];
        let pair = RitzPair {
            value: values[m - 1],
            vector: ritz(top),
            residual: residual_of(top),
            second: (m > 1).then(|| values[m - 2]),
            applications,
        };
        if self.exact || pair.residual == 0.0 {
            return Ok(pair);
        }

        // Restart: kept Ritz vectors, then the normalized residual direction.
        let k = self.keep.max(1).min(m);
        let mut basis = Vec::with_capacity(self.steps);
        let mut h = vec![vec![0.0; k + 1]; k + 1];
        for (slot, idx) in (m - k..m).rev().enumerate() {
            let y = &vectors[idx];
            basis.push(if idx == m - 1 {
                pair.vector.clone()
            } else {
                ritz(y)
            });
            h[slot][slot] = values[idx];
            let s = last_norm * y[m - 1];
            h[slot][k] = s;
            h[k][slot] = s;
        }
        basis.push(w.iter().map(|x| x / last_norm).collect());
        // The last column (residual direction) is computed on the next cycle.
        h.pop();
        for row in h.iter_mut() {
            row.pop();
        }
        self.basis = basis;
        self.h = h;
        Ok(pair)
    }
}

/// One Lanczos run of at most `steps` steps from `start`; its largest Ritz pair.
pub(crate) fn lanczos_top(
    op: &mut impl FnMut(&[f64], &mut [f64]),
    start: &[f64],
    steps: usize,
) -> Result<RitzPair> {
    ThickLanczos::new(op, start, steps, 0).cycle()
}

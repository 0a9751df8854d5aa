//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit QL sweep.

use crate::assembly::SparseSymmetricMatrix;
use crate::error::{Error, Result};

/// Largest order the dense oracle accepts.
pub const MAX_DENSE_ORDER: usize = 4000;

const MAX_QL_SWEEPS: usize = 60;

/// All eigenvalues of `m`, ascending.
pub fn dense_eigenvalues(m: &SparseSymmetricMatrix) -> Result<Vec<f64>> {
    let n = m.order();
    if n > MAX_DENSE_ORDER {
        return Err(Error::invalid(format!(
            "dense oracle limited to order {MAX_DENSE_ORDER}, got {n}"
        )));
    }
    let (mut d, mut e) = if m.bandwidth() <= 1 {
        let d = m.diagonal();
        let e = (0..n)
            .map(|i| if i > 0 { m.get(i, i - 1) } else { 0.0 })
            .collect();
        (d, e)
    } else {
        let mut a: Vec<f64> = m.to_dense().into_iter().flatten().collect();
        householder_tridiagonal(&mut a, n)
    };
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues of a dense symmetric matrix given by rows, ascending.
pub fn dense_symmetric_eigenvalues(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    dense_eigenvalues(&SparseSymmetricMatrix::from_dense(rows)?)
}

/// Reduces the row-major symmetric `a` (lower triangle referenced) to
/// tridiagonal form. Returns the diagonal and the subdiagonal, the latter with
/// `e[i]` coupling rows `i - 1` and `i` (`e[0] = 0`). All loops run along rows.
fn householder_tridiagonal(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in (1..n).rev() {
        d[i] = a[i * n + i];
        let l = i - 1;
        let row = &a[i * n..i * n + i];
        let scale: f64 = row.iter().map(|x| x.abs()).sum();
        if l == 0 || scale == 0.0 {
            e[i] = row[l];
            continue;
        }
        let u = &mut u[..i];
        for (uk, &x) in u.iter_mut().zip(row) {
            *uk = x / scale;
        }
        let mut h: f64 = u.iter().map(|x| x * x).sum();
        let f = u[l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        u[l] = f - g;
        // p = A u / h from the lower triangle, row by row; then q = p - (u.p / 2h) u.
        let q = &mut q[..i];
        q.fill(0.0);
        for j in 0..i {
            let aj = &a[j * n..j * n + j];
            let mut dot = a[j * n + j] * u[j];
            for ((x, &uk), qk) in aj.iter().zip(u.iter()).zip(q.iter_mut()) {
                dot += x * uk;
                *qk += x * u[j];
            }
            q[j] += dot;
        }
        q.iter_mut().for_each(|x| *x /= h);
        let up: f64 = u.iter().zip(q.iter()).map(|(x, y)| x * y).sum();
        let kk = up / (h + h);
        for (qj, &uj) in q.iter_mut().zip(u.iter()) {
            *qj -= kk * uj;
        }
        for j in 0..i {
            let (uj, qj) = (u[j], q[j]);
            let aj = &mut a[j * n..=j * n + j];
            for ((x, &uk), &qk) in aj.iter_mut().zip(u.iter()).zip(q.iter()) {
                *x -= uj * qk + qj * uk;
            }
        }
    }
    if n > 0 {
        d[0] = a[0];
    }
    (d, e)
}

/// Implicit QL with Wilkinson shifts on the tridiagonal `(d, e)`, where
/// `e[i]` couples `i - 1` and `i`. On return `d` holds the eigenvalues
/// (unsorted). If `z` is given (row-major `n x n`, initially the identity),
/// column `k` receives the eigenvector of `d[k]`.
pub(crate) fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::Convergence {
                    iterations: sweeps,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenpairs of the symmetric tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta` (`beta[i]` couples `i` and `i + 1`). Eigenvalues come
/// back ascending; `vectors[k]` is the unit eigenvector of `values[k]`.
pub fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = alpha.len();
    if beta.len() + 1 < n {
        return Err(Error::invalid("off-diagonal too short"));
    }
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(&beta[..n - 1]);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    ql_implicit(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| z[i * n + k]).collect())
        .collect();
    Ok((values, vectors))
}

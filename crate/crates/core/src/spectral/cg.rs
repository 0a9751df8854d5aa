use crate::assembly::{DiagonalScaling, SparseSymmetricMatrix};
use crate::error::{Error, Result};

/// Conjugate gradient iterations needed to reduce `||b - A x|| / ||b||` below
/// `tol` from `x = 0`. With a scaling `S` the preconditioner is `S^{-2}`, i.e.
/// CG on `S^{-1} A S^{-1}`; Jacobi scaling gives diagonal preconditioning.
pub fn cg_iteration_count(
    a: &SparseSymmetricMatrix,
    rhs: &[f64],
    tol: f64,
    scaling: Option<&DiagonalScaling>,
) -> Result<usize> {
    let n = a.order();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("tolerance {tol} not in (0, 1)")));
    }
    let inv_sq: Vec<f64> = match scaling {
        Some(s) if s.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.len(),
            })
        }
        Some(s) => s.entries().iter().map(|v| 1.0 / (v * v)).collect(),
        None => vec![1.0; n],
    };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(0);
    }
    let cap = 20 * n + 100;
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_sq).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=cap {
        a.mul_vec(&p, &mut q);
        let step = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            return Ok(it);
        }
        for i in 0..n {
            z[i] = r[i] * inv_sq[i];
        }
        let rz_new = dot(&r, &z);
        let ratio = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + ratio * p[i];
        }
    }
    Err(Error::Convergence {
        iterations: cap,
        residual: dot(&r, &r).sqrt() / b_norm,
    })
}

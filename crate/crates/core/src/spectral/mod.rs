//! Extreme eigenvalues and condition numbers of sparse SPD matrices.
//!
//! `lambda_min` comes from Lanczos on `M^{-1}` and `lambda_max` from Lanczos
//! on `(sigma I - M)^{-1}` with `sigma` just above the spectrum, both applied
//! through a profile Cholesky factorization. The dense QL solver in
//! [`dense`] serves as an independent oracle.

mod cg;
pub mod cholesky;
pub mod dense;
mod lanczos;

pub use cg::cg_iteration_count;
pub use cholesky::{reverse_cuthill_mckee, ProfileCholesky};
pub use dense::{
    dense_eigenvalues, dense_symmetric_eigenvalues, tridiagonal_eigen, MAX_DENSE_ORDER,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::SparseSymmetricMatrix;
use crate::error::{Error, Result};
use lanczos::{lanczos_top, RitzPair, ThickLanczos};

pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Krylov dimension per Lanczos cycle.
const KRYLOV_DIM: usize = 40;
/// Ritz vectors carried across a restart.
const KEEP: usize = 15;
/// Extra safety on the requested tolerance.
const TOL_MARGIN: f64 = 0.25;
/// Operator applications allowed per unknown.
const APPLICATIONS_PER_UNKNOWN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralResult {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    /// Estimated relative error bound of the worse of the two eigenvalues.
    pub rel_tol_achieved: f64,
}

/// Smallest and largest eigenvalue of the SPD matrix `m` to relative accuracy `rel_tol`.
pub fn extreme_eigenvalues(m: &SparseSymmetricMatrix, rel_tol: f64) -> Result<SpectralResult> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-4) {
        return Err(Error::invalid(format!(
            "rel_tol {rel_tol} not in (0, 1e-4]"
        )));
    }
    let n = m.order();
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    let mut budget = Budget {
        used: 0,
        cap: APPLICATIONS_PER_UNKNOWN * n.max(2),
    };
    let target = TOL_MARGIN * rel_tol;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de ^ n as u64);
    let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let (lambda_min, err_min) = smallest(m, &start, target, &mut budget)?;
    let (lambda_max, err_max) = largest(m, &start, target, &mut budget)?;
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            pivot: 0,
            value: lambda_min,
        });
    }
    Ok(SpectralResult {
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        // Rounding bounds what the estimate can honestly claim.
        rel_tol_achieved: err_min.max(err_max).max(f64::EPSILON),
    })
}

struct Budget {
    used: usize,
    cap: usize,
}

impl Budget {
    fn charge(&mut self, n: usize, residual: f64) -> Result<()> {
        self.used += n;
        if self.used > self.cap {
            return Err(Error::Convergence {
                iterations: self.used,
                residual,
            });
        }
        Ok(())
    }
}

/// Relative error bound on `1 / theta` as an approximation of `1 / mu`, where
/// `mu` is the dominant eigenvalue of the inverted operator.
fn inverse_error(pair: &RitzPair) -> f64 {
    let theta = pair.value;
    let rho = pair.residual;
    if rho == 0.0 {
        return 0.0;
    }
    // Residual bound, tightened by the gap bound when the Ritz gap is trustworthy.
    let mut err = rho;
    if let Some(second) = pair.second {
        let gap = theta - second;
        if gap > 2.0 * rho {
            err = err.min(rho * rho / (gap - rho));
        }
    }
    if err >= theta {
        return f64::INFINITY;
    }
    err / (theta - err)
}

/// Iterates the dominant eigenpair of `op` until `accept(pair)` is below `target`.
fn converge(
    op: impl FnMut(&[f64], &mut [f64]),
    start: &[f64],
    target: f64,
    budget: &mut Budget,
    error: impl Fn(&RitzPair) -> f64,
) -> Result<RitzPair> {
    let mut solver = ThickLanczos::new(op, start, KRYLOV_DIM, KEEP);
    loop {
        let pair = solver.cycle()?;
        let err = error(&pair);
        if err <= target {
            return Ok(pair);
        }
        budget.charge(pair.applications, err)?;
    }
}

fn smallest(
    m: &SparseSymmetricMatrix,
    start: &[f64],
    target: f64,
    budget: &mut Budget,
) -> Result<(f64, f64)> {
    let chol = ProfileCholesky::factor(m)?;
    let pair = converge(
        |x, y| chol.solve(x, y),
        start,
        target,
        budget,
        inverse_error,
    )?;
    if !(pair.value > 0.0) {
        return Err(Error::NotPositiveDefinite {
            pivot: 0,
            value: pair.value,
        });
    }
    Ok((1.0 / pair.value, inverse_error(&pair)))
}

fn largest(
    m: &SparseSymmetricMatrix,
    start: &[f64],
    target: f64,
    budget: &mut Budget,
) -> Result<(f64, f64)> {
    // A plain Lanczos cycle locates the top of the spectrum; theta is a lower bound.
    let plain = lanczos_top(
        &mut |x: &[f64], y: &mut [f64]| m.mul_vec(x, y),
        start,
        KRYLOV_DIM,
    )?;
    budget.charge(plain.applications, f64::INFINITY)?;
    let theta = plain.value;
    if plain.residual == 0.0 {
        return Ok((theta, 0.0));
    }
    let gershgorin = m.gershgorin_upper();
    let gap = plain.second.map_or(0.0, |s| theta - s);
    let mut delta = (2.0 * plain.residual)
        .max(1e-3 * gap)
        .max(1e-10 * theta.abs());
    loop {
        let sigma = (theta + delta).min(gershgorin * (1.0 + 1e-12));
        let attempt = ProfileCholesky::factor_shifted(m, sigma, -1.0).and_then(|chol| {
            converge(
                |x, y| chol.solve(x, y),
                &plain.vector,
                target * theta / (sigma - theta),
                budget,
                inverse_error,
            )
        });
        match attempt {
            Ok(pair) if pair.value > 0.0 => {
                let lambda = sigma - 1.0 / pair.value;
                // Guard against a factorization that only just succeeded below the spectrum.
                if lambda >= theta * (1.0 - 1e-12) && lambda <= sigma {
                    let err = inverse_error(&pair) * (sigma - lambda) / lambda;
                    return Ok((lambda, err));
                }
            }
            Ok(_) | Err(Error::NotPositiveDefinite { .. }) => {}
            Err(e) => return Err(e),
        }
        if sigma >= gershgorin {
            return Err(Error::Convergence {
                iterations: budget.used,
                residual: plain.residual / theta,
            });
        }
        delta *= 10.0;
    }
}

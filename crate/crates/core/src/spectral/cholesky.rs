//! Envelope (profile) Cholesky factorization under reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use crate::assembly::SparseSymmetricMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(m: &SparseSymmetricMatrix) -> Vec<usize> {
    let n = m.order();
    let degree: Vec<usize> = (0..n).map(|i| m.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| degree[i]);
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(m, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = m
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            next.sort_by_key(|&w| degree[w]);
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Breadth-first levels from `root`: (eccentricity, nodes in the last level).
fn level_structure(
    m: &SparseSymmetricMatrix,
    root: usize,
    depth: &mut [usize],
) -> (usize, Vec<usize>) {
    let mut touched = vec![root];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut ecc = 0;
    while let Some(v) = queue.pop_front() {
        ecc = ecc.max(depth[v]);
        for &w in m.row(v).0 {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    let last = touched
        .iter()
        .copied()
        .filter(|&v| depth[v] == ecc)
        .collect();
    for v in touched {
        depth[v] = usize::MAX;
    }
    (ecc, last)
}

fn pseudo_peripheral(m: &SparseSymmetricMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut depth = vec![usize::MAX; m.order()];
    let mut root = seed;
    let (mut ecc, mut last) = level_structure(m, root, &mut depth);
    loop {
        let Some(&cand) = last.iter().min_by_key(|&&v| degree[v]) else {
            return root;
        };
        let (e, l) = level_structure(m, cand, &mut depth);
        if e <= ecc {
            return root;
        }
        root = cand;
        ecc = e;
        last = l;
    }
}

/// Lower Cholesky factor of `alpha I + beta M` stored by rows, each row
/// running from its first nonzero column to the diagonal.
#[derive(Clone, Debug)]
pub struct ProfileCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl ProfileCholesky {
    pub fn factor(m: &SparseSymmetricMatrix) -> Result<Self> {
        Self::factor_shifted(m, 0.0, 1.0)
    }

    /// Factors `alpha I + beta M`, failing with `NotPositiveDefinite` if it is not.
    pub fn factor_shifted(m: &SparseSymmetricMatrix, alpha: f64, beta: f64) -> Result<Self> {
        let n = m.order();
        let perm = reverse_cuthill_mckee(m);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first: Vec<usize> = (0..n)
            .map(|i| {
                m.row(perm[i])
                    .0
                    .iter()
                    .map(|&c| inv[c])
                    .filter(|&c| c <= i)
                    .min()
                    .unwrap_or(i)
            })
            .collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for i in 0..n {
            let (cols, vals) = m.row(perm[i]);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    values[offset[i] + j - first[i]] = beta * v;
                }
            }
            values[offset[i + 1] - 1] += alpha;
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, row_i) = values.split_at_mut(offset[i]);
                let row_j = &head[offset[j]..offset[j + 1]];
                let s: f64 = row_i[k0 - fi..j - fi]
                    .iter()
                    .zip(&row_j[k0 - fj..j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                row_i[j - fi] = (row_i[j - fi] - s) / row_j[j - fj];
            }
            let row_i = &mut values[offset[i]..offset[i + 1]];
            let (off, diag) = row_i.split_at_mut(i - fi);
            let pivot = diag[0] - off.iter().map(|x| x * x).sum::<f64>();
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: perm[i],
                    value: pivot,
                });
            }
            diag[0] = pivot.sqrt();
        }
        Ok(ProfileCholesky {
            perm,
            first,
            offset,
            values,
        })
    }

    pub fn order(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Solves `(alpha I + beta M) x = b`.
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.order();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let fi = self.first[i];
            let s: f64 = row[..i - fi]
                .iter()
                .zip(&y[fi..i])
                .map(|(a, b)| a * b)
                .sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let fi = self.first[i];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * yi;
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
    }
}

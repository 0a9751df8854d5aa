//! Sparse assembly of the interior-vertex stiffness and mass matrices.
//!
//! Unknowns are the interior vertices in vertex order; Dirichlet rows and
//! columns are never formed.

use std::io::Write;

use crate::diffusion::DiffusionField;
use crate::error::{Error, Result};
use crate::mesh::{ElementShape, SimplicialMesh};

/// Symmetric matrix in compressed sparse row form, full pattern stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetricMatrix {
    order: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Builds from CSR arrays. Column indices must be sorted within each row.
    pub fn from_csr(
        order: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != order + 1
            || row_ptr[0] != 0
            || row_ptr[order] != col_idx.len()
            || col_idx.len() != values.len()
        {
            return Err(Error::invalid("inconsistent CSR arrays"));
        }
        for i in 0..order {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= order) {
                return Err(Error::invalid(format!(
                    "row {i} has unsorted or out-of-range columns"
                )));
            }
        }
        Ok(SparseSymmetricMatrix {
            order,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Keeps the nonzero entries of a dense symmetric matrix (and the diagonal).
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid("dense matrix is not square"));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || i == j {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_csr(n, row_ptr, col_idx, values)
    }

    pub fn identity(order: usize) -> Self {
        SparseSymmetricMatrix {
            order,
            row_ptr: (0..=order).collect(),
            col_idx: (0..order).collect(),
            values: vec![1.0; order],
        }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Stored entries (both triangles).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.order);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.order]; self.order];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    /// Largest `|M_ij - M_ji|` relative to `max |M_ij|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..self.order {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Upper Gershgorin bound on the spectrum.
    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.order)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Half bandwidth `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.order)
            .flat_map(|i| self.row(i).0.iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= factor);
        m
    }

    /// Writes `%%sym n nnz` followed by `i j value` for `i <= j` (zero-based).
    pub fn write_coordinate(&self, w: &mut impl Write) -> Result<()> {
        let upper = (0..self.order)
            .map(|i| self.row(i).0.iter().filter(|&&j| j >= i).count())
            .sum::<usize>();
        writeln!(w, "%%sym {} {}", self.order, upper)?;
        for i in 0..self.order {
            let (cols, vals) = self.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                if j >= i {
                    writeln!(w, "{i} {j} {v:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Positive diagonal scaling `S = diag(s_j)` over the unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalScaling {
    entries: Vec<f64>,
}

impl DiagonalScaling {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some((j, s)) = entries
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s > 0.0))
        {
            return Err(Error::invalid(format!(
                "scaling entry {j} = {s} is not positive and finite"
            )));
        }
        Ok(DiagonalScaling { entries })
    }

    pub fn identity(n: usize) -> Self {
        DiagonalScaling {
            entries: vec![1.0; n],
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sparsity pattern of the interior-vertex coupling graph.
struct Pattern {
    numbering: Vec<Option<usize>>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Pattern {
    fn new(mesh: &SimplicialMesh) -> Self {
        let numbering = mesh.interior_numbering();
        let n = mesh.num_interior_vertices();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for k in 0..mesh.num_elements() {
            let el = mesh.element(k);
            for &p in el {
                if let Some(i) = numbering[p] {
                    rows[i].extend(el.iter().filter_map(|&q| numbering[q]));
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        Pattern {
            numbering,
            row_ptr,
            col_idx,
        }
    }

    /// Adds `local[p][q]` for every interior pair of the element's vertices.
    fn scatter(&self, values: &mut [f64], element: &[usize], local: impl Fn(usize, usize) -> f64) {
        for (p, &vp) in element.iter().enumerate() {
            let Some(i) = self.numbering[vp] else {
                continue;
            };
            let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
            for (q, &vq) in element.iter().enumerate() {
                let Some(j) = self.numbering[vq] else {
                    continue;
                };
                let pos = cols
                    .binary_search(&j)
                    .expect("pattern covers element couplings");
                values[self.row_ptr[i] + pos] += local(p, q);
            }
        }
    }

    fn finish(self, values: Vec<f64>) -> SparseSymmetricMatrix {
        SparseSymmetricMatrix {
            order: self.row_ptr.len() - 1,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values,
        }
    }
}

fn check_dims(mesh: &SimplicialMesh, field: &DiffusionField) -> Result<()> {
    if mesh.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: mesh.dim(),
            found: field.dim(),
        });
    }
    Ok(())
}

/// `A_ij = sum_K |K| grad phi_i . D_K grad phi_j` over interior `i, j`.
pub fn assemble_stiffness(
    mesh: &SimplicialMesh,
    field: &DiffusionField,
) -> Result<SparseSymmetricMatrix> {
    check_dims(mesh, field)?;
    let pattern = Pattern::new(mesh);
    let mut values = vec![0.0; pattern.col_idx.len()];
    let d = mesh.dim();
    for k in 0..mesh.num_elements() {
        let shape = ElementShape::new(mesh, k)?;
        let dk = field.element_average(mesh, k)?;
        let mut flux = [[0.0; 3]; 4];
        for (p, f) in flux.iter_mut().enumerate().take(d + 1) {
            *f = dk.mul_vec(shape.gradient(p));
        }
        pattern.scatter(&mut values, mesh.element(k), |p, q| {
            let g = shape.gradient(p);
            shape.volume * (0..d).map(|c| g[c] * flux[q][c]).sum::<f64>()
        });
    }
    Ok(pattern.finish(values))
}

/// `B_ij = int phi_i phi_j`; element entries `|K| (1 + delta_ij) / ((d+1)(d+2))`.
pub fn assemble_mass(mesh: &SimplicialMesh) -> Result<SparseSymmetricMatrix> {
    let pattern = Pattern::new(mesh);
    let mut values = vec![0.0; pattern.col_idx.len()];
    let d = mesh.dim() as f64;
    let denom = (d + 1.0) * (d + 2.0);
    for k in 0..mesh.num_elements() {
        let vol = mesh.volume(k);
        if !(vol > 0.0) {
            return Err(Error::DegenerateElement {
                element: k,
                volume: vol,
            });
        }
        pattern.scatter(&mut values, mesh.element(k), |p, q| {
            vol * if p == q { 2.0 } else { 1.0 } / denom
        });
    }
    Ok(pattern.finish(values))
}

/// `s_j = sqrt(M_jj)`.
pub fn jacobi_scaling(m: &SparseSymmetricMatrix) -> Result<DiagonalScaling> {
    let diag = m.diagonal();
    if let Some((j, v)) = diag.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            pivot: j,
            value: *v,
        });
    }
    DiagonalScaling::new(diag.into_iter().map(f64::sqrt).collect())
}

/// `s_j^2 = sum_{K in omega_j} |K| ||(F'_K)^{-1} D_K (F'_K)^{-T}||_2`.
pub fn alt_scaling(mesh: &SimplicialMesh, field: &DiffusionField) -> Result<DiagonalScaling> {
    check_dims(mesh, field)?;
    let numbering = mesh.interior_numbering();
    let mut sq = vec![0.0; mesh.num_interior_vertices()];
    for k in 0..mesh.num_elements() {
        let shape = ElementShape::new(mesh, k)?;
        let dk = field.element_average(mesh, k)?;
        let w = shape.volume * shape.metric_tensor(&dk).symmetric_norm();
        for &v in mesh.element(k) {
            if let Some(j) = numbering[v] {
                sq[j] += w;
            }
        }
    }
    DiagonalScaling::new(sq.into_iter().map(f64::sqrt).collect())
}

/// `S^{-1} M S^{-1}`.
pub fn apply_symmetric_scaling(
    m: &SparseSymmetricMatrix,
    s: &DiagonalScaling,
) -> Result<SparseSymmetricMatrix> {
    if s.len() != m.order() {
        return Err(Error::DimensionMismatch {
            expected: m.order(),
            found: s.len(),
        });
    }
    let mut out = m.clone();
    let inv: Vec<f64> = s.entries().iter().map(|v| 1.0 / v).collect();
    for i in 0..m.order() {
        for p in m.row_ptr[i]..m.row_ptr[i + 1] {
            out.values[p] *= inv[i] * inv[m.col_idx[p]];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{
        generate_chebyshev_mesh, generate_skew_mesh_2d, generate_uniform_mesh, vertex_patches,
    };
    use crate::tensor::SmallMatrix;

    fn identity(d: usize) -> DiffusionField {
        DiffusionField::identity(d).unwrap()
    }

    #[test]
    fn stiffness_1d_uniform() {
        let a = assemble_stiffness(&generate_uniform_mesh(1, 4).unwrap(), &identity(1)).unwrap();
        assert_eq!(a.order(), 3);
        for i in 0..3 {
            assert!((a.get(i, i) - 8.0).abs() < 1e-13);
            if i + 1 < 3 {
                assert!((a.get(i, i + 1) + 4.0).abs() < 1e-13);
                assert!((a.get(i + 1, i) + 4.0).abs() < 1e-13);
            }
        }
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn stiffness_row_sums_vanish_away_from_boundary() {
        let mesh = generate_skew_mesh_2d(8, 5.0).unwrap();
        let a = assemble_stiffness(&mesh, &identity(2)).unwrap();
        let numbering = mesh.interior_numbering();
        for p in vertex_patches(&mesh) {
            let touches_boundary = p
                .elements
                .iter()
                .any(|&k| mesh.element(k).iter().any(|&v| mesh.is_boundary(v)));
            if touches_boundary {
                continue;
            }
            let i = numbering[p.vertex].unwrap();
            let (_, vals) = a.row(i);
            let sum: f64 = vals.iter().sum();
            assert!(sum.abs() < 1e-10 * a.get(i, i), "row {i} sums to {sum}");
        }
    }

    #[test]
    fn stiffness_is_linear_in_d() {
        let mesh = generate_uniform_mesh(2, 5).unwrap();
        let a1 = assemble_stiffness(&mesh, &identity(2)).unwrap();
        let two = DiffusionField::constant(SmallMatrix::diagonal(&[2.0, 2.0])).unwrap();
        let a2 = assemble_stiffness(&mesh, &two).unwrap();
        for i in 0..a1.order() {
            for j in 0..a1.order() {
                assert!((a2.get(i, j) - 2.0 * a1.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_symmetric_and_pattern_local() {
        let mesh = generate_uniform_mesh(3, 3).unwrap();
        let a = assemble_stiffness(&mesh, &identity(3)).unwrap();
        assert!(a.relative_asymmetry() < 1e-14);
        assert!(a.diagonal().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let mesh = generate_uniform_mesh(2, 3).unwrap();
        assert!(matches!(
            assemble_stiffness(&mesh, &identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mass_1d_uniform() {
        let b = assemble_mass(&generate_uniform_mesh(1, 4).unwrap()).unwrap();
        for i in 0..3 {
            assert!((b.get(i, i) - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((b.get(0, 1) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn mass_diagonal_matches_patch_volume() {
        for mesh in [
            generate_chebyshev_mesh(50).unwrap(),
            generate_skew_mesh_2d(8, 30.0).unwrap(),
            generate_uniform_mesh(3, 4).unwrap(),
        ] {
            let b = assemble_mass(&mesh).unwrap();
            let d = mesh.dim() as f64;
            for (j, p) in vertex_patches(&mesh).iter().enumerate() {
                let want = 2.0 * p.volume / ((d + 1.0) * (d + 2.0));
                assert!((b.get(j, j) - want).abs() <= 1e-14 * want);
                let (_, vals) = b.row(j);
                assert!(vals.iter().all(|&v| v >= 0.0));
                let row_sum: f64 = vals.iter().sum();
                assert!(row_sum <= p.volume / (d + 1.0) * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn jacobi_scaling_examples() {
        let one = SparseSymmetricMatrix::from_dense(&[vec![4.0]]).unwrap();
        assert_eq!(jacobi_scaling(&one).unwrap().entries(), &[2.0]);

        let a = assemble_stiffness(&generate_uniform_mesh(1, 4).unwrap(), &identity(1)).unwrap();
        let s = jacobi_scaling(&a).unwrap();
        assert!(s.entries().iter().all(|v| (v - 8f64.sqrt()).abs() < 1e-14));
        let scaled = apply_symmetric_scaling(&a, &s).unwrap();
        for i in 0..3 {
            assert!((scaled.get(i, i) - 1.0).abs() < 1e-15);
        }
        assert!((scaled.get(0, 1) + 0.5).abs() < 1e-15);

        let bad = SparseSymmetricMatrix::from_dense(&[vec![0.0]]).unwrap();
        assert!(jacobi_scaling(&bad).is_err());
    }

    #[test]
    fn identity_scaling_is_noop() {
        let a = assemble_stiffness(&generate_uniform_mesh(2, 4).unwrap(), &identity(2)).unwrap();
        let s = DiagonalScaling::identity(a.order());
        assert_eq!(apply_symmetric_scaling(&a, &s).unwrap(), a);
    }

    #[test]
    fn alt_scaling_equals_jacobi_in_1d() {
        let mesh = generate_chebyshev_mesh(40).unwrap();
        let a = assemble_stiffness(&mesh, &identity(1)).unwrap();
        let alt = alt_scaling(&mesh, &identity(1)).unwrap();
        let jac = jacobi_scaling(&a).unwrap();
        for (x, y) in alt.entries().iter().zip(jac.entries()) {
            assert!((x * x - y * y).abs() < 1e-12 * y * y);
        }
    }

    #[test]
    fn alt_scaling_dominates_jacobi() {
        let field = DiffusionField::rotated(1000.0, 1.0).unwrap();
        for (mesh, f) in [
            (generate_skew_mesh_2d(10, 40.0).unwrap(), field),
            (generate_uniform_mesh(3, 4).unwrap(), identity(3)),
        ] {
            let a = assemble_stiffness(&mesh, &f).unwrap();
            let alt = alt_scaling(&mesh, &f).unwrap();
            for (x, y) in alt
                .entries()
                .iter()
                .zip(jacobi_scaling(&a).unwrap().entries())
            {
                assert!(x * x >= y * y * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn element_order_does_not_matter() {
        let mesh = generate_skew_mesh_2d(6, 7.0).unwrap();
        let field = DiffusionField::rotated(1000.0, 1.0).unwrap();
        let a = assemble_stiffness(&mesh, &field).unwrap();
        let order: Vec<usize> = (0..mesh.num_elements()).rev().collect();
        let b = assemble_stiffness(&mesh.with_element_order(&order).unwrap(), &field).unwrap();
        let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
        for i in 0..a.order() {
            for j in 0..a.order() {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn coordinate_dump() {
        let a = assemble_stiffness(&generate_uniform_mesh(1, 4).unwrap(), &identity(1)).unwrap();
        let mut buf = Vec::new();
        a.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%sym 3 5"));
        assert_eq!(lines.count(), 5);
    }
}

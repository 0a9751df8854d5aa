//! Simplicial meshes of intervals, triangles and tetrahedra.

mod generate;
mod geometry;
mod io;
mod stats;

pub use generate::{
    generate_chebyshev_mesh, generate_skew_mesh_2d, generate_skew_mesh_3d, generate_uniform_mesh,
};
pub use geometry::{reference_gradient_constant, reference_simplex, ElementGeometry, ElementShape};
pub use io::{read_mesh, read_mesh_from, write_mesh, write_mesh_to};
pub use stats::{mesh_statistics, vertex_patches, MeshStatistics, VertexPatch};

use crate::error::{Error, Result};

/// A conforming simplicial mesh in `d = 1, 2, 3` dimensions.
///
/// Vertex coordinates and element connectivity are stored flat with strides
/// `d` and `d + 1`. Elements are positively oriented.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
}

impl SimplicialMesh {
    /// Validates and builds a mesh. Negatively oriented elements are reoriented
    /// by swapping their last two vertices.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("dimension {dim} not in 1..=3")));
        }
        if !coords.len().is_multiple_of(dim) || !cells.len().is_multiple_of(dim + 1) {
            return Err(Error::InvalidMesh(
                "ragged coordinate or element arrays".into(),
            ));
        }
        let nv = coords.len() / dim;
        if boundary.len() != nv {
            return Err(Error::InvalidMesh(format!(
                "{} boundary flags for {nv} vertices",
                boundary.len()
            )));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite coordinate {x}")));
        }
        if let Some(&v) = cells.iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidMesh(format!(
                "vertex index {v} out of range (nv = {nv})"
            )));
        }
        let mut mesh = SimplicialMesh {
            dim,
            coords,
            cells,
            boundary,
        };
        let stride = dim + 1;
        let mut used = vec![false; nv];
        for k in 0..mesh.num_elements() {
            let signed = mesh.signed_volume(k);
            if signed == 0.0 || !signed.is_finite() {
                return Err(Error::DegenerateElement {
                    element: k,
                    volume: signed,
                });
            }
            if signed < 0.0 {
                mesh.cells.swap(k * stride + dim - 1, k * stride + dim);
            }
            for &v in mesh.element(k) {
                used[v] = true;
            }
        }
        if let Some(v) = (0..nv).find(|&v| !mesh.boundary[v] && !used[v]) {
            return Err(Error::InvalidMesh(format!(
                "interior vertex {v} belongs to no element"
            )));
        }
        Ok(mesh)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn num_elements(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn element(&self, k: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.cells[k * s..(k + 1) * s]
    }

    #[inline]
    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coords
    }

    pub fn connectivity(&self) -> &[usize] {
        &self.cells
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_interior_vertices(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Maps each vertex to its unknown index (interior vertices only, in vertex order).
    pub fn interior_numbering(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.boundary
            .iter()
            .map(|&b| {
                if b {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    }

    /// `det[v1 - v0, ..., vd - v0] / d!`.
    pub fn signed_volume(&self, k: usize) -> f64 {
        let e = self.edge_matrix(k);
        let fact = match self.dim {
            1 => 1.0,
            2 => 2.0,
            _ => 6.0,
        };
        e.determinant() / fact
    }

    pub fn volume(&self, k: usize) -> f64 {
        self.signed_volume(k).abs()
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_elements()).map(|k| self.volume(k)).sum()
    }

    pub fn barycenter(&self, k: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        let el = self.element(k);
        for &v in el {
            for (ci, x) in c.iter_mut().zip(self.vertex(v)) {
                *ci += x;
            }
        }
        let w = 1.0 / el.len() as f64;
        c.iter_mut().for_each(|x| *x *= w);
        c
    }

    /// Columns `v_i - v_0`, `i = 1..=d`.
    pub(crate) fn edge_matrix(&self, k: usize) -> crate::tensor::SmallMatrix {
        let el = self.element(k);
        let d = self.dim;
        let v0 = self.vertex(el[0]);
        let mut m = crate::tensor::SmallMatrix::zeros(d);
        for j in 0..d {
            let vj = self.vertex(el[j + 1]);
            for i in 0..d {
                m.set(i, j, vj[i] - v0[i]);
            }
        }
        m
    }

    /// Returns the same mesh with elements listed in the given order.
    pub fn with_element_order(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.num_elements() {
            return Err(Error::invalid("element permutation has the wrong length"));
        }
        let cells = order
            .iter()
            .flat_map(|&k| self.element(k).iter().copied())
            .collect();
        SimplicialMesh::new(self.dim, self.coords.clone(), cells, self.boundary.clone())
    }
}

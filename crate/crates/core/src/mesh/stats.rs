use super::SimplicialMesh;
use crate::error::Result;

/// Elements sharing an interior vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexPatch {
    pub vertex: usize,
    /// Element indices in ascending order.
    pub elements: Vec<usize>,
    /// `|omega_j|`, summed in element order.
    pub volume: f64,
}

/// Patches of all interior vertices, in vertex order.
pub fn vertex_patches(mesh: &SimplicialMesh) -> Vec<VertexPatch> {
    let nv = mesh.num_vertices();
    let mut elements = vec![Vec::new(); nv];
    for k in 0..mesh.num_elements() {
        for &v in mesh.element(k) {
            if !mesh.is_boundary(v) {
                elements[v].push(k);
            }
        }
    }
    elements
        .into_iter()
        .enumerate()
        .filter(|(v, _)| !mesh.is_boundary(*v))
        .map(|(vertex, elements)| {
            let volume = elements.iter().map(|&k| mesh.volume(k)).sum();
            VertexPatch {
                vertex,
                elements,
                volume,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshStatistics {
    pub num_elements: usize,
    pub num_interior_vertices: usize,
    pub domain_volume: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// `|Omega| / N`.
    pub k_bar: f64,
    /// Extreme patch volumes over interior vertices.
    pub omega_min: f64,
    pub omega_max: f64,
    /// Most elements in one interior-vertex patch.
    pub p_max: usize,
    /// `h_max / h_min` over element diameters.
    pub h_ratio: f64,
}

pub fn mesh_statistics(mesh: &SimplicialMesh) -> Result<MeshStatistics> {
    let n = mesh.num_elements();
    let mut k_min = f64::INFINITY;
    let mut k_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut h_max: f64 = 0.0;
    let mut domain_volume = 0.0;
    for k in 0..n {
        let g = mesh.element_geometry(k)?;
        k_min = k_min.min(g.volume);
        k_max = k_max.max(g.volume);
        h_min = h_min.min(g.diameter);
        h_max = h_max.max(g.diameter);
        domain_volume += g.volume;
    }
    let patches = vertex_patches(mesh);
    let omega_min = patches
        .iter()
        .map(|p| p.volume)
        .fold(f64::INFINITY, f64::min);
    let omega_max = patches.iter().map(|p| p.volume).fold(0.0, f64::max);
    let p_max = patches.iter().map(|p| p.elements.len()).max().unwrap_or(0);
    Ok(MeshStatistics {
        num_elements: n,
        num_interior_vertices: patches.len(),
        domain_volume,
        k_min,
        k_max,
        k_bar: domain_volume / n as f64,
        omega_min,
        omega_max,
        p_max,
        h_ratio: h_max / h_min,
    })
}

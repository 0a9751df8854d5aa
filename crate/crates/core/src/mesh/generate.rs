//! Deterministic mesh families on the unit interval, square and cube.

use std::f64::consts::PI;

use super::SimplicialMesh;
use crate::error::{Error, Result};

/// Uniform triangulation of `[0, 1]^d` with `n` cells per axis.
///
/// In 2D each cell is cut into two triangles along the same diagonal; in 3D
/// each cube is cut into the six tetrahedra of the Kuhn subdivision.
pub fn generate_uniform_mesh(dim: usize, n: usize) -> Result<SimplicialMesh> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2 subdivisions, got {n}")));
    }
    let axis: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    match dim {
        1 => interval_mesh(axis),
        2 => tensor_mesh_2d(&axis, &axis),
        3 => tensor_mesh_3d(&axis, &axis, &axis),
        _ => Err(Error::invalid(format!("dimension {dim} not in 1..=3"))),
    }
}

/// Interval mesh with `n` elements whose interior nodes are the Chebyshev points
/// `x_i = (1 - cos((2i - 1) pi / (2(n - 1)))) / 2`, `i = 1..n-1`.
pub fn generate_chebyshev_mesh(n: usize) -> Result<SimplicialMesh> {
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 elements, got {n}")));
    }
    let denom = 2.0 * (n - 1) as f64;
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(0.0);
    nodes.extend((1..n).map(|i| 0.5 * (1.0 - ((2 * i - 1) as f64 * PI / denom).cos())));
    nodes.push(1.0);
    interval_mesh(nodes)
}

/// Uniform `n x n` square mesh with one row of flattened cells.
///
/// The grid line nearest `y = 1/2` is moved down so that the row of cells below
/// it has height `1/(n a)`; the row above absorbs the difference. This produces
/// `2n` thin triangles whose diameter to in-diameter ratio is about `a`.
pub fn generate_skew_mesh_2d(n: usize, aspect: f64) -> Result<SimplicialMesh> {
    if n < 4 {
        return Err(Error::invalid(format!("need n >= 4 subdivisions, got {n}")));
    }
    let axis = skew_axis(n, aspect)?;
    let uniform: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    tensor_mesh_2d(&uniform, &axis)
}

/// Uniform `n^3` cube mesh with one layer of flattened cells next to `z = 1/2`,
/// giving `6 n^2` thin tetrahedra.
pub fn generate_skew_mesh_3d(n: usize, aspect: f64) -> Result<SimplicialMesh> {
    if n < 4 {
        return Err(Error::invalid(format!("need n >= 4 subdivisions, got {n}")));
    }
    let axis = skew_axis(n, aspect)?;
    let uniform: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    tensor_mesh_3d(&uniform, &uniform, &axis)
}

fn skew_axis(n: usize, aspect: f64) -> Result<Vec<f64>> {
    if !(aspect >= 1.0) || !aspect.is_finite() {
        return Err(Error::invalid(format!(
            "aspect must be finite and >= 1, got {aspect}"
        )));
    }
    let mut axis: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    if aspect > 1.0 {
        let j = n.div_ceil(2);
        let h = 1.0 / n as f64;
        let moved = axis[j - 1] + h / aspect;
        if !(moved > axis[j - 1] && moved < axis[j + 1]) {
            return Err(Error::invalid(format!(
                "aspect {aspect} collapses the shifted grid line onto a neighbor"
            )));
        }
        axis[j] = moved;
    }
    Ok(axis)
}

fn interval_mesh(nodes: Vec<f64>) -> Result<SimplicialMesh> {
    let nv = nodes.len();
    let cells = (0..nv - 1).flat_map(|i| [i, i + 1]).collect();
    let mut boundary = vec![false; nv];
    boundary[0] = true;
    boundary[nv - 1] = true;
    SimplicialMesh::new(1, nodes, cells, boundary)
}

fn tensor_mesh_2d(xs: &[f64], ys: &[f64]) -> Result<SimplicialMesh> {
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut coords = Vec::with_capacity(2 * (nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            coords.extend([x, y]);
            boundary.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.extend([a, b, c, a, c, d]);
        }
    }
    SimplicialMesh::new(2, coords, cells, boundary)
}

/// Kuhn subdivision: one tetrahedron per monotone lattice path from corner
/// `(0,0,0)` to `(1,1,1)` of each cell.
fn tensor_mesh_3d(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<SimplicialMesh> {
    const PATHS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let (nx, ny, nz) = (xs.len() - 1, ys.len() - 1, zs.len() - 1);
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut coords = Vec::with_capacity(3 * (nx + 1) * (ny + 1) * (nz + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for (k, &z) in zs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                coords.extend([x, y, z]);
                boundary.push(i == 0 || j == 0 || k == 0 || i == nx || j == ny || k == nz);
            }
        }
    }
    let mut cells = Vec::with_capacity(24 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for path in PATHS {
                    let mut corner = [i, j, k];
                    cells.push(id(corner[0], corner[1], corner[2]));
                    for axis in path {
                        corner[axis] += 1;
                        cells.push(id(corner[0], corner[1], corner[2]));
                    }
                }
            }
        }
    }
    SimplicialMesh::new(3, coords, cells, boundary)
}

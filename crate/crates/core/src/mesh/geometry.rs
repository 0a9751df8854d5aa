use std::sync::OnceLock;

use super::SimplicialMesh;
use crate::error::{Error, Result};
use crate::tensor::SmallMatrix;

/// Vertices of the regular reference simplex with unit volume.
pub fn reference_simplex(dim: usize) -> Vec<[f64; 3]> {
    match dim {
        1 => vec![[0.0; 3], [1.0, 0.0, 0.0]],
        2 => {
            // sqrt(3)/4 s^2 = 1
            let s = (4.0 / 3f64.sqrt()).sqrt();
            vec![
                [0.0; 3],
                [s, 0.0, 0.0],
                [0.5 * s, 0.5 * 3f64.sqrt() * s, 0.0],
            ]
        }
        3 => {
            // Alternate cube corners form a regular tetrahedron of volume 8/3.
            let t = (3.0f64 / 8.0).cbrt();
            vec![[t, t, t], [t, -t, -t], [-t, t, -t], [-t, -t, t]]
        }
        _ => panic!("dimension {dim} not in 1..=3"),
    }
}

struct Reference {
    /// Columns `v_i - v_0` of the reference simplex.
    edges: SmallMatrix,
    /// `max_i |grad phi_hat_i|^2`.
    gradient_constant: f64,
}

fn reference(dim: usize) -> &'static Reference {
    static CACHE: [OnceLock<Reference>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHE[dim - 1].get_or_init(|| {
        let v = reference_simplex(dim);
        let mut edges = SmallMatrix::zeros(dim);
        for j in 0..dim {
            for i in 0..dim {
                edges.set(i, j, v[j + 1][i] - v[0][i]);
            }
        }
        let grads = basis_gradients(&edges).expect("reference simplex is nondegenerate");
        let gradient_constant = grads
            .iter()
            .take(dim + 1)
            .map(|g| g[..dim].iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max);
        Reference {
            edges,
            gradient_constant,
        }
    })
}

/// `C_phi = max_i |grad phi_hat_i|^2` over the regular unit-volume reference simplex.
pub fn reference_gradient_constant(dim: usize) -> f64 {
    reference(dim).gradient_constant
}

/// Gradients of the barycentric basis functions for an element whose edge
/// matrix (columns `v_i - v_0`) is `edges`. Entry 0 belongs to `v_0`.
fn basis_gradients(edges: &SmallMatrix) -> Option<[[f64; 3]; 4]> {
    let d = edges.dim();
    let inv = edges.inverse()?;
    let mut g = [[0.0; 3]; 4];
    for i in 0..d {
        for c in 0..d {
            g[i + 1][c] = inv.get(i, c);
            g[0][c] -= inv.get(i, c);
        }
    }
    Some(g)
}

/// Per-element quantities needed by assembly and the bounds.
#[derive(Clone, Debug)]
pub struct ElementShape {
    pub volume: f64,
    /// Gradients of the `d + 1` local basis functions (unused trailing entries are zero).
    pub gradients: [[f64; 3]; 4],
    /// `F'_K`, the Jacobian of the affine map from the reference simplex.
    pub jacobian: SmallMatrix,
    /// `(F'_K)^{-1}`.
    pub inverse_jacobian: SmallMatrix,
}

impl ElementShape {
    pub fn new(mesh: &SimplicialMesh, k: usize) -> Result<Self> {
        let edges = mesh.edge_matrix(k);
        let volume = mesh.volume(k);
        let degenerate = || Error::DegenerateElement { element: k, volume };
        if !(volume > 0.0) {
            return Err(degenerate());
        }
        let gradients = basis_gradients(&edges).ok_or_else(degenerate)?;
        let r = reference(mesh.dim());
        let ref_inv = r
            .edges
            .inverse()
            .expect("reference simplex is nondegenerate");
        let jacobian = edges * ref_inv;
        let inverse_jacobian = r.edges * edges.inverse().ok_or_else(degenerate)?;
        Ok(ElementShape {
            volume,
            gradients,
            jacobian,
            inverse_jacobian,
        })
    }

    pub fn gradient(&self, local: usize) -> &[f64] {
        &self.gradients[local][..self.jacobian.dim()]
    }

    /// `(F'_K)^{-1} D_K (F'_K)^{-T}`: the diffusion tensor pulled back to the
    /// reference element, so that `grad phi . D grad phi = grad phi_hat . M grad phi_hat`.
    pub fn metric_tensor(&self, diffusion: &SmallMatrix) -> SmallMatrix {
        self.inverse_jacobian * *diffusion * self.inverse_jacobian.transpose()
    }
}

/// Shape descriptors of one element.
#[derive(Clone, Debug)]
pub struct ElementGeometry {
    /// `F'_K`, mapping the regular unit-volume reference simplex onto `K`.
    pub jacobian: SmallMatrix,
    /// `|K| = |det F'_K|`.
    pub volume: f64,
    /// Diameter of the inscribed ball, `h_min,K`.
    pub in_diameter: f64,
    /// `|K|^(1/d)`.
    pub avg_size: f64,
    /// `avg_size / in_diameter`.
    pub aspect: f64,
    /// Longest edge.
    pub diameter: f64,
    /// `diameter / in_diameter`, the classical shape-regularity ratio.
    pub shape_ratio: f64,
}

impl SimplicialMesh {
    pub fn element_geometry(&self, k: usize) -> Result<ElementGeometry> {
        if k >= self.num_elements() {
            return Err(Error::invalid(format!(
                "element {k} out of range ({} elements)",
                self.num_elements()
            )));
        }
        let shape = ElementShape::new(self, k)?;
        let d = self.dim();
        let el = self.element(k);
        let pts: Vec<&[f64]> = el.iter().map(|&v| self.vertex(v)).collect();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let mut diameter: f64 = 0.0;
        for i in 0..=d {
            for j in 0..i {
                diameter = diameter.max(dist(pts[i], pts[j]));
            }
        }
        let facet_total: f64 = match d {
            1 => 2.0,
            2 => (0..3)
                .map(|i| dist(pts[(i + 1) % 3], pts[(i + 2) % 3]))
                .sum(),
            _ => (0..4)
                .map(|skip| {
                    let f: Vec<&[f64]> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
                    let u: Vec<f64> = (0..3).map(|c| f[1][c] - f[0][c]).collect();
                    let w: Vec<f64> = (0..3).map(|c| f[2][c] - f[0][c]).collect();
                    let n = [
                        u[1] * w[2] - u[2] * w[1],
                        u[2] * w[0] - u[0] * w[2],
                        u[0] * w[1] - u[1] * w[0],
                    ];
                    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
                })
                .sum(),
        };
        let volume = shape.volume;
        // inradius = d |K| / (sum of facet measures)
        let in_diameter = 2.0 * d as f64 * volume / facet_total;
        let avg_size = volume.powf(1.0 / d as f64);
        Ok(ElementGeometry {
            jacobian: shape.jacobian,
            volume,
            in_diameter,
            avg_size,
            aspect: avg_size / in_diameter,
            diameter,
            shape_ratio: diameter / in_diameter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_simplices_have_unit_volume() {
        for d in 1..=3 {
            let v = reference_simplex(d);
            let r = reference(d);
            let fact = [1.0, 2.0, 6.0][d - 1];
            assert!(
                (r.edges.determinant().abs() / fact - 1.0).abs() < 1e-14,
                "d={d}"
            );
            assert_eq!(v.len(), d + 1);
        }
    }

    #[test]
    fn gradient_constants() {
        assert!((reference_gradient_constant(1) - 1.0).abs() < 1e-15);
        // Regular simplex: |grad phi|^2 = 1 / height^2.
        let s2 = (4.0 / 3f64.sqrt()).sqrt();
        let h2 = 0.5 * 3f64.sqrt() * s2;
        assert!((reference_gradient_constant(2) - 1.0 / (h2 * h2)).abs() < 1e-14);
        let s3 = (6.0 * 2f64.sqrt()).cbrt();
        let h3 = s3 * (2.0f64 / 3.0).sqrt();
        assert!((reference_gradient_constant(3) - 1.0 / (h3 * h3)).abs() < 1e-14);
    }

    #[test]
    fn interval_geometry() {
        let mesh = SimplicialMesh::new(1, vec![0.0, 0.25], vec![0, 1], vec![true, true]).unwrap();
        let g = mesh.element_geometry(0).unwrap();
        assert!((g.volume - 0.25).abs() < 1e-15);
        assert!((g.jacobian.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((g.in_diameter - 0.25).abs() < 1e-15);
        assert!((g.aspect - 1.0).abs() < 1e-15);
    }

    #[test]
    fn right_triangle_in_diameter() {
        let mesh = SimplicialMesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![0, 1, 2],
            vec![true; 3],
        )
        .unwrap();
        let g = mesh.element_geometry(0).unwrap();
        // inradius = area / semiperimeter
        let expected = 2.0 * 0.5 / ((2.0 + 2f64.sqrt()) / 2.0);
        assert!((g.volume - 0.5).abs() < 1e-15);
        assert!((g.in_diameter - expected).abs() < 1e-14);
        assert!((g.in_diameter - 0.585_786_437_626_904_9).abs() < 1e-12);
        assert!((g.jacobian.determinant() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn regular_triangle_is_the_reference() {
        let v = reference_simplex(2);
        let coords = v.iter().flat_map(|p| [p[0], p[1]]).collect();
        let mesh = SimplicialMesh::new(2, coords, vec![0, 1, 2], vec![true; 3]).unwrap();
        let g = mesh.element_geometry(0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g.jacobian.get(i, j) - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn out_of_range_element() {
        let mesh = SimplicialMesh::new(1, vec![0.0, 1.0], vec![0, 1], vec![true, true]).unwrap();
        assert!(mesh.element_geometry(1).is_err());
    }
}

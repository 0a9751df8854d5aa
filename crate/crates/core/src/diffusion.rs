//! Symmetric positive definite diffusion tensor fields.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::tensor::SmallMatrix;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    Identity,
    Constant(SmallMatrix),
    /// `R(psi) diag(l1, l2) R(psi)^T` with `psi = pi sin(x) cos(y)`.
    RotatedAnisotropic {
        l1: f64,
        l2: f64,
    },
}

/// A diffusion tensor field `D(x)` on a `dim`-dimensional domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionField {
    dim: usize,
    kind: FieldKind,
}

impl DiffusionField {
    pub fn identity(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("dimension {dim} not in 1..=3")));
        }
        Ok(DiffusionField {
            dim,
            kind: FieldKind::Identity,
        })
    }

    pub fn constant(m: SmallMatrix) -> Result<Self> {
        if !m.is_spd() {
            return Err(Error::Field(format!(
                "constant tensor {m:?} is not symmetric positive definite"
            )));
        }
        Ok(DiffusionField {
            dim: m.dim(),
            kind: FieldKind::Constant(m),
        })
    }

    /// The 2D rotated anisotropic field with eigenvalues `l1`, `l2`.
    pub fn rotated(l1: f64, l2: f64) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(Error::Field(format!(
                "eigenvalues must be positive, got ({l1}, {l2})"
            )));
        }
        Ok(DiffusionField {
            dim: 2,
            kind: FieldKind::RotatedAnisotropic { l1, l2 },
        })
    }

    /// Parses `identity`, `const:<m11>,<m12>,...` or `rotated:<l1>,<l2>`.
    ///
    /// `dim` fixes the dimension of `identity`; for the other kinds it is
    /// checked against the dimension implied by the string. A constant accepts
    /// either the full row-major matrix or its upper triangle.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim();
        let field = if spec == "identity" {
            Self::identity(dim)?
        } else if let Some(rest) = spec.strip_prefix("const:") {
            let v = parse_list(rest)?;
            let m = match v.len() {
                1 => SmallMatrix::from_row_major(1, &v),
                4 => SmallMatrix::from_row_major(2, &v),
                9 => SmallMatrix::from_row_major(3, &v),
                3 => SmallMatrix::from_row_major(2, &[v[0], v[1], v[1], v[2]]),
                6 => SmallMatrix::from_row_major(
                    3,
                    &[v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5]],
                ),
                n => {
                    return Err(Error::Field(format!(
                        "{n} entries do not form a 1x1, 2x2 or 3x3 tensor"
                    )))
                }
            };
            Self::constant(m)?
        } else if let Some(rest) = spec.strip_prefix("rotated:") {
            let v = parse_list(rest)?;
            if v.len() != 2 {
                return Err(Error::Field(format!(
                    "rotated needs two eigenvalues, got {}",
                    v.len()
                )));
            }
            Self::rotated(v[0], v[1])?
        } else {
            return Err(Error::Field(format!("unknown field spec {spec:?}")));
        };
        if field.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: field.dim,
            });
        }
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// `D(x)`.
    pub fn evaluate(&self, x: &[f64]) -> SmallMatrix {
        match &self.kind {
            FieldKind::Identity => SmallMatrix::identity(self.dim),
            FieldKind::Constant(m) => *m,
            FieldKind::RotatedAnisotropic { l1, l2 } => {
                let psi = PI * x[0].sin() * x[1].cos();
                let (s, c) = psi.sin_cos();
                let r = SmallMatrix::from_row_major(2, &[c, -s, s, c]);
                let mut d = r * SmallMatrix::diagonal(&[*l1, *l2]) * r.transpose();
                // Exact symmetry; the two off-diagonal products round differently.
                let off = 0.5 * (d.get(0, 1) + d.get(1, 0));
                d.set(0, 1, off);
                d.set(1, 0, off);
                d
            }
        }
    }

    /// `D_K`, approximated by one-point quadrature at the barycenter.
    pub fn element_average(&self, mesh: &SimplicialMesh, k: usize) -> Result<SmallMatrix> {
        if mesh.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: mesh.dim(),
                found: self.dim,
            });
        }
        if k >= mesh.num_elements() {
            return Err(Error::invalid(format!("element {k} out of range")));
        }
        let d = self.evaluate(&mesh.barycenter(k));
        if !d.is_spd() {
            return Err(Error::Field(format!(
                "D is not positive definite in element {k}"
            )));
        }
        Ok(d)
    }

    /// Field-wide spectral bounds `(d_min, d_max)` with `d_min I <= D(x) <= d_max I`.
    ///
    /// All supported kinds have a spectrum that does not depend on `x`, so the
    /// bounds are exact and the mesh is only used for a dimension check.
    pub fn spectral_bounds(&self, mesh: &SimplicialMesh) -> Result<(f64, f64)> {
        if mesh.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: mesh.dim(),
                found: self.dim,
            });
        }
        Ok(self.spectrum())
    }

    pub(crate) fn spectrum(&self) -> (f64, f64) {
        match &self.kind {
            FieldKind::Identity => (1.0, 1.0),
            FieldKind::Constant(m) => {
                let e = m.symmetric_eigenvalues();
                (e[0], e[e.len() - 1])
            }
            FieldKind::RotatedAnisotropic { l1, l2 } => (l1.min(*l2), l1.max(*l2)),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Field(format!("bad number {t:?}")))
        })
        .collect()
}

impl fmt::Display for DiffusionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Identity => write!(f, "identity"),
            FieldKind::Constant(m) => {
                write!(f, "const:")?;
                let d = m.dim();
                for i in 0..d {
                    for j in 0..d {
                        if i + j > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{}", m.get(i, j))?;
                    }
                }
                Ok(())
            }
            FieldKind::RotatedAnisotropic { l1, l2 } => write!(f, "rotated:{l1},{l2}"),
        }
    }
}

//! A-priori bounds on the extreme eigenvalues and condition numbers of the
//! stiffness and mass matrices, the mesh quality measures they are expressed
//! in, and calibration of the generic constant in the `lambda_min` bounds.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::{apply_symmetric_scaling, assemble_mass, assemble_stiffness, jacobi_scaling};
use crate::diffusion::DiffusionField;
use crate::error::{Error, Result};
use crate::mesh::{
    generate_uniform_mesh, mesh_statistics, reference_gradient_constant, vertex_patches,
    ElementShape, SimplicialMesh,
};
use crate::spectral::{extreme_eigenvalues, SpectralResult, DEFAULT_REL_TOL};
use crate::tensor::SmallMatrix;

/// Per-element data shared by all bounds.
struct ElementData {
    volume: f64,
    diffusion: SmallMatrix,
    /// `(F'_K)^{-1} D_K (F'_K)^{-T}`.
    metric: SmallMatrix,
    /// Its spectral norm.
    norm: f64,
}

fn element_data(mesh: &SimplicialMesh, field: &DiffusionField) -> Result<Vec<ElementData>> {
    if mesh.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: mesh.dim(),
            found: field.dim(),
        });
    }
    (0..mesh.num_elements())
        .map(|k| {
            let shape = ElementShape::new(mesh, k)?;
            let diffusion = field.element_average(mesh, k)?;
            let metric = shape.metric_tensor(&diffusion);
            Ok(ElementData {
                volume: shape.volume,
                diffusion,
                norm: metric.symmetric_norm(),
                metric,
            })
        })
        .collect()
}

/// `max_j sum_{K in omega_j} f(K)` over interior vertices.
fn max_patch_sum(mesh: &SimplicialMesh, f: impl Fn(usize) -> f64) -> f64 {
    vertex_patches(mesh)
        .iter()
        .map(|p| p.elements.iter().map(|&k| f(k)).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityMeasures {
    /// Alignment measure per element, `>= 1`.
    pub q_ali: Vec<f64>,
    /// Equidistribution measure per element.
    pub q_eq: Vec<f64>,
    /// `sum_K |K| det(D_K)^{-1/2}`, the domain volume in the metric `D^{-1}`.
    pub sigma_h: f64,
    /// `||(F'_K)^{-1} D_K (F'_K)^{-T}||_2` per element.
    pub dk_norm: Vec<f64>,
}

impl QualityMeasures {
    /// `(1/N) sum_K 1 / q_eq(K)`, which is 1 up to rounding.
    pub fn mean_inverse_q_eq(&self) -> f64 {
        self.q_eq.iter().map(|q| 1.0 / q).sum::<f64>() / self.q_eq.len() as f64
    }

    pub fn max_q_ali(&self) -> f64 {
        self.q_ali.iter().copied().fold(1.0, f64::max)
    }
}

/// Alignment measure of one element from its pulled-back tensor `M_K`.
/// In 1D every element is aligned and the measure is 1.
pub fn alignment_measure(metric: &SmallMatrix) -> f64 {
    let d = metric.dim();
    if d == 1 {
        return 1.0;
    }
    let df = d as f64;
    let ratio = (metric.trace() / df) / metric.determinant().powf(1.0 / df);
    // AM-GM gives ratio >= 1; clamp the last-bit rounding below it.
    ratio.max(1.0).powf(df / (2.0 * (df - 1.0)))
}

pub fn quality_measures(mesh: &SimplicialMesh, field: &DiffusionField) -> Result<QualityMeasures> {
    let data = element_data(mesh, field)?;
    let n = data.len() as f64;
    let metric_volume: Vec<f64> = data
        .iter()
        .map(|e| e.volume / e.diffusion.determinant().sqrt())
        .collect();
    let sigma_h: f64 = metric_volume.iter().sum();
    Ok(QualityMeasures {
        q_ali: data.iter().map(|e| alignment_measure(&e.metric)).collect(),
        q_eq: metric_volume.iter().map(|v| sigma_h / n / v).collect(),
        sigma_h,
        dk_norm: data.iter().map(|e| e.norm).collect(),
    })
}

/// Bounds on `kappa(B)` and `kappa(S^{-1} B S^{-1})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassBounds {
    /// `[r, (d+2) r]` with `r = max_j B_jj / min_j B_jj`.
    pub two_sided: [f64; 2],
    /// `[R, (d+2) R]` with `R = |omega_max| / |omega_min|`.
    pub patch_form: [f64; 2],
    /// `(d+2) p_max |K_max| / |K_min|`.
    pub fried: f64,
    /// `(h_max / h_min)^d`, the classical estimate with its constant set to 1.
    pub standard: f64,
    /// `d + 2`, a bound on the Jacobi-scaled mass matrix.
    pub scaled_upper: f64,
}

pub fn mass_condition_bounds(mesh: &SimplicialMesh) -> Result<MassBounds> {
    let d = mesh.dim() as f64;
    let b = assemble_mass(mesh)?;
    let diag = b.diagonal();
    if diag.is_empty() {
        return Err(Error::InvalidMesh("mesh has no interior vertices".into()));
    }
    let r = diag.iter().copied().fold(0.0, f64::max)
        / diag.iter().copied().fold(f64::INFINITY, f64::min);
    let stats = mesh_statistics(mesh)?;
    let big_r = stats.omega_max / stats.omega_min;
    Ok(MassBounds {
        two_sided: [r, (d + 2.0) * r],
        patch_form: [big_r, (d + 2.0) * big_r],
        fried: (d + 2.0) * stats.p_max as f64 * stats.k_max / stats.k_min,
        standard: stats.h_ratio.powf(d),
        scaled_upper: d + 2.0,
    })
}

/// `[max_j A_jj, (d+1) max_j A_jj]`, enclosing `lambda_max(A)`.
pub fn lambda_max_bounds(diag: &[f64], d: usize) -> [f64; 2] {
    let m = diag.iter().copied().fold(0.0, f64::max);
    [m, (d + 1) as f64 * m]
}

/// `[1, d+1]`, enclosing `lambda_max` of any Jacobi-scaled SPD stiffness matrix.
pub fn lambda_max_bounds_scaled(d: usize) -> [f64; 2] {
    [1.0, (d + 1) as f64]
}

/// Upper bounds on `lambda_max(A)` in terms of the element geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaMaxGeometric {
    /// `(d+1) C_phi max_j sum_{K in omega_j} |K| ||M_K||_2`.
    pub patchwise: f64,
    /// `C (N / sigma_h)^{2/d} max_j sum_{K in omega_j} |K| [q_ali^{d-1} q_eq]^{2/d}`
    /// with the explicit constant `C = (d+1) C_phi d`.
    pub quality_form: f64,
}

pub fn lambda_max_geometric_bound(
    mesh: &SimplicialMesh,
    field: &DiffusionField,
) -> Result<LambdaMaxGeometric> {
    let data = element_data(mesh, field)?;
    let q = quality_measures(mesh, field)?;
    let d = mesh.dim();
    let df = d as f64;
    let c_phi = reference_gradient_constant(d);
    let patchwise = (df + 1.0) * c_phi * max_patch_sum(mesh, |k| data[k].volume * data[k].norm);
    let n = mesh.num_elements() as f64;
    let combined = max_patch_sum(mesh, |k| {
        data[k].volume * (q.q_ali[k].powi(d as i32 - 1) * q.q_eq[k]).powf(2.0 / df)
    });
    let quality_form = (df + 1.0) * c_phi * df * (n / q.sigma_h).powf(2.0 / df) * combined;
    Ok(LambdaMaxGeometric {
        patchwise,
        quality_form,
    })
}

/// Calibrated constants of the `lambda_min` lower bounds for one dimension.
///
/// `c` multiplies the bound on `lambda_min(A)` and `c_scaled` the bound on
/// `lambda_min(S^{-1} A S^{-1})`. Both are fitted so that the bound is exact
/// on the uniform reference mesh with `n_ref` subdivisions per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstant {
    pub dim: usize,
    pub c: f64,
    pub c_scaled: f64,
    /// Diffusion field used for calibration.
    pub field: String,
    pub n_ref: usize,
    /// Elements of the reference mesh.
    pub n_elements: usize,
}

impl CalibrationConstant {
    pub fn new(dim: usize, c: f64, c_scaled: f64) -> Result<Self> {
        let cal = CalibrationConstant {
            dim,
            c,
            c_scaled,
            field: "identity".into(),
            n_ref: 0,
            n_elements: 0,
        };
        cal.validate()?;
        Ok(cal)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::invalid(format!(
                "calibration dimension {} not in 1..=3",
                self.dim
            )));
        }
        for (name, v) in [("c", self.c), ("c_scaled", self.c_scaled)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "calibration constant {name} = {v} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("calibration serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let cal: CalibrationConstant = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| {
                text[..s.start.min(text.len())].matches('\n').count() + 1
            });
            Error::parse(line, e.message().to_string())
        })?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    fn check_dim(&self, mesh: &SimplicialMesh) -> Result<()> {
        if self.dim != mesh.dim() {
            return Err(Error::DimensionMismatch {
                expected: mesh.dim(),
                found: self.dim,
            });
        }
        Ok(())
    }
}

/// Pieces of the `lambda_min` and condition number bounds, without constants.
struct Factors {
    d_min: f64,
    n: f64,
    /// `1`, `1 + ln(k_bar / k_min)`, or `((1/N) sum (k_bar/|K|)^{(d-2)/2})^{2/d}`.
    volume: f64,
    /// `(N^{1-2/d} / d_min) max_j sum_{K in omega_j} |K| ||M_K||`.
    d_unscaled: f64,
    /// `((1/(N d_min^{d/2})) sum |K| ||M_K||^{d/2})^{2/d}`, or in 1D
    /// `(1/(N d_min)) sum D_K k_bar / |K|`.
    d_scaled: f64,
    /// `1 + |ln(max ||M_K|| / sum |K| ||M_K||)|` in 2D, else 1.
    log_scaled: f64,
}

fn factors(mesh: &SimplicialMesh, field: &DiffusionField) -> Result<Factors> {
    let data = element_data(mesh, field)?;
    let d = mesh.dim();
    let df = d as f64;
    let n = data.len() as f64;
    let (d_min, _) = field.spectral_bounds(mesh)?;
    let total: f64 = data.iter().map(|e| e.volume).sum();
    let k_bar = total / n;
    let k_min = data.iter().map(|e| e.volume).fold(f64::INFINITY, f64::min);
    let volume = match d {
        1 => 1.0,
        2 => 1.0 + (k_bar / k_min).ln(),
        _ => {
            let avg = data
                .iter()
                .map(|e| (k_bar / e.volume).powf((df - 2.0) / 2.0))
                .sum::<f64>()
                / n;
            avg.powf(2.0 / df)
        }
    };
    let d_unscaled =
        n.powf(1.0 - 2.0 / df) / d_min * max_patch_sum(mesh, |k| data[k].volume * data[k].norm);
    let d_scaled = if d == 1 {
        data.iter()
            .map(|e| e.diffusion.get(0, 0) * k_bar / e.volume)
            .sum::<f64>()
            / (n * d_min)
    } else {
        let s: f64 = data.iter().map(|e| e.volume * e.norm.powf(df / 2.0)).sum();
        (s / (n * d_min.powf(df / 2.0))).powf(2.0 / df)
    };
    let log_scaled = if d == 2 {
        let max = data.iter().map(|e| e.norm).fold(0.0, f64::max);
        let weighted: f64 = data.iter().map(|e| e.volume * e.norm).sum();
        1.0 + (max / weighted).ln().abs()
    } else {
        1.0
    };
    Ok(Factors {
        d_min,
        n,
        volume,
        d_unscaled,
        d_scaled,
        log_scaled,
    })
}

impl Factors {
    /// Lower bound on `lambda_min` with unit constant.
    fn lambda_min(&self, scaled: bool, d: usize) -> f64 {
        if !scaled {
            return self.d_min / self.n / self.volume;
        }
        if d == 1 {
            1.0 / (self.n * self.n * self.d_scaled)
        } else {
            self.n.powf(-2.0 / d as f64) / self.d_scaled / self.log_scaled
        }
    }
}

/// Lower bound on `lambda_min(A)`, or on `lambda_min(S^{-1} A S^{-1})` when `scaled`.
pub fn lambda_min_bound(
    mesh: &SimplicialMesh,
    field: &DiffusionField,
    cal: &CalibrationConstant,
    scaled: bool,
) -> Result<f64> {
    cal.check_dim(mesh)?;
    let f = factors(mesh, field)?;
    let c = if scaled { cal.c_scaled } else { cal.c };
    Ok(c * f.lambda_min(scaled, mesh.dim()))
}

/// Fits both constants on the uniform mesh of `[0, 1]^dim` with `n_ref` subdivisions per axis.
pub fn calibrate_constant(
    dim: usize,
    field: &DiffusionField,
    n_ref: usize,
) -> Result<CalibrationConstant> {
    let mesh = generate_uniform_mesh(dim, n_ref)?;
    if mesh.num_interior_vertices() < 3 {
        return Err(Error::invalid(format!(
            "calibration mesh with n_ref = {n_ref} has {} interior vertices, need at least 3",
            mesh.num_interior_vertices()
        )));
    }
    let a = assemble_stiffness(&mesh, field)?;
    let scaled = apply_symmetric_scaling(&a, &jacobi_scaling(&a)?)?;
    let exact = extreme_eigenvalues(&a, DEFAULT_REL_TOL)?;
    let exact_scaled = extreme_eigenvalues(&scaled, DEFAULT_REL_TOL)?;
    let f = factors(&mesh, field)?;
    let cal = CalibrationConstant {
        dim,
        c: exact.lambda_min / f.lambda_min(false, dim),
        c_scaled: exact_scaled.lambda_min / f.lambda_min(true, dim),
        field: field.to_string(),
        n_ref,
        n_elements: mesh.num_elements(),
    };
    cal.validate()?;
    Ok(cal)
}

/// Exact spectra alongside every estimate for one mesh and field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionBoundReport {
    pub dim: usize,
    pub num_elements: usize,
    pub num_unknowns: usize,
    pub exact: SpectralResult,
    pub exact_scaled: SpectralResult,
    pub est_lambda_max: [f64; 2],
    pub est_lambda_max_scaled: [f64; 2],
    /// Patchwise geometric upper bound on `lambda_max(A)`.
    pub lambda_max_geometric: f64,
    pub est_lambda_min: f64,
    pub est_lambda_min_scaled: f64,
    /// `(d+1) max_j A_jj / est_lambda_min`.
    pub est_kappa: f64,
    /// `(d+1) / est_lambda_min_scaled`.
    pub est_kappa_scaled: f64,
    /// `lambda_max_geometric / est_lambda_min`, which factors as
    /// `((d+1) C_phi / c) * factor_base * factor_d_nonuniformity * factor_volume`.
    pub est_kappa_geometric: f64,
    /// `N^{2/d}`.
    pub factor_base: f64,
    pub factor_d_nonuniformity: f64,
    pub factor_volume: f64,
    /// `est_kappa_scaled = ((d+1) / c_scaled) * factor_base * factor_d_nonuniformity_scaled * factor_log_scaled`
    /// for `d >= 2`; in 1D the base is `N^2` instead.
    pub factor_d_nonuniformity_scaled: f64,
    pub factor_log_scaled: f64,
}

impl ConditionBoundReport {
    /// Two-sided envelope checks on `lambda_max` that failed, allowing for the
    /// eigenvalue tolerance.
    pub fn envelope_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, v: f64, [lo, hi]: [f64; 2], tol: f64| {
            let slack = 4.0 * tol.max(f64::EPSILON);
            if v < lo * (1.0 - slack) || v > hi * (1.0 + slack) {
                out.push(format!("{name} = {v:.10e} outside [{lo:.10e}, {hi:.10e}]"));
            }
        };
        check(
            "lambda_max(A)",
            self.exact.lambda_max,
            self.est_lambda_max,
            self.exact.rel_tol_achieved,
        );
        check(
            "lambda_max(S^-1 A S^-1)",
            self.exact_scaled.lambda_max,
            self.est_lambda_max_scaled,
            self.exact_scaled.rel_tol_achieved,
        );
        out
    }
}

pub fn condition_bounds(
    mesh: &SimplicialMesh,
    field: &DiffusionField,
    cal: &CalibrationConstant,
) -> Result<ConditionBoundReport> {
    condition_bounds_with_tol(mesh, field, cal, DEFAULT_REL_TOL)
}

pub fn condition_bounds_with_tol(
    mesh: &SimplicialMesh,
    field: &DiffusionField,
    cal: &CalibrationConstant,
    rel_tol: f64,
) -> Result<ConditionBoundReport> {
    cal.check_dim(mesh)?;
    let d = mesh.dim();
    let df = d as f64;
    let a = assemble_stiffness(mesh, field)?;
    let scaled = apply_symmetric_scaling(&a, &jacobi_scaling(&a)?)?;
    let exact = extreme_eigenvalues(&a, rel_tol)?;
    let exact_scaled = extreme_eigenvalues(&scaled, rel_tol)?;
    let f = factors(mesh, field)?;
    let geometric = lambda_max_geometric_bound(mesh, field)?;
    let est_lambda_max = lambda_max_bounds(&a.diagonal(), d);
    let est_lambda_min = cal.c * f.lambda_min(false, d);
    let est_lambda_min_scaled = cal.c_scaled * f.lambda_min(true, d);
    Ok(ConditionBoundReport {
        dim: d,
        num_elements: mesh.num_elements(),
        num_unknowns: a.order(),
        exact,
        exact_scaled,
        est_lambda_max,
        est_lambda_max_scaled: lambda_max_bounds_scaled(d),
        lambda_max_geometric: geometric.patchwise,
        est_lambda_min,
        est_lambda_min_scaled,
        est_kappa: est_lambda_max[1] / est_lambda_min,
        est_kappa_scaled: (df + 1.0) / est_lambda_min_scaled,
        est_kappa_geometric: geometric.patchwise / est_lambda_min,
        factor_base: f.n.powf(2.0 / df),
        factor_d_nonuniformity: f.d_unscaled,
        factor_volume: f.volume,
        factor_d_nonuniformity_scaled: f.d_scaled,
        factor_log_scaled: f.log_scaled,
    })
}

/// Bound on `kappa(S^{-1} A S^{-1})` for a mesh that is uniform in the metric
/// `M` (one SPD tensor per element):
/// `(C / d_min) (N / sigma_{h,M})^{2/d} (sum |K| ||M_K D_K||_2^{d/2})^{2/d}`
/// with `sigma_{h,M} = sum |K| det(M_K)^{1/2}` and `C = (d+1) / c_scaled`.
pub fn m_uniform_bound(
    mesh: &SimplicialMesh,
    field: &DiffusionField,
    metric: &[SmallMatrix],
    cal: &CalibrationConstant,
) -> Result<f64> {
    cal.check_dim(mesh)?;
    let data = element_data(mesh, field)?;
    if metric.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: metric.len(),
        });
    }
    if let Some(k) = metric
        .iter()
        .position(|m| m.dim() != mesh.dim() || !m.is_spd())
    {
        return Err(Error::invalid(format!(
            "metric tensor of element {k} is not SPD of the mesh dimension"
        )));
    }
    let df = mesh.dim() as f64;
    let n = data.len() as f64;
    let (d_min, _) = field.spectral_bounds(mesh)?;
    let sigma_m: f64 = data
        .iter()
        .zip(metric)
        .map(|(e, m)| e.volume * m.determinant().sqrt())
        .sum();
    let s: f64 = data
        .iter()
        .zip(metric)
        .map(|(e, m)| e.volume * (*m * e.diffusion).spectral_norm().powf(df / 2.0))
        .sum();
    let c = (df + 1.0) / cal.c_scaled;
    Ok(c / d_min * (n / sigma_m).powf(2.0 / df) * s.powf(2.0 / df))
}

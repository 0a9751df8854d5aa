//! Parameter studies over the generated mesh families, written as CSV.
//!
//! A study is described by a small TOML file:
//!
//! ```toml
//! case = "skew2d-aspect"
//! n = 100
//! aspect_values = [4, 8, 16, 32, 64, 128]
//! field = "identity"
//! tol = 1e-8
//! calibration = "auto"
//! ```
//!
//! `n`-sweeps (`chebyshev`, `uniform`, `skew2d-n`, `skew3d-n`) take
//! `n_values` and, for the skew families, a fixed `aspect`. Aspect sweeps take
//! `aspect_values` and a fixed `n`. `uniform` also needs `dim`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assembly::{apply_symmetric_scaling, assemble_mass, assemble_stiffness, jacobi_scaling};
use crate::bounds::{
    calibrate_constant, condition_bounds_with_tol, mass_condition_bounds, quality_measures,
    CalibrationConstant, ConditionBoundReport,
};
use crate::diffusion::DiffusionField;
use crate::error::{Error, Result};
use crate::mesh::{
    generate_chebyshev_mesh, generate_skew_mesh_2d, generate_skew_mesh_3d, generate_uniform_mesh,
    SimplicialMesh,
};
use crate::spectral::{extreme_eigenvalues, DEFAULT_REL_TOL};

/// Largest number of unknowns of the automatic calibration mesh.
pub const AUTO_CALIBRATION_MAX_UNKNOWNS: usize = 2000;

/// Mesh families accepted by `generate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    Uniform,
    Chebyshev,
    Skew2d,
    Skew3d,
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MeshFamily::Uniform),
            "chebyshev" => Ok(MeshFamily::Chebyshev),
            "skew2d" => Ok(MeshFamily::Skew2d),
            "skew3d" => Ok(MeshFamily::Skew3d),
            _ => Err(Error::invalid(format!(
                "unknown mesh family {s:?} (expected uniform, chebyshev, skew2d or skew3d)"
            ))),
        }
    }
}

/// Builds a member of `family`. `n` is the number of elements for
/// `chebyshev` and the number of subdivisions per axis otherwise; `dim` is
/// only read for `uniform` and `aspect` only for the skew families.
pub fn generate_family_mesh(
    family: MeshFamily,
    n: usize,
    aspect: f64,
    dim: usize,
) -> Result<SimplicialMesh> {
    match family {
        MeshFamily::Uniform => generate_uniform_mesh(dim, n),
        MeshFamily::Chebyshev => generate_chebyshev_mesh(n),
        MeshFamily::Skew2d => generate_skew_mesh_2d(n, aspect),
        MeshFamily::Skew3d => generate_skew_mesh_3d(n, aspect),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyCase {
    Chebyshev,
    Uniform,
    #[serde(rename = "skew2d-n")]
    Skew2dN,
    #[serde(rename = "skew2d-aspect")]
    Skew2dAspect,
    #[serde(rename = "skew3d-n")]
    Skew3dN,
    #[serde(rename = "skew3d-aspect")]
    Skew3dAspect,
}

impl StudyCase {
    fn name(self) -> &'static str {
        match self {
            StudyCase::Chebyshev => "chebyshev",
            StudyCase::Uniform => "uniform",
            StudyCase::Skew2dN => "skew2d-n",
            StudyCase::Skew2dAspect => "skew2d-aspect",
            StudyCase::Skew3dN => "skew3d-n",
            StudyCase::Skew3dAspect => "skew3d-aspect",
        }
    }

    fn sweeps_aspect(self) -> bool {
        matches!(self, StudyCase::Skew2dAspect | StudyCase::Skew3dAspect)
    }
}

impl fmt::Display for StudyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub case: StudyCase,
    /// Dimension of a `uniform` study; implied by the other cases.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub aspect_values: Vec<f64>,
    /// Fixed subdivisions of an aspect sweep.
    #[serde(default)]
    pub n: Option<usize>,
    /// Fixed aspect of a skew `n`-sweep.
    #[serde(default)]
    pub aspect: Option<f64>,
    #[serde(default = "default_field")]
    pub field: String,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// `auto` or the path of a calibration file.
    #[serde(default = "default_calibration")]
    pub calibration: String,
}

fn default_field() -> String {
    "identity".into()
}

fn default_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn default_calibration() -> String {
    "auto".into()
}

/// One sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Point {
    n: usize,
    aspect: f64,
}

impl StudyConfig {
    /// An `n`-sweep with default field, tolerance and automatic calibration.
    pub fn n_sweep(case: StudyCase, n_values: Vec<usize>) -> Self {
        StudyConfig {
            case,
            dim: None,
            n_values,
            aspect_values: Vec::new(),
            n: None,
            aspect: None,
            field: default_field(),
            tol: default_tol(),
            calibration: default_calibration(),
        }
    }

    /// An aspect sweep at fixed `n`.
    pub fn aspect_sweep(case: StudyCase, n: usize, aspect_values: Vec<f64>) -> Self {
        StudyConfig {
            n: Some(n),
            aspect_values,
            ..Self::n_sweep(case, Vec::new())
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| {
                text[..s.start.min(text.len())].matches('\n').count() + 1
            });
            Error::parse(line, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative calibration path is resolved against
    /// the directory of the config file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        if cfg.calibration != "auto" && Path::new(&cfg.calibration).is_relative() {
            if let Some(dir) = path.parent() {
                cfg.calibration = dir.join(&cfg.calibration).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn dimension(&self) -> usize {
        match self.case {
            StudyCase::Chebyshev => 1,
            StudyCase::Uniform => self.dim.unwrap_or(2),
            StudyCase::Skew2dN | StudyCase::Skew2dAspect => 2,
            StudyCase::Skew3dN | StudyCase::Skew3dAspect => 3,
        }
    }

    pub fn diffusion_field(&self) -> Result<DiffusionField> {
        DiffusionField::parse(&self.field, self.dimension())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.case == StudyCase::Uniform {
            match self.dim {
                Some(1..=3) => {}
                other => return bad(format!("uniform study needs dim in 1..=3, got {other:?}")),
            }
        } else if let Some(d) = self.dim {
            if d != self.dimension() {
                return bad(format!(
                    "case {} is {}-dimensional, got dim = {d}",
                    self.case,
                    self.dimension()
                ));
            }
        }
        if self.case.sweeps_aspect() {
            if self.aspect_values.is_empty() {
                return bad(format!("case {} needs a nonempty aspect_values", self.case));
            }
            if !self.aspect_values.windows(2).all(|w| w[0] < w[1]) {
                return bad("aspect_values must be strictly increasing".into());
            }
            if self
                .aspect_values
                .iter()
                .any(|a| !(*a >= 1.0 && a.is_finite()))
            {
                return bad("aspect values must be finite and >= 1".into());
            }
            if self.n.is_none() {
                return bad(format!("case {} needs a fixed n", self.case));
            }
        } else {
            if self.n_values.is_empty() {
                return bad(format!("case {} needs a nonempty n_values", self.case));
            }
            if !self.n_values.windows(2).all(|w| w[0] < w[1]) {
                return bad("n_values must be strictly increasing".into());
            }
            if matches!(self.case, StudyCase::Skew2dN | StudyCase::Skew3dN) && self.aspect.is_none()
            {
                return bad(format!("case {} needs a fixed aspect", self.case));
            }
        }
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return bad(format!("tol {} not in (0, 1e-4]", self.tol));
        }
        self.diffusion_field()?;
        Ok(())
    }

    fn points(&self) -> Vec<Point> {
        if self.case.sweeps_aspect() {
            let n = self.n.unwrap_or(0);
            self.aspect_values
                .iter()
                .map(|&aspect| Point { n, aspect })
                .collect()
        } else {
            let aspect = self.aspect.unwrap_or(1.0);
            self.n_values.iter().map(|&n| Point { n, aspect }).collect()
        }
    }

    fn mesh(&self, p: Point) -> Result<SimplicialMesh> {
        match self.case {
            StudyCase::Chebyshev => generate_chebyshev_mesh(p.n),
            StudyCase::Uniform => generate_uniform_mesh(self.dimension(), p.n),
            StudyCase::Skew2dN | StudyCase::Skew2dAspect => generate_skew_mesh_2d(p.n, p.aspect),
            StudyCase::Skew3dN | StudyCase::Skew3dAspect => generate_skew_mesh_3d(p.n, p.aspect),
        }
    }

    fn load_calibration(&self) -> Result<CalibrationConstant> {
        let dim = self.dimension();
        let cal = if self.calibration == "auto" {
            auto_calibration(dim, &self.diffusion_field()?)?
        } else {
            CalibrationConstant::read(&self.calibration)?
        };
        if cal.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: cal.dim,
            });
        }
        Ok(cal)
    }
}

/// Subdivisions of the largest uniform mesh with at most
/// [`AUTO_CALIBRATION_MAX_UNKNOWNS`] interior vertices.
pub fn auto_calibration_n(dim: usize) -> usize {
    let mut n = 2;
    while (n as u64).pow(dim as u32) <= AUTO_CALIBRATION_MAX_UNKNOWNS as u64 {
        n += 1;
    }
    n
}

pub fn auto_calibration(dim: usize, field: &DiffusionField) -> Result<CalibrationConstant> {
    calibrate_constant(dim, field, auto_calibration_n(dim))
}

/// One study point: exact spectra, estimates and the factors they are built from.
///
/// Columns appear in the CSV in declaration order. `n` is the element count
/// of a Chebyshev mesh and the subdivisions per axis otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub case: String,
    pub dim: usize,
    pub n: usize,
    pub aspect: f64,
    pub num_elements: usize,
    pub num_unknowns: usize,
    pub max_shape_ratio: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub lambda_min_scaled: f64,
    pub lambda_max_scaled: f64,
    pub kappa_scaled: f64,
    pub est_lambda_min: f64,
    pub est_lambda_max_lower: f64,
    pub est_lambda_max_upper: f64,
    pub est_lambda_max_geometric: f64,
    pub est_kappa: f64,
    pub est_kappa_geometric: f64,
    pub est_lambda_min_scaled: f64,
    pub est_kappa_scaled: f64,
    pub factor_base: f64,
    pub factor_d_nonuniformity: f64,
    pub factor_volume: f64,
    pub factor_d_nonuniformity_scaled: f64,
    pub factor_log_scaled: f64,
    pub kappa_mass: f64,
    pub kappa_mass_scaled: f64,
    pub est_kappa_mass_lower: f64,
    pub est_kappa_mass_upper: f64,
    /// Condition number of the uniform mesh with the same `dim` and `n`.
    pub kappa_uniform: f64,
    pub q_ali_max: f64,
    pub rel_tol_achieved: f64,
    /// Every exact value lies inside its two-sided bound.
    pub envelope_ok: bool,
    pub converged: bool,
}

/// Result of [`run_study`].
#[derive(Clone, Debug, PartialEq)]
pub struct StudyOutput {
    pub calibration: CalibrationConstant,
    pub rows: Vec<StudyRow>,
}

impl StudyOutput {
    pub fn column<'a>(&'a self, f: impl Fn(&StudyRow) -> f64 + 'a) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn all_envelopes_ok(&self) -> bool {
        self.rows.iter().all(|r| r.envelope_ok || !r.converged)
    }
}

/// Analyzes one mesh: exact spectra of `A`, `S^{-1} A S^{-1}`, `B` and
/// `S^{-1} B S^{-1}`, and every bound. Labels are filled with `case = "mesh"`,
/// `n = N` and `aspect = NaN`; `kappa_uniform` is NaN.
pub fn analyze_mesh(
    mesh: &SimplicialMesh,
    field: &DiffusionField,
    cal: &CalibrationConstant,
    tol: f64,
) -> Result<StudyRow> {
    let report = condition_bounds_with_tol(mesh, field, cal, tol)?;
    let b = assemble_mass(mesh)?;
    let mass = extreme_eigenvalues(&b, tol)?;
    let mass_scaled =
        extreme_eigenvalues(&apply_symmetric_scaling(&b, &jacobi_scaling(&b)?)?, tol)?;
    let mb = mass_condition_bounds(mesh)?;
    let q = quality_measures(mesh, field)?;
    let max_shape_ratio = (0..mesh.num_elements())
        .map(|k| mesh.element_geometry(k).map(|g| g.shape_ratio))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let slack = |t: f64| 4.0 * t.max(f64::EPSILON);
    let mass_ok = mass.kappa >= mb.two_sided[0] * (1.0 - slack(mass.rel_tol_achieved))
        && mass.kappa <= mb.two_sided[1] * (1.0 + slack(mass.rel_tol_achieved))
        && mass_scaled.kappa <= mb.scaled_upper * (1.0 + slack(mass_scaled.rel_tol_achieved));
    let envelope_ok = report.envelope_violations().is_empty() && mass_ok;
    let rel_tol_achieved = [report.exact, report.exact_scaled, mass, mass_scaled]
        .iter()
        .map(|r| r.rel_tol_achieved)
        .fold(0.0, f64::max);

    Ok(row_from(
        &report,
        RowExtras {
            case: "mesh".into(),
            n: mesh.num_elements(),
            aspect: f64::NAN,
            max_shape_ratio,
            kappa_mass: mass.kappa,
            kappa_mass_scaled: mass_scaled.kappa,
            mass_bounds: mb.two_sided,
            kappa_uniform: f64::NAN,
            q_ali_max: q.max_q_ali(),
            rel_tol_achieved,
            envelope_ok,
        },
    ))
}

struct RowExtras {
    case: String,
    n: usize,
    aspect: f64,
    max_shape_ratio: f64,
    kappa_mass: f64,
    kappa_mass_scaled: f64,
    mass_bounds: [f64; 2],
    kappa_uniform: f64,
    q_ali_max: f64,
    rel_tol_achieved: f64,
    envelope_ok: bool,
}

fn row_from(r: &ConditionBoundReport, x: RowExtras) -> StudyRow {
    StudyRow {
        case: x.case,
        dim: r.dim,
        n: x.n,
        aspect: x.aspect,
        num_elements: r.num_elements,
        num_unknowns: r.num_unknowns,
        max_shape_ratio: x.max_shape_ratio,
        lambda_min: r.exact.lambda_min,
        lambda_max: r.exact.lambda_max,
        kappa: r.exact.kappa,
        lambda_min_scaled: r.exact_scaled.lambda_min,
        lambda_max_scaled: r.exact_scaled.lambda_max,
        kappa_scaled: r.exact_scaled.kappa,
        est_lambda_min: r.est_lambda_min,
        est_lambda_max_lower: r.est_lambda_max[0],
        est_lambda_max_upper: r.est_lambda_max[1],
        est_lambda_max_geometric: r.lambda_max_geometric,
        est_kappa: r.est_kappa,
        est_kappa_geometric: r.est_kappa_geometric,
        est_lambda_min_scaled: r.est_lambda_min_scaled,
        est_kappa_scaled: r.est_kappa_scaled,
        factor_base: r.factor_base,
        factor_d_nonuniformity: r.factor_d_nonuniformity,
        factor_volume: r.factor_volume,
        factor_d_nonuniformity_scaled: r.factor_d_nonuniformity_scaled,
        factor_log_scaled: r.factor_log_scaled,
        kappa_mass: x.kappa_mass,
        kappa_mass_scaled: x.kappa_mass_scaled,
        est_kappa_mass_lower: x.mass_bounds[0],
        est_kappa_mass_upper: x.mass_bounds[1],
        kappa_uniform: x.kappa_uniform,
        q_ali_max: x.q_ali_max,
        rel_tol_achieved: x.rel_tol_achieved,
        envelope_ok: x.envelope_ok,
        converged: true,
    }
}

/// A row whose eigenvalue iteration failed: labels only, numbers NaN.
fn failed_row(case: StudyCase, dim: usize, p: Point, mesh: &SimplicialMesh) -> StudyRow {
    let nan = f64::NAN;
    StudyRow {
        case: case.to_string(),
        dim,
        n: p.n,
        aspect: p.aspect,
        num_elements: mesh.num_elements(),
        num_unknowns: mesh.num_interior_vertices(),
        max_shape_ratio: nan,
        lambda_min: nan,
        lambda_max: nan,
        kappa: nan,
        lambda_min_scaled: nan,
        lambda_max_scaled: nan,
        kappa_scaled: nan,
        est_lambda_min: nan,
        est_lambda_max_lower: nan,
        est_lambda_max_upper: nan,
        est_lambda_max_geometric: nan,
        est_kappa: nan,
        est_kappa_geometric: nan,
        est_lambda_min_scaled: nan,
        est_kappa_scaled: nan,
        factor_base: nan,
        factor_d_nonuniformity: nan,
        factor_volume: nan,
        factor_d_nonuniformity_scaled: nan,
        factor_log_scaled: nan,
        kappa_mass: nan,
        kappa_mass_scaled: nan,
        est_kappa_mass_lower: nan,
        est_kappa_mass_upper: nan,
        kappa_uniform: nan,
        q_ali_max: nan,
        rel_tol_achieved: nan,
        envelope_ok: false,
        converged: false,
    }
}

/// Runs every sweep point in order. A point whose eigenvalue iteration does
/// not converge is kept as a flagged row; other errors abort the study.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    config.validate()?;
    let field = config.diffusion_field()?;
    let calibration = config.load_calibration()?;
    let dim = config.dimension();
    let mut rows = Vec::new();
    for p in config.points() {
        let mesh = config.mesh(p)?;
        match analyze_mesh(&mesh, &field, &calibration, config.tol) {
            Ok(mut row) => {
                row.case = config.case.to_string();
                row.n = p.n;
                row.aspect = p.aspect;
                row.kappa_uniform = if config.case == StudyCase::Uniform {
                    row.kappa
                } else {
                    let uniform = match config.case {
                        StudyCase::Chebyshev => generate_uniform_mesh(1, p.n)?,
                        _ => generate_uniform_mesh(dim, p.n)?,
                    };
                    extreme_eigenvalues(&assemble_stiffness(&uniform, &field)?, config.tol)?.kappa
                };
                rows.push(row);
            }
            Err(Error::Convergence { .. }) => rows.push(failed_row(config.case, dim, p, &mesh)),
            Err(e) => return Err(e),
        }
    }
    Ok(StudyOutput { calibration, rows })
}

/// Writes rows with a header line, columns in [`StudyRow`] field order.
pub fn write_csv(rows: &[StudyRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[StudyRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("log-log fit needs positive finite data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "log-log fit needs at least two distinct x values",
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Resolves `auto` or a path into a calibration for `dim`.
pub fn resolve_calibration(
    spec: Option<&Path>,
    dim: usize,
    field: &DiffusionField,
) -> Result<CalibrationConstant> {
    match spec {
        Some(p) if p != Path::new("auto") => {
            let cal = CalibrationConstant::read(p)?;
            if cal.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: cal.dim,
                });
            }
            Ok(cal)
        }
        _ => auto_calibration(dim, field),
    }
}

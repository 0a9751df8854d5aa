//! `meshcond` command-line front end.
//!
//! Exit status: 0 on success, 2 when an exact value falls outside one of its
//! two-sided bounds, 1 on usage or I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use meshcond::experiments::{resolve_calibration, write_csv_file};
use meshcond::{
    analyze_mesh, calibrate_constant, generate_family_mesh, read_mesh, run_study, write_mesh,
    DiffusionField, MeshFamily, StudyConfig, StudyRow,
};

const EXIT_VIOLATION: u8 = 2;
const EXIT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "meshcond",
    version,
    about = "Conditioning of P1 finite element matrices on simplicial meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a member of a mesh family.
    Generate(GenerateArgs),
    /// Exact spectra and bounds for one mesh.
    Analyze(AnalyzeArgs),
    /// Run a parameter study described by a TOML config.
    Study(StudyArgs),
    /// Fit the calibration constants on a uniform mesh.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// uniform, chebyshev, skew2d or skew3d
    #[arg(long = "case")]
    family: String,
    /// Elements (chebyshev) or subdivisions per axis.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    aspect: f64,
    /// Dimension of a uniform mesh.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value = "identity")]
    field: String,
    /// Calibration file, or `auto`.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, default_value_t = meshcond::spectral::DEFAULT_REL_TOL)]
    tol: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value = "identity")]
    field: String,
    #[arg(long = "n-ref")]
    n_ref: usize,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Returns `Ok(false)` when some envelope check failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Analyze(a) => analyze(a),
        Command::Study(a) => study(a),
        Command::Calibrate(a) => calibrate(a).map(|_| true),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let family: MeshFamily = a.family.parse()?;
    let mesh = generate_family_mesh(family, a.n, a.aspect, a.dim)?;
    write_mesh(&mesh, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    println!(
        "wrote {}: dim {}, {} vertices, {} elements, {} interior",
        a.output.display(),
        mesh.dim(),
        mesh.num_vertices(),
        mesh.num_elements(),
        mesh.num_interior_vertices()
    );
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<bool> {
    let mesh = read_mesh(&a.mesh).with_context(|| format!("reading {}", a.mesh.display()))?;
    let field = DiffusionField::parse(&a.field, mesh.dim())?;
    let cal = resolve_calibration(a.calibration.as_deref(), mesh.dim(), &field)?;
    let row = analyze_mesh(&mesh, &field, &cal, a.tol)?;
    print_summary(&row, &mut std::io::stdout().lock())?;
    if let Some(path) = &a.csv {
        write_rows(std::slice::from_ref(&row), path)?;
    }
    if !row.envelope_ok {
        eprintln!("envelope violation: an exact value lies outside its bound");
    }
    Ok(row.envelope_ok)
}

fn study(a: StudyArgs) -> Result<bool> {
    let config = StudyConfig::from_file(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    let out = run_study(&config)?;
    write_rows(&out.rows, &a.csv)?;
    let failed = out.rows.iter().filter(|r| !r.converged).count();
    println!(
        "{}: {} rows written to {} (c = {:.6}, c_scaled = {:.6})",
        config.case,
        out.rows.len(),
        a.csv.display(),
        out.calibration.c,
        out.calibration.c_scaled
    );
    if failed > 0 {
        eprintln!("{failed} rows did not converge");
    }
    let ok = out.all_envelopes_ok();
    if !ok {
        eprintln!("envelope violation in at least one row");
    }
    Ok(ok)
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let field = DiffusionField::parse(&a.field, a.dim)?;
    let cal = calibrate_constant(a.dim, &field, a.n_ref)?;
    cal.write(&a.output)
        .with_context(|| format!("writing {}", a.output.display()))?;
    println!("c = {:.12}\nc_scaled = {:.12}", cal.c, cal.c_scaled);
    Ok(())
}

fn write_rows(rows: &[StudyRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        if !dir.is_dir() {
            bail!("directory {} does not exist", dir.display());
        }
    }
    write_csv_file(rows, path).with_context(|| format!("writing {}", path.display()))
}

fn print_summary(r: &StudyRow, w: &mut impl Write) -> Result<()> {
    writeln!(
        w,
        "dim {}  elements {}  unknowns {}",
        r.dim, r.num_elements, r.num_unknowns
    )?;
    writeln!(
        w,
        "kappa(A)            {:.6e}  estimate {:.6e}",
        r.kappa, r.est_kappa
    )?;
    writeln!(
        w,
        "kappa(S^-1 A S^-1)  {:.6e}  estimate {:.6e}",
        r.kappa_scaled, r.est_kappa_scaled
    )?;
    writeln!(
        w,
        "lambda_max(A)       {:.6e}  in [{:.6e}, {:.6e}]",
        r.lambda_max, r.est_lambda_max_lower, r.est_lambda_max_upper
    )?;
    writeln!(
        w,
        "lambda_min(A)       {:.6e}  estimate {:.6e}",
        r.lambda_min, r.est_lambda_min
    )?;
    writeln!(
        w,
        "kappa(B)            {:.6e}  in [{:.6e}, {:.6e}]",
        r.kappa_mass, r.est_kappa_mass_lower, r.est_kappa_mass_upper
    )?;
    writeln!(
        w,
        "envelope            {}",
        if r.envelope_ok { "ok" } else { "VIOLATED" }
    )?;
    Ok(())
}

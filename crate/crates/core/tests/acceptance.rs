//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use meshcond::bounds::{alignment_measure, lambda_max_bounds_scaled, lambda_min_bound};
use meshcond::experiments::auto_calibration;
use meshcond::mesh::ElementShape;
use meshcond::spectral::DEFAULT_REL_TOL;
use meshcond::{
    apply_symmetric_scaling, assemble_mass, assemble_stiffness, dense_eigenvalues,
    extreme_eigenvalues, fit_loglog_slope, generate_chebyshev_mesh, generate_skew_mesh_2d,
    generate_skew_mesh_3d, generate_uniform_mesh, jacobi_scaling, lambda_max_bounds,
    mass_condition_bounds, quality_measures, run_study, DiffusionField, SimplicialMesh,
    SmallMatrix, SparseSymmetricMatrix, StudyCase, StudyConfig, StudyOutput,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn id(d: usize) -> DiffusionField {
    DiffusionField::identity(d).unwrap()
}

fn rotated() -> DiffusionField {
    DiffusionField::rotated(1000.0, 1.0).unwrap()
}

fn scaled(a: &SparseSymmetricMatrix) -> SparseSymmetricMatrix {
    apply_symmetric_scaling(a, &jacobi_scaling(a).unwrap()).unwrap()
}

/// The meshes and fields of the envelope suite.
fn envelope_cases() -> Vec<(String, SimplicialMesh, DiffusionField)> {
    let mut meshes = vec![
        (
            "uniform1d n=64".to_string(),
            generate_uniform_mesh(1, 64).unwrap(),
        ),
        (
            "uniform2d n=16".into(),
            generate_uniform_mesh(2, 16).unwrap(),
        ),
        ("uniform3d n=8".into(), generate_uniform_mesh(3, 8).unwrap()),
    ];
    for n in [64, 256, 1024] {
        meshes.push((
            format!("chebyshev N={n}"),
            generate_chebyshev_mesh(n).unwrap(),
        ));
    }
    for a in [8.0, 125.0] {
        meshes.push((
            format!("skew2d n=32 a={a}"),
            generate_skew_mesh_2d(32, a).unwrap(),
        ));
    }
    meshes.push((
        "skew3d n=8 a=25".into(),
        generate_skew_mesh_3d(8, 25.0).unwrap(),
    ));

    let mut cases = Vec::new();
    for (name, mesh) in meshes {
        let d = mesh.dim();
        if d == 2 {
            cases.push((format!("{name} rotated"), mesh.clone(), rotated()));
        }
        cases.push((format!("{name} identity"), mesh, id(d)));
    }
    cases
}

fn criterion_1() -> Outcome {
    let tol = DEFAULT_REL_TOL;
    let slack =
        |lo: f64, v: f64, hi: f64| lo * (1.0 - 4.0 * tol) <= v && v <= hi * (1.0 + 4.0 * tol);
    let mut checked = 0;
    for (name, mesh, field) in envelope_cases() {
        let d = mesh.dim();
        let a = assemble_stiffness(&mesh, &field).unwrap();
        let b = assemble_mass(&mesh).unwrap();
        let la = extreme_eigenvalues(&a, tol).unwrap();
        let ls = extreme_eigenvalues(&scaled(&a), tol).unwrap();
        let lb = extreme_eigenvalues(&b, tol).unwrap();
        let lbs = extreme_eigenvalues(&scaled(&b), tol).unwrap();
        let [lo, hi] = lambda_max_bounds(&a.diagonal(), d);
        check(
            slack(lo, la.lambda_max, hi),
            format!(
                "{name}: lambda_max(A) {} not in [{lo}, {hi}]",
                la.lambda_max
            ),
        )?;
        let [lo, hi] = lambda_max_bounds_scaled(d);
        check(
            slack(lo, ls.lambda_max, hi),
            format!(
                "{name}: scaled lambda_max {} not in [{lo}, {hi}]",
                ls.lambda_max
            ),
        )?;
        let mb = mass_condition_bounds(&mesh).unwrap();
        let [lo, hi] = mb.two_sided;
        check(
            slack(lo, lb.kappa, hi),
            format!("{name}: kappa(B) {} not in [{lo}, {hi}]", lb.kappa),
        )?;
        check(
            slack(1.0, lbs.kappa, mb.scaled_upper),
            format!("{name}: scaled kappa(B) {}", lbs.kappa),
        )?;
        checked += 1;
    }

    let ns = [8usize, 12, 16, 20];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in ns {
        let mesh = generate_uniform_mesh(3, n).unwrap();
        let a = assemble_stiffness(&mesh, &id(3)).unwrap();
        xs.push(mesh.num_elements() as f64);
        ys.push(extreme_eigenvalues(&a, tol).unwrap().kappa);
    }
    let slope = fit_loglog_slope(&xs, &ys).unwrap();
    check(
        (slope - 2.0 / 3.0).abs() <= 0.15,
        format!("uniform 3D kappa slope {slope:.4}, want 2/3 +- 0.15"),
    )?;
    Ok(format!(
        "{checked} mesh/field pairs, 0 violations; uniform 3D slope {slope:.3}"
    ))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [4usize, 64, 1024] {
        let h = 1.0 / n as f64;
        let mesh = generate_uniform_mesh(1, n).unwrap();
        let a = extreme_eigenvalues(&assemble_stiffness(&mesh, &id(1)).unwrap(), 1e-10).unwrap();
        let b = extreme_eigenvalues(&assemble_mass(&mesh).unwrap(), 1e-10).unwrap();
        let eig = |k: f64| 2.0 / h * (1.0 - (k * PI * h).cos());
        let c = (PI * h).cos();
        let pairs = [
            (a.lambda_min, eig(1.0)),
            (a.lambda_max, eig((n - 1) as f64)),
            (b.kappa, (2.0 + c) / (2.0 - c)),
        ];
        for (got, want) in pairs {
            let err = (got / want - 1.0).abs();
            worst = worst.max(err);
            check(err <= 1e-8, format!("n={n}: {got} vs closed form {want}"))?;
        }
    }
    Ok(format!(
        "n in {{4, 64, 1024}}, worst relative error {worst:.2e}"
    ))
}

fn slopes(out: &StudyOutput, x: impl Fn(&meshcond::StudyRow) -> f64) -> [f64; 4] {
    let xs = out.column(&x);
    let s = |f: fn(&meshcond::StudyRow) -> f64| fit_loglog_slope(&xs, &out.column(f)).unwrap();
    [
        s(|r| r.kappa),
        s(|r| r.kappa_scaled),
        s(|r| r.est_kappa),
        s(|r| r.est_kappa_scaled),
    ]
}

fn require_clean(out: &StudyOutput) -> Result<(), String> {
    check(
        out.rows.iter().all(|r| r.converged),
        "a study row did not converge",
    )?;
    check(out.all_envelopes_ok(), "a study row violates its envelope")
}

fn criterion_3(out: &StudyOutput) -> Outcome {
    require_clean(out)?;
    let [k, ks, e, es] = slopes(out, |r| r.num_elements as f64);
    check((k - 3.0).abs() <= 0.2, format!("kappa(A) slope {k:.4}"))?;
    check(
        (ks - 2.0).abs() <= 0.25,
        format!("scaled kappa slope {ks:.4}"),
    )?;
    check(
        (e - k).abs() <= 0.25,
        format!("estimated kappa slope {e:.4} vs exact {k:.4}"),
    )?;
    check(
        (es - ks).abs() <= 0.25,
        format!("estimated scaled slope {es:.4} vs exact {ks:.4}"),
    )?;
    Ok(format!(
        "slopes exact {k:.3} / {ks:.3}, estimated {e:.3} / {es:.3}"
    ))
}

fn criterion_4(out: &StudyOutput) -> Outcome {
    require_clean(out)?;
    let [k, ..] = slopes(out, |r| r.aspect);
    check(
        (k - 1.0).abs() <= 0.2,
        format!("kappa(A) vs aspect slope {k:.4}"),
    )?;
    let last = out.rows.last().unwrap();
    let factor = last.kappa / last.kappa_scaled;
    check(
        factor >= 5.0,
        format!("scaling gains only {factor:.2}x at aspect {}", last.aspect),
    )?;
    Ok(format!(
        "N = {}, slope {k:.3}, kappa/kappa_scaled = {factor:.1} at aspect {}",
        last.num_elements, last.aspect
    ))
}

fn criterion_5(out: &StudyOutput) -> Outcome {
    require_clean(out)?;
    let ratios: Vec<f64> = out
        .rows
        .iter()
        .map(|r| r.kappa_scaled / r.kappa_uniform)
        .collect();
    for (r, q) in out.rows.iter().zip(&ratios).rev().take(2) {
        check(*q < 3.0, format!("n={}: ratio {q:.3}", r.n))?;
    }
    let shown: Vec<String> = ratios.iter().map(|q| format!("{q:.2}")).collect();
    Ok(format!("ratios [{}]", shown.join(", ")))
}

fn criterion_6(studies: &[&StudyOutput]) -> Outcome {
    let c1 = auto_calibration(1, &id(1)).unwrap();
    check(
        (c1.c / (PI * PI) - 1.0).abs() <= 0.05,
        format!("1D constant {} vs pi^2", c1.c),
    )?;
    let mut checked = 0;
    for out in studies {
        for r in &out.rows {
            check(
                r.est_lambda_min <= r.lambda_min && r.est_lambda_min_scaled <= r.lambda_min_scaled,
                format!(
                    "{} n={} aspect={}: bound above exact",
                    r.case, r.n, r.aspect
                ),
            )?;
            checked += 1;
        }
    }
    for (name, mesh, field) in envelope_cases() {
        if name.starts_with("uniform") {
            continue;
        }
        let cal = auto_calibration(mesh.dim(), &field).unwrap();
        let a = assemble_stiffness(&mesh, &field).unwrap();
        let exact = extreme_eigenvalues(&a, DEFAULT_REL_TOL).unwrap();
        let exact_s = extreme_eigenvalues(&scaled(&a), DEFAULT_REL_TOL).unwrap();
        let lo = lambda_min_bound(&mesh, &field, &cal, false).unwrap();
        let lo_s = lambda_min_bound(&mesh, &field, &cal, true).unwrap();
        check(
            lo <= exact.lambda_min,
            format!("{name}: {lo} > {}", exact.lambda_min),
        )?;
        check(
            lo_s <= exact_s.lambda_min,
            format!("{name}: scaled {lo_s} > {}", exact_s.lambda_min),
        )?;
        checked += 1;
    }
    Ok(format!(
        "c_1D = {:.4} ({:+.2}% from pi^2), {checked} meshes sound",
        c1.c,
        100.0 * (c1.c / (PI * PI) - 1.0)
    ))
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> SmallMatrix {
    let mut g = SmallMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            g.set(i, j, rng.random_range(-1.0..1.0));
        }
    }
    let mut m = g.transpose() * g;
    for i in 0..d {
        m.set(i, i, m.get(i, i) + 1e-3);
    }
    m
}

fn mesh_from(d: usize, pts: &[Vec<f64>], cells: Vec<usize>) -> SimplicialMesh {
    let coords = pts.iter().flatten().copied().collect();
    SimplicialMesh::new(d, coords, cells, vec![true; pts.len()]).unwrap()
}

/// Equilateral lattice mapped by `x -> F x`; uniform in the metric when `F F^T` is a multiple of `D`.
fn mapped_lattice(f: &SmallMatrix, m: usize) -> SimplicialMesh {
    let s3 = 3f64.sqrt();
    let mut pts = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            let p = [i as f64 + 0.5 * j as f64, 0.5 * s3 * j as f64];
            let q = f.mul_vec(&p);
            pts.push(vec![q[0], q[1]]);
        }
    }
    let v = |i: usize, j: usize| j * (m + 1) + i;
    let mut cells = Vec::new();
    for j in 0..m {
        for i in 0..m {
            cells.extend([v(i, j), v(i + 1, j), v(i, j + 1)]);
            cells.extend([v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    mesh_from(2, &pts, cells)
}

/// Symmetric square root of an SPD 2x2 or 3x3 matrix via its eigen decomposition.
fn sqrt_spd(d: &SmallMatrix) -> SmallMatrix {
    let n = d.dim();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| d.row(i).to_vec()).collect();
    // Jacobi rotations; plenty for n <= 3.
    let mut a = rows;
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(i == j)).collect())
        .collect();
    for _ in 0..50 {
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut r = SmallMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            r.set(
                i,
                j,
                (0..n).map(|k| v[i][k] * a[k][k].sqrt() * v[j][k]).sum(),
            );
        }
    }
    r
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_q: f64 = f64::INFINITY;
    for t in 0..1000 {
        let d = 2 + t % 2;
        let pts: Vec<Vec<f64>> = loop {
            let p: Vec<Vec<f64>> = (0..=d)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let m = mesh_from(d, &p, (0..=d).collect());
            if m.volume(0) > 1e-3 {
                break p;
            }
        };
        let mesh = mesh_from(d, &pts, (0..=d).collect());
        let field = DiffusionField::constant(random_spd(&mut rng, d)).unwrap();
        let q = quality_measures(&mesh, &field).unwrap().q_ali[0];
        min_q = min_q.min(q);
        check(q >= 1.0, format!("q_ali = {q} on random element {t}"))?;
    }

    let mut worst_mean: f64 = 0.0;
    let mut meshes: Vec<(SimplicialMesh, DiffusionField)> = envelope_cases()
        .into_iter()
        .map(|(_, m, f)| (m, f))
        .collect();
    for n in [256, 512, 1024, 2048, 4096] {
        meshes.push((generate_chebyshev_mesh(n).unwrap(), id(1)));
    }
    for a in [4.0, 16.0, 64.0, 128.0] {
        meshes.push((generate_skew_mesh_2d(100, a).unwrap(), id(2)));
    }
    for n in [16, 64, 128] {
        meshes.push((generate_skew_mesh_2d(n, 125.0).unwrap(), id(2)));
    }
    for (mesh, field) in &meshes {
        let dev = (quality_measures(mesh, field).unwrap().mean_inverse_q_eq() - 1.0).abs();
        worst_mean = worst_mean.max(dev);
        check(dev <= 1e-12, format!("mean 1/q_eq off by {dev:e}"))?;
    }

    let mut worst_unit: f64 = 0.0;
    for t in 0..20 {
        let d = 2 + t % 2;
        let dm = random_spd(&mut rng, d);
        let field = DiffusionField::constant(dm).unwrap();
        let root = sqrt_spd(&dm);
        let q = if d == 2 {
            let (s, c) = rng.random_range(0.0..PI).sin_cos();
            let rot = SmallMatrix::from_row_major(2, &[c, -s, s, c]);
            quality_measures(&mapped_lattice(&(root * rot), 6), &field).unwrap()
        } else {
            let r = meshcond::mesh::reference_simplex(3);
            let pts: Vec<Vec<f64>> = r
                .iter()
                .map(|p| root.mul_vec(&p[..3])[..3].to_vec())
                .collect();
            quality_measures(&mesh_from(3, &pts, vec![0, 1, 2, 3]), &field).unwrap()
        };
        for (a, e) in q.q_ali.iter().zip(&q.q_eq) {
            worst_unit = worst_unit.max((a - 1.0).abs()).max((e - 1.0).abs());
        }
    }
    check(
        worst_unit <= 1e-10,
        format!("uniform-in-metric measures off by {worst_unit:e}"),
    )?;

    let unit = ElementShape::new(&generate_uniform_mesh(1, 3).unwrap(), 0).unwrap();
    check(
        alignment_measure(&unit.metric_tensor(&SmallMatrix::identity(1))) == 1.0,
        "1D alignment not 1",
    )?;
    Ok(format!(
        "min q_ali {min_q:.4} over 1000 elements, mean 1/q_eq within {worst_mean:.1e} on {} meshes, unit configs within {worst_unit:.1e}",
        meshes.len()
    ))
}

fn criterion_8() -> Outcome {
    let mut mats: Vec<(String, SparseSymmetricMatrix)> = Vec::new();
    let mut push = |name: String, mesh: &SimplicialMesh, field: &DiffusionField| {
        if mesh.num_interior_vertices() > 3000 {
            return;
        }
        let a = assemble_stiffness(mesh, field).unwrap();
        let b = assemble_mass(mesh).unwrap();
        mats.push((format!("{name} S^-1AS^-1"), scaled(&a)));
        mats.push((format!("{name} A"), a));
        mats.push((format!("{name} B"), b));
    };
    for (name, mesh, field) in envelope_cases() {
        push(name, &mesh, &field);
    }
    for n in [4, 256, 512, 2048] {
        push(
            format!("chebyshev N={n}"),
            &generate_chebyshev_mesh(n).unwrap(),
            &id(1),
        );
    }
    for n in [16, 32] {
        push(
            format!("skew2d n={n} a=125"),
            &generate_skew_mesh_2d(n, 125.0).unwrap(),
            &id(2),
        );
    }
    let mut worst: f64 = 0.0;
    for (name, m) in &mats {
        let it = extreme_eigenvalues(m, DEFAULT_REL_TOL).unwrap();
        let dense = dense_eigenvalues(m).unwrap();
        let (lo, hi) = (dense[0], dense[dense.len() - 1]);
        let err = ((it.lambda_min - lo) / lo)
            .abs()
            .max(((it.lambda_max - hi) / hi).abs());
        worst = worst.max(err);
        check(
            err <= 1e-8,
            format!("{name}: relative disagreement {err:e}"),
        )?;
    }
    Ok(format!(
        "{} matrices up to 3000 unknowns, worst relative difference {worst:.1e}",
        mats.len()
    ))
}

fn study(cfg: StudyConfig) -> Result<StudyOutput, String> {
    run_study(&cfg).map_err(|e| e.to_string())
}

fn run(label: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("PASS criterion {label}: {detail} [{secs:.1}s]"),
        Err(why) => println!("FAIL criterion {label}: {why} [{secs:.1}s]"),
    }
    outcome.is_ok()
}

fn main() {
    // Keep panics from interleaving with the report.
    std::panic::set_hook(Box::new(|_| {}));
    let start = Instant::now();
    let mut ok = true;

    ok &= run("1 (envelope suite)", criterion_1);
    ok &= run("2 (closed-form oracle)", criterion_2);

    let mut studies: Vec<StudyOutput> = Vec::new();
    let mut timed_study = |cfg: StudyConfig, check: fn(&StudyOutput) -> Outcome| -> Outcome {
        let out = study(cfg)?;
        let r = check(&out);
        studies.push(out);
        r
    };
    ok &= run("3 (Chebyshev slopes)", || {
        timed_study(
            StudyConfig::n_sweep(StudyCase::Chebyshev, vec![256, 512, 1024, 2048, 4096]),
            criterion_3,
        )
    });
    ok &= run("4 (aspect-ratio linearity)", || {
        let cfg = StudyConfig::aspect_sweep(
            StudyCase::Skew2dAspect,
            100,
            vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
        );
        timed_study(cfg, criterion_4)
    });
    ok &= run("5 (scaled-system comparability)", || {
        let cfg = StudyConfig {
            aspect: Some(125.0),
            ..StudyConfig::n_sweep(StudyCase::Skew2dN, vec![16, 32, 64, 100, 128])
        };
        timed_study(cfg, criterion_5)
    });
    ok &= run("6 (calibration soundness)", || {
        criterion_6(&studies.iter().collect::<Vec<_>>())
    });
    ok &= run("7 (quality-measure identities)", criterion_7);
    ok &= run("8 (solver cross-validation)", criterion_8);

    println!(
        "acceptance: {} in {:.1}s",
        if ok { "all criteria PASS" } else { "FAILURES" },
        start.elapsed().as_secs_f64()
    );
    if !ok {
        std::process::exit(1);
    }
}

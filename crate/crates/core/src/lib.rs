//! Conditioning of linear finite element stiffness and mass matrices for
//! anisotropic diffusion on arbitrary simplicial meshes.
//!
//! The crate assembles the interior-vertex stiffness matrix `A` and mass
//! matrix `B`, computes their extreme eigenvalues, and evaluates a family of
//! a-priori conditioning bounds, with and without Jacobi diagonal scaling.
//!
//! ```
//! use meshcond::{assemble_stiffness, extreme_eigenvalues, generate_uniform_mesh, DiffusionField};
//!
//! let mesh = generate_uniform_mesh(1, 4).unwrap();
//! let field = DiffusionField::identity(1).unwrap();
//! let a = assemble_stiffness(&mesh, &field).unwrap();
//! let spec = extreme_eigenvalues(&a, 1e-10).unwrap();
//! assert!((spec.kappa - 5.828427124746).abs() < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod bounds;
pub mod diffusion;
pub mod error;
pub mod experiments;
pub mod mesh;
pub mod spectral;
pub mod tensor;

pub use assembly::{
    alt_scaling, apply_symmetric_scaling, assemble_mass, assemble_stiffness, jacobi_scaling,
    DiagonalScaling, SparseSymmetricMatrix,
};
pub use bounds::{
    calibrate_constant, condition_bounds, lambda_max_bounds, lambda_max_geometric_bound,
    lambda_min_bound, m_uniform_bound, mass_condition_bounds, quality_measures,
    CalibrationConstant, ConditionBoundReport, LambdaMaxGeometric, MassBounds, QualityMeasures,
};
pub use diffusion::DiffusionField;
pub use error::{Error, Result};
pub use experiments::{
    analyze_mesh, fit_loglog_slope, generate_family_mesh, run_study, write_csv, MeshFamily,
    StudyCase, StudyConfig, StudyOutput, StudyRow,
};
pub use mesh::{
    generate_chebyshev_mesh, generate_skew_mesh_2d, generate_skew_mesh_3d, generate_uniform_mesh,
    mesh_statistics, read_mesh, vertex_patches, write_mesh, ElementGeometry, MeshStatistics,
    SimplicialMesh, VertexPatch,
};
pub use spectral::{cg_iteration_count, dense_eigenvalues, extreme_eigenvalues, SpectralResult};
pub use tensor::SmallMatrix;

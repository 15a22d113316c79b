//! Axisymmetric p-capacitary potentials in circular convex cones.
//!
//! The crate solves the exterior p-Laplace boundary value problem for a
//! sector-like domain (a revolution hypersurface meeting the cone wall
//! orthogonally), and audits the solution against the integral identities
//! and inequalities that characterize the spherical-cap rigidity case.

pub mod audit;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod pipeline;
pub mod quad;
pub mod reference;
pub mod solver;
pub mod spline;

pub use audit::{
    curvature_bound_audit, gamma_estimates, overdetermined_constant, overdetermined_deviation,
    p_function_audit, pohozaev_identity, rigidity_capacity_formula, surface_capacity_identity,
    AuditConfig, CurvatureBoundAudit, GammaEstimates, IdentityRecord, OverdeterminedDeviation,
    PFunctionAudit,
};
pub use error::{Error, Result};
pub use geometry::{
    cone_unit_ball_volume, enclosed_volume, heintze_karcher_deficit, isoperimetric_deficit,
    mean_curvature_at, mean_curvature_profile, orthogonality_residual, sigma_area, ConeSpec,
    OrthogonalityResidual, SigmaCurve, ORTHOGONALITY_TOL,
};
pub use mesh::{build_mesh, Grading, MeridianMesh, MeshParams, NodeTag};
pub use pipeline::{
    geometry_summary, run_pipeline, solve_once, GeometrySummary, IdentityReport, PipelineConfig,
    PipelineResult,
};
pub use reference::{
    decay_exponent, fundamental_solution, radial_model, sphere_capacity,
    truncated_radial_solution, truncated_sphere_capacity,
};
pub use solver::{
    boundary_gradient_on_sigma, capacity_of, energy, energy_gradient_hessian,
    fit_far_field_amplitude, solve_potential, truncation_corrected, truncation_study,
    CapacityEstimate, PotentialField, SigmaGradientSample, SolveReport, SolverConfig, StudyEntry,
    TruncationStudy,
};

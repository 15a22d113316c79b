//! End-to-end pipeline: solve across truncation radii, extrapolate the
//! capacity, build the truncation-corrected field and run every audit.
//! Shared by the command-line runner and the acceptance suite.

use serde::Serialize;

use crate::audit::{
    curvature_bound_audit, gamma_estimates, overdetermined_constant, overdetermined_deviation,
    p_function_audit, pohozaev_identity, rigidity_capacity_formula, surface_capacity_identity,
    AuditConfig, CurvatureBoundAudit, GammaEstimates, IdentityRecord, OverdeterminedDeviation,
    PFunctionAudit,
};
use crate::error::{Error, Result};
use crate::geometry::{
    cone_unit_ball_volume, enclosed_volume, heintze_karcher_deficit, isoperimetric_deficit,
    orthogonality_residual, sigma_area, ConeSpec, OrthogonalityResidual, SigmaCurve,
};
use crate::mesh::MeshParams;
use crate::solver::{
    capacity_of, fit_far_field_amplitude, solve_potential, truncation_corrected, truncation_study,
    CapacityEstimate, PotentialField, SolverConfig, TruncationStudy,
};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mesh: MeshParams,
    pub solver: SolverConfig,
    pub audit: AuditConfig,
    /// Truncation radii for the capacity study (at least 3).
    pub study_radii: Vec<f64>,
}

/// Purely geometric scalar diagnostics, independent of the solve.
#[derive(Debug, Clone, Serialize)]
pub struct GeometrySummary {
    pub dim: usize,
    pub theta_max: f64,
    pub unit_ball_sector_volume: f64,
    pub sigma_area: f64,
    pub enclosed_volume: f64,
    pub isoperimetric_deficit: f64,
    /// None when Sigma is not strictly mean-convex.
    pub heintze_karcher_deficit: Option<f64>,
    pub orthogonality: OrthogonalityResidual,
    pub overdetermined_constant: f64,
    pub rigidity_capacity: f64,
}

/// Everything the audits measured, serializable as the report payload.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub identities: Vec<IdentityRecord>,
    pub gamma: GammaEstimates,
    pub p_function: PFunctionAudit,
    pub curvature: CurvatureBoundAudit,
    pub deviation: OverdeterminedDeviation,
    pub geometry: GeometrySummary,
    pub capacity: CapacityEstimate,
    pub extrapolated_capacity: f64,
    pub study_capacities: Vec<(f64, f64)>,
    pub fit_residual: f64,
    /// Solver correctness verdict (identities, gamma consistency, maximum
    /// principle). Rigidity diagnostics are reported but do not gate this.
    pub pass: bool,
}

pub struct PipelineResult {
    pub study: TruncationStudy,
    pub gamma: f64,
    pub corrected: PotentialField,
    pub report: IdentityReport,
}

pub fn geometry_summary(curve: &SigmaCurve, cone: &ConeSpec, p: f64) -> Result<GeometrySummary> {
    Ok(GeometrySummary {
        dim: cone.dim(),
        theta_max: cone.theta_max(),
        unit_ball_sector_volume: cone_unit_ball_volume(cone),
        sigma_area: sigma_area(curve, cone)?,
        enclosed_volume: enclosed_volume(curve, cone)?,
        isoperimetric_deficit: isoperimetric_deficit(curve, cone)?,
        heintze_karcher_deficit: match heintze_karcher_deficit(curve, cone) {
            Ok(v) => Some(v),
            Err(Error::NonPositiveCurvature { .. }) => None,
            Err(e) => return Err(e),
        },
        orthogonality: orthogonality_residual(curve),
        overdetermined_constant: overdetermined_constant(curve, cone, p)?,
        rigidity_capacity: rigidity_capacity_formula(curve, cone, p)?,
    })
}

pub fn run_pipeline(
    curve: &SigmaCurve,
    cone: &ConeSpec,
    cfg: &PipelineConfig,
) -> Result<PipelineResult> {
    let study = truncation_study(curve, cone, &cfg.mesh, &cfg.solver, &cfg.study_radii)?;
    let widest = study.entries.last().expect("study has >= 3 entries");
    let gamma = fit_far_field_amplitude(&widest.field)?;
    let corrected = truncation_corrected(&widest.field, gamma)?;
    let capacity = capacity_of(&corrected);
    let cap_best = study.extrapolated_capacity;

    let identities = vec![
        surface_capacity_identity(&corrected, &cfg.audit),
        pohozaev_identity(&corrected, &cfg.audit),
    ];
    let gamma_est = gamma_estimates(&corrected, cap_best, &cfg.audit)?;
    let p_function = p_function_audit(&corrected, cap_best, &cfg.audit)?;
    let curvature = curvature_bound_audit(curve, cone, cfg.solver.p, 256)?;
    let deviation = overdetermined_deviation(&corrected);
    let geometry = geometry_summary(curve, cone, cfg.solver.p)?;

    let pass = identities.iter().all(|r| r.pass) && gamma_est.pass && p_function.pass;
    let report = IdentityReport {
        identities,
        gamma: gamma_est,
        p_function,
        curvature,
        deviation,
        geometry,
        capacity,
        extrapolated_capacity: cap_best,
        study_capacities: study
            .entries
            .iter()
            .map(|e| (e.r_out, e.capacity))
            .collect(),
        fit_residual: study.fit_residual,
        pass,
    };
    Ok(PipelineResult {
        study,
        gamma,
        corrected,
        report,
    })
}

/// Single-radius convenience solve (no extrapolation, no correction).
pub fn solve_once(
    curve: &SigmaCurve,
    cone: &ConeSpec,
    mesh: &MeshParams,
    solver: &SolverConfig,
) -> Result<PotentialField> {
    let m = std::sync::Arc::new(crate::mesh::build_mesh(curve, cone, mesh)?);
    Ok(solve_potential(m, solver)?.0)
}

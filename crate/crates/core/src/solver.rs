//! Damped Newton solver for the regularized p-energy on the meridian mesh.
//!
//! The capacitary potential minimizes E(u) = (1/p) int |grad u|^p over
//! fields with u = 1 on Sigma and u = outer data on the truncation boundary.
//! Degenerate ellipticity is handled by continuation in the regularization
//! parameter: E_eps(u) = (1/p) int (|grad u|^2 + eps^2)^{p/2}, eps -> 0.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ConeSpec, SigmaCurve};
use crate::linalg::BandMatrix;
use crate::mesh::{build_mesh, MeridianMesh, MeshParams, NodeTag};
use crate::reference::decay_exponent;

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub p: f64,
    /// Regularization continuation schedule, strictly decreasing.
    pub eps_schedule: Vec<f64>,
    /// Stop a stage when the free-node gradient inf-norm drops below
    /// tol * (1 + |E|).
    pub tol: f64,
    /// Newton iteration cap per continuation stage.
    pub max_iter: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
}

impl SolverConfig {
    /// Validated config; requires 1 < p <= n - 0.05 so the exterior problem
    /// is well posed with a safety margin away from the borderline p = n.
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p > 1.0 && p <= n as f64 - 0.05) {
            return Err(Error::InvalidArgument(format!(
                "p = {p} outside the supported range (1, {}]",
                n as f64 - 0.05
            )));
        }
        Ok(Self {
            p,
            eps_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
            tol: 1e-7,
            max_iter: 60,
            armijo_c: 1e-4,
            backtrack: 0.5,
        })
    }
}

/// A discrete potential on a meridian mesh. `outer_level` is the Dirichlet
/// value carried on the truncation boundary (0 for a raw solve, positive
/// after the truncation correction).
#[derive(Debug, Clone)]
pub struct PotentialField {
    mesh: Arc<MeridianMesh>,
    u: Vec<f64>,
    p: f64,
    eps_min: f64,
    outer_level: f64,
}

impl PotentialField {
    pub fn mesh(&self) -> &MeridianMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<MeridianMesh> {
        self.mesh.clone()
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps_min(&self) -> f64 {
        self.eps_min
    }

    pub fn outer_level(&self) -> f64 {
        self.outer_level
    }

    pub fn value_at(&self, rho: f64, theta: f64) -> Result<f64> {
        self.mesh.eval_field(&self.u, rho, theta)
    }
}

/// Convergence record: per-stage Newton counts and energy trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub stage_eps: Vec<f64>,
    pub stage_iterations: Vec<usize>,
    /// Energy after each accepted Newton step, flattened across stages.
    pub energy_history: Vec<f64>,
    pub final_energy: f64,
    pub final_gradient_norm: f64,
}

impl SolveReport {
    pub fn total_iterations(&self) -> usize {
        self.stage_iterations.iter().sum()
    }
}

fn is_free(tag: NodeTag) -> bool {
    !matches!(tag, NodeTag::Sigma | NodeTag::Outer)
}

/// Regularized p-energy of a nodal field.
pub fn energy(mesh: &MeridianMesh, u: &[f64], p: f64, eps: f64) -> f64 {
    mesh.quad_points()
        .iter()
        .map(|q| q.weight * (q.grad_norm_sq(u) + eps * eps).powf(0.5 * p) / p)
        .sum()
}

/// Energy, gradient and Hessian of E_eps at `u`, with Dirichlet rows already
/// reduced (zero gradient, identity Hessian row).
pub fn energy_gradient_hessian(
    mesh: &MeridianMesh,
    u: &[f64],
    p: f64,
    eps: f64,
) -> (f64, Vec<f64>, BandMatrix) {
    let n_nodes = mesh.nodes().len();
    let bw = mesh.n_rho() + 2;
    let mut grad = vec![0.0; n_nodes];
    let mut hess = BandMatrix::zeros(n_nodes, bw);
    let mut e = 0.0;

    for q in mesh.quad_points() {
        let (gr, gt) = q.gradient(u);
        let s = gr * gr + gt * gt + eps * eps;
        let w = q.weight;
        e += w * s.powf(0.5 * p) / p;
        let f1 = s.powf(0.5 * p - 1.0); // s^{(p-2)/2}
        let f2 = (p - 2.0) * s.powf(0.5 * p - 2.0); // (p-2) s^{(p-4)/2}
        let mut ga = [0.0f64; 4];
        let mut gta = [0.0f64; 4];
        for a in 0..4 {
            ga[a] = q.d_rho[a];
            gta[a] = q.d_theta[a] / q.rho;
        }
        let mut du_dot = [0.0f64; 4];
        for a in 0..4 {
            du_dot[a] = gr * ga[a] + gt * gta[a];
            grad[q.nodes[a]] += w * f1 * du_dot[a];
        }
        for a in 0..4 {
            for b in 0..=a {
                let v = w * (f1 * (ga[a] * ga[b] + gta[a] * gta[b]) + f2 * du_dot[a] * du_dot[b]);
                hess.add(q.nodes[a], q.nodes[b], v);
            }
        }
    }

    for (i, node) in mesh.nodes().iter().enumerate() {
        if !is_free(node.tag) {
            grad[i] = 0.0;
            hess.set_identity_row(i);
        }
    }
    (e, grad, hess)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Solve the truncated Dirichlet problem (u = 1 on Sigma, 0 on the outer
/// boundary, natural conditions on axis and wall) by eps-continuation.
pub fn solve_potential(mesh: Arc<MeridianMesh>, config: &SolverConfig) -> Result<(PotentialField, SolveReport)> {
    if config.eps_schedule.is_empty() {
        return Err(Error::InvalidArgument("empty eps schedule".into()));
    }
    if config.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "eps schedule must be strictly decreasing".into(),
        ));
    }
    // Enforce the p-range against the mesh dimension.
    SolverConfig::new(config.p, mesh.cone().dim())?;

    let n_rho = mesh.n_rho();
    // Linear-in-radial-index start satisfies both Dirichlet conditions.
    let mut u: Vec<f64> = (0..mesh.nodes().len())
        .map(|a| 1.0 - (a % (n_rho + 1)) as f64 / n_rho as f64)
        .collect();

    let mut stage_iterations = Vec::new();
    let mut energy_history = Vec::new();
    let mut final_e = f64::NAN;
    let mut final_g = f64::NAN;

    for &eps in &config.eps_schedule {
        let mut iters = 0usize;
        let mut best_gnorm = f64::INFINITY;
        let mut plateau = 0usize;
        loop {
            let (e, grad, hess) = energy_gradient_hessian(&mesh, &u, config.p, eps);
            let gnorm = inf_norm(&grad);
            final_e = e;
            final_g = gnorm;
            if gnorm <= config.tol * (1.0 + e.abs()) {
                break;
            }
            // Deep continuation stages can hit the round-off floor of the
            // ill-conditioned Newton system before reaching the nominal
            // tolerance. A sustained plateau with a small residual is
            // accepted; a plateau with a large residual is a real failure.
            if gnorm < 0.5 * best_gnorm {
                best_gnorm = gnorm;
                plateau = 0;
            } else {
                plateau += 1;
            }
            if plateau >= 6 {
                if gnorm <= 1e4 * config.tol * (1.0 + e.abs()) {
                    break;
                }
                return Err(Error::NonConvergence(format!(
                    "eps = {eps}: stalled at gradient norm {gnorm} (tol {})",
                    config.tol * (1.0 + e.abs())
                )));
            }
            if iters >= config.max_iter {
                return Err(Error::NonConvergence(format!(
                    "eps = {eps}: gradient norm {gnorm} after {iters} Newton steps (tol {})",
                    config.tol * (1.0 + e.abs())
                )));
            }
            let chol = hess.cholesky()?;
            let neg_g: Vec<f64> = grad.iter().map(|&x| -x).collect();
            let step = chol.solve(&neg_g);
            // Floating-point floor: when the Newton update is below roundoff
            // the stage has converged as far as double precision allows.
            if inf_norm(&step) <= 1e-13 * (1.0 + inf_norm(&u)) {
                break;
            }
            let slope: f64 = grad.iter().zip(&step).map(|(g, d)| g * d).sum();
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&step).map(|(&x, &d)| x + t * d).collect();
                let e_trial = energy(&mesh, &trial, config.p, eps);
                if e_trial <= e + config.armijo_c * t * slope {
                    u = trial;
                    energy_history.push(e_trial);
                    break;
                }
                t *= config.backtrack;
                if t < 1e-14 {
                    return Err(Error::NonConvergence(format!(
                        "eps = {eps}: line search stalled at gradient norm {gnorm}"
                    )));
                }
            }
            iters += 1;
        }
        stage_iterations.push(iters);
    }

    let eps_min = *config.eps_schedule.last().unwrap();
    Ok((
        PotentialField {
            mesh,
            u,
            p: config.p,
            eps_min,
            outer_level: 0.0,
        },
        SolveReport {
            stage_eps: config.eps_schedule.clone(),
            stage_iterations,
            energy_history,
            final_energy: final_e,
            final_gradient_norm: final_g,
        },
    ))
}

/// Capacity estimates derived from a field's mesh energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CapacityEstimate {
    /// (1/p) int_mesh |grad u|^p / (1 - outer_level): the capacity of the
    /// exterior region the field represents. For a raw truncated solve this
    /// is the truncated capacity; for a corrected field it approximates the
    /// exterior capacity (exactly, for radial data).
    pub value: f64,
    /// Same with the eps_min regularization retained; the gap between the
    /// two bounds the regularization error.
    pub regularized: f64,
}

pub fn capacity_of(field: &PotentialField) -> CapacityEstimate {
    let e0 = energy(field.mesh(), field.values(), field.p, 0.0);
    let ee = energy(field.mesh(), field.values(), field.p, field.eps_min);
    let scale = 1.0 - field.outer_level;
    CapacityEstimate {
        value: e0 / scale,
        regularized: ee / scale,
    }
}

/// Gradient magnitude sample on Sigma at one mesh ray.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SigmaGradientSample {
    pub theta: f64,
    /// One-sided radial derivative at the surface (negative: u decays).
    pub u_rho: f64,
    /// Full gradient magnitude |grad u| = |u_rho| sqrt(1 + g'^2/g^2),
    /// using the Dirichlet constraint for the tangential component.
    pub grad_norm: f64,
}

/// |grad u| along Sigma from a one-sided quadratic fit in the radial index.
/// On Sigma the field is constant, so the tangential derivative along the
/// surface vanishes and the gradient is normal; in (rho, theta) components
/// this pins u_theta = -g' u_rho.
pub fn boundary_gradient_on_sigma(field: &PotentialField) -> Vec<SigmaGradientSample> {
    let mesh = field.mesh();
    let u = field.values();
    let curve = mesh.curve();
    let mut out = Vec::with_capacity(mesh.n_theta() + 1);
    for j in 0..=mesh.n_theta() {
        let n0 = mesh.node_index(0, j);
        let n1 = mesh.node_index(1, j);
        let n2 = mesh.node_index(2, j);
        let theta = mesh.nodes()[n0].theta;
        let r0 = mesh.nodes()[n0].rho;
        let h1 = mesh.nodes()[n1].rho - r0;
        let h2 = mesh.nodes()[n2].rho - r0;
        // Derivative at the left end of a quadratic through three points.
        let u_rho = (u[n1] - u[n0]) * h2 / (h1 * (h2 - h1)) - (u[n2] - u[n0]) * h1 / (h2 * (h2 - h1));
        let g = curve.value(theta);
        let dg = curve.derivative(theta);
        let grad_norm = u_rho.abs() * (1.0 + dg * dg / (g * g)).sqrt();
        out.push(SigmaGradientSample {
            theta,
            u_rho,
            grad_norm,
        });
    }
    out
}

/// Far-field amplitude: fit u ~ A (rho^-kappa - r_out^-kappa) on the shell
/// 0.4 r_out <= rho <= 0.7 r_out and convert to the exterior coefficient
/// gamma = 1 / (1/A + r_out^-kappa), the amplitude of gamma rho^-kappa that
/// the untruncated solution would carry. Exact for radial data.
pub fn fit_far_field_amplitude(field: &PotentialField) -> Result<f64> {
    let mesh = field.mesh();
    let kappa = decay_exponent(mesh.cone().dim(), field.p)?;
    let r_out = mesh.r_out();
    let b = field.outer_level;
    let tail = r_out.powf(-kappa);
    let mut wsum = 0.0;
    let mut asum = 0.0;
    let mut amin = f64::INFINITY;
    let mut amax = f64::NEG_INFINITY;
    for q in mesh.quad_points() {
        if q.rho < 0.4 * r_out || q.rho > 0.7 * r_out {
            continue;
        }
        let v = (q.value(field.values()) - b) / (1.0 - b);
        let a = v / (q.rho.powf(-kappa) - tail);
        wsum += q.weight;
        asum += q.weight * a;
        amin = amin.min(a);
        amax = amax.max(a);
    }
    debug_assert!(wsum > 0.0, "truncation validation keeps the shell nonempty");
    let a_mean = asum / wsum;
    let spread = (amax - amin) / a_mean.abs();
    if spread.is_nan() || spread >= 0.10 {
        return Err(Error::FarFieldTooNoisy { spread });
    }
    Ok(1.0 / (1.0 / a_mean + tail))
}

/// Replace the artificial zero outer datum by the asymptotically consistent
/// level b = gamma r_out^-kappa. Affine maps preserve p-harmonicity, so the
/// corrected field is still the discrete minimizer for its own boundary data
/// and tracks the untruncated solution through the whole mesh.
pub fn truncation_corrected(field: &PotentialField, gamma: f64) -> Result<PotentialField> {
    let kappa = decay_exponent(field.mesh().cone().dim(), field.p)?;
    if field.outer_level != 0.0 {
        return Err(Error::InvalidArgument(
            "field already carries a truncation correction".into(),
        ));
    }
    let b = gamma * field.mesh().r_out().powf(-kappa);
    if !(0.0..1.0).contains(&b) {
        return Err(Error::InvalidArgument(format!(
            "corrected outer level {b} outside [0, 1); bad amplitude {gamma}?"
        )));
    }
    Ok(PotentialField {
        mesh: field.mesh.clone(),
        u: field.u.iter().map(|&v| (1.0 - b) * v + b).collect(),
        p: field.p,
        eps_min: field.eps_min * (1.0 - b),
        outer_level: b,
    })
}

/// One truncation radius in a study.
#[derive(Debug, Clone)]
pub struct StudyEntry {
    pub r_out: f64,
    pub capacity: f64,
    pub field: PotentialField,
    pub report: SolveReport,
}

/// Capacity extrapolation to r_out -> infinity. The transform
/// y = Cap^{-1/(p-1)} is affine in x = r_out^-kappa for radial data, so a
/// least-squares line in (x, y) gives the exterior capacity at x = 0.
#[derive(Debug, Clone)]
pub struct TruncationStudy {
    pub entries: Vec<StudyEntry>,
    pub extrapolated_capacity: f64,
    pub fit_intercept: f64,
    pub fit_slope: f64,
    /// Max relative residual of the affine fit; large values flag that the
    /// truncation radii are too small for clean asymptotics.
    pub fit_residual: f64,
}

/// Solve the problem at each truncation radius and extrapolate the capacity.
/// Radial resolution is scaled so cells-per-decade stays constant across the
/// study; otherwise discretization error would vary with r_out and bias the
/// fit.
pub fn truncation_study(
    curve: &SigmaCurve,
    cone: &ConeSpec,
    base: &MeshParams,
    config: &SolverConfig,
    r_outs: &[f64],
) -> Result<TruncationStudy> {
    if r_outs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "truncation study needs at least 3 radii (got {})",
            r_outs.len()
        )));
    }
    let mut radii = r_outs.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    if radii.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate truncation radii".into()));
    }

    let kappa = decay_exponent(cone.dim(), config.p)?;
    let g_ref = curve.min_value();
    let span_ref = (base.r_out / g_ref).ln();

    let mut entries = Vec::new();
    for &r_out in &radii {
        let scale = ((r_out / g_ref).ln() / span_ref).max(1.0);
        let params = MeshParams {
            n_rho: ((base.n_rho as f64 * scale).round() as usize).max(base.n_rho),
            r_out,
            ..*base
        };
        let mesh = Arc::new(build_mesh(curve, cone, &params)?);
        let (field, report) = solve_potential(mesh, config)?;
        let capacity = capacity_of(&field).value;
        if let Some(last) = entries.last() {
            let prev: &StudyEntry = last;
            if capacity >= prev.capacity {
                return Err(Error::MonotonicityViolation {
                    prev: prev.capacity,
                    next: capacity,
                    r_out,
                });
            }
        }
        entries.push(StudyEntry {
            r_out,
            capacity,
            field,
            report,
        });
    }

    // Least-squares line y = intercept + slope * x.
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| {
            (
                e.r_out.powf(-kappa),
                e.capacity.powf(-1.0 / (config.p - 1.0)),
            )
        })
        .collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    if intercept.is_nan() || intercept <= 0.0 {
        return Err(Error::NonConvergence(format!(
            "capacity extrapolation produced nonpositive intercept {intercept}"
        )));
    }
    let fit_residual = pts
        .iter()
        .map(|&(x, y)| ((intercept + slope * x - y) / y).abs())
        .fold(0.0f64, f64::max);
    Ok(TruncationStudy {
        entries,
        extrapolated_capacity: intercept.powf(-(config.p - 1.0)),
        fit_intercept: intercept,
        fit_slope: slope,
        fit_residual,
    })
}

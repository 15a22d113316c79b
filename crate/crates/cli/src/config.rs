//! JSON run configuration and its translation into core types.

use std::path::Path;

use anyhow::{bail, Context};
use serde::Deserialize;

use sectorcap::{
    AuditConfig, ConeSpec, Grading, MeshParams, PipelineConfig, SigmaCurve, SolverConfig,
    ORTHOGONALITY_TOL,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub cone: ConeSection,
    pub sigma: SigmaSection,
    pub mesh: MeshSection,
    pub truncation: TruncationSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSection {
    pub dim: usize,
    #[serde(default)]
    pub half_angle: Option<f64>,
    #[serde(default)]
    pub full_space: bool,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSection {
    /// Vertex-centered spherical cap.
    Sphere { radius: f64 },
    /// radius (1 + sum_k deltas[k-1] cos(k pi theta / alpha)).
    Cosine { radius: f64, deltas: Vec<f64> },
    /// Uniform samples of g over [0, theta_max], one value per line
    /// (a leading theta column is accepted and ignored).
    Csv { path: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub n_rho: usize,
    pub n_theta: usize,
    #[serde(default = "default_grading")]
    pub grading: Grading,
}

fn default_grading() -> Grading {
    Grading::Geometric
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    /// Truncation radii, ascending; the study uses all, single-field
    /// commands use the largest.
    pub radii: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub p: f64,
    #[serde(default)]
    pub eps_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default)]
    pub identity_tol: Option<f64>,
    #[serde(default)]
    pub gamma_spread_tol: Option<f64>,
    #[serde(default)]
    pub max_principle_slack: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Polar angle of the sampled ray in ray_profile.csv; defaults to the
    /// middle of the sector.
    #[serde(default)]
    pub ray_theta: Option<f64>,
    #[serde(default = "default_ray_samples")]
    pub ray_samples: usize,
}

fn default_ray_samples() -> usize {
    128
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            ray_theta: None,
            ray_samples: default_ray_samples(),
        }
    }
}

/// Fully validated run setup.
pub struct RunSetup {
    pub curve: SigmaCurve,
    pub cone: ConeSpec,
    pub pipeline: PipelineConfig,
    pub ray_theta: f64,
    pub ray_samples: usize,
}

pub fn load_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg: FileConfig =
        serde_json::from_str(&text).with_context(|| format!("bad config {}", path.display()))?;
    Ok(cfg)
}

pub fn build_setup(cfg: &FileConfig, config_dir: &Path) -> anyhow::Result<RunSetup> {
    let cone = if cfg.cone.full_space {
        if cfg.cone.half_angle.is_some() {
            bail!("cone.half_angle must be omitted when cone.full_space is set");
        }
        ConeSpec::full_space(cfg.cone.dim)?
    } else {
        let alpha = cfg
            .cone
            .half_angle
            .context("cone.half_angle is required unless cone.full_space is set")?;
        ConeSpec::new(cfg.cone.dim, alpha)?
    };
    let alpha = cone.theta_max();

    let curve = match &cfg.sigma {
        SigmaSection::Sphere { radius } => SigmaCurve::sphere(*radius, alpha)?,
        SigmaSection::Cosine { radius, deltas } => SigmaCurve::cosine_series(*radius, deltas, alpha)?,
        SigmaSection::Csv { path } => {
            let full = config_dir.join(path);
            let text = std::fs::read_to_string(&full)
                .with_context(|| format!("cannot read curve samples {}", full.display()))?;
            let values: Vec<f64> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| {
                    l.rsplit(',')
                        .next()
                        .unwrap()
                        .trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad sample line {l:?}"))
                })
                .collect::<anyhow::Result<_>>()?;
            SigmaCurve::from_samples(&values, alpha)?
        }
    };

    let residual = sectorcap::orthogonality_residual(&curve);
    if residual.max() > ORTHOGONALITY_TOL && !matches!(cfg.sigma, SigmaSection::Csv { .. }) {
        bail!(
            "sigma curve is not admissible: g' = {} at the axis, {} at the wall \
             (both must vanish so Sigma meets the cone orthogonally)",
            residual.at_axis,
            residual.at_wall
        );
    }

    if cfg.truncation.radii.is_empty() {
        bail!("truncation.radii must not be empty");
    }
    let mut radii = cfg.truncation.radii.clone();
    radii.sort_by(|a, b| a.partial_cmp(b).context("non-finite radius").unwrap());

    let mut solver = SolverConfig::new(cfg.solver.p, cone.dim())?;
    if let Some(s) = &cfg.solver.eps_schedule {
        solver.eps_schedule = s.clone();
    }
    if let Some(t) = cfg.solver.tol {
        solver.tol = t;
    }
    if let Some(m) = cfg.solver.max_iter {
        solver.max_iter = m;
    }

    let mut audit = AuditConfig::default();
    if let Some(v) = cfg.audit.identity_tol {
        audit.identity_tol = v;
    }
    if let Some(v) = cfg.audit.gamma_spread_tol {
        audit.gamma_spread_tol = v;
    }
    if let Some(v) = cfg.audit.max_principle_slack {
        audit.max_principle_slack = v;
    }

    let mesh = MeshParams {
        n_rho: cfg.mesh.n_rho,
        n_theta: cfg.mesh.n_theta,
        r_out: radii[0],
        grading: cfg.mesh.grading,
    };

    let ray_theta = cfg.output.ray_theta.unwrap_or(alpha / 2.0);
    if !(0.0..=alpha).contains(&ray_theta) {
        bail!("output.ray_theta = {ray_theta} outside [0, {alpha}]");
    }

    Ok(RunSetup {
        curve,
        cone,
        pipeline: PipelineConfig {
            mesh,
            solver,
            audit,
            study_radii: radii,
        },
        ray_theta,
        ray_samples: cfg.output.ray_samples.max(2),
    })
}

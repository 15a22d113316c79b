//! Command-line front end: runs the solver pipeline from a JSON config and
//! writes machine-readable reports plus CSV profiles.

pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use sectorcap::{
    capacity_of, curvature_bound_audit, decay_exponent, fit_far_field_amplitude,
    geometry_summary, run_pipeline, sphere_capacity, truncated_sphere_capacity,
    truncation_corrected, boundary_gradient_on_sigma, mean_curvature_at, solve_potential,
    Error as CoreError, PotentialField,
};

use config::{build_setup, load_config, RunSetup, SigmaSection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_CONFIG: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_AUDIT_FAILED: i32 = 4;

#[derive(Parser)]
#[command(
    name = "sectorcap",
    version,
    about = "p-capacitary potentials and rigidity audits for sector-like domains in convex cones"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports and CSV profiles (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Omit wall-clock timings from reports so repeated runs are
    /// byte-identical. The computation itself is always deterministic.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Accepted for interface stability; the solver is single-threaded.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at the largest truncation radius and write the field profiles.
    Solve,
    /// Full pipeline with identity audits; fails (exit 4) on audit mismatch.
    Verify,
    /// Geometric diagnostics of the configured curve, no PDE solve.
    Geometry,
    /// Capacity study across all configured truncation radii.
    Study,
    /// Closed-form reference values (sphere configurations only).
    Model,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<CoreError>() {
        Some(
            CoreError::NonConvergence(_)
            | CoreError::MonotonicityViolation { .. }
            | CoreError::FarFieldTooNoisy { .. }
            | CoreError::NonPositiveCurvature { .. },
        ) => EXIT_NO_CONVERGENCE,
        // Invalid cone / curve / argument / truncation, and all I/O or JSON
        // problems, are configuration errors.
        _ => EXIT_BAD_CONFIG,
    }
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    if cli.threads == 0 {
        anyhow::bail!("--threads must be at least 1");
    }
    let config_path = cli
        .config
        .as_deref()
        .context("--config <file.json> is required")?;
    let cfg = load_config(config_path)?;
    let setup = build_setup(&cfg, config_path.parent().unwrap_or(Path::new(".")))?;
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create output dir {}", cli.out.display()))?;

    let started = Instant::now();
    match cli.command {
        Command::Geometry => cmd_geometry(cli, &setup),
        Command::Model => cmd_model(cli, &cfg.sigma, &setup),
        Command::Study => cmd_study(cli, &setup, started),
        Command::Solve => cmd_solve(cli, &setup, started),
        Command::Verify => cmd_verify(cli, &setup, started),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn say(cli: &Cli, msg: &str) {
    if !cli.quiet {
        println!("{msg}");
    }
}

fn timing(cli: &Cli, started: Instant) -> serde_json::Value {
    if cli.deterministic {
        serde_json::Value::Null
    } else {
        json!(started.elapsed().as_millis() as u64)
    }
}

fn cmd_geometry(cli: &Cli, setup: &RunSetup) -> anyhow::Result<i32> {
    let summary = geometry_summary(&setup.curve, &setup.cone, setup.pipeline.solver.p)?;
    let path = cli.out.join("geometry.json");
    write_json(&path, &serde_json::to_value(&summary)?)?;
    say(
        cli,
        &format!(
            "geometry: area = {:.6}, volume = {:.6}, isoperimetric deficit = {:.3e} -> {}",
            summary.sigma_area,
            summary.enclosed_volume,
            summary.isoperimetric_deficit,
            path.display()
        ),
    );
    Ok(EXIT_OK)
}

fn cmd_model(cli: &Cli, sigma: &SigmaSection, setup: &RunSetup) -> anyhow::Result<i32> {
    let SigmaSection::Sphere { radius } = sigma else {
        anyhow::bail!("the model command needs sigma.type = \"sphere\"");
    };
    let p = setup.pipeline.solver.p;
    let n = setup.cone.dim();
    let kappa = decay_exponent(n, p)?;
    let cap = sphere_capacity(*radius, &setup.cone, p)?;
    let truncated: Vec<serde_json::Value> = setup
        .pipeline
        .study_radii
        .iter()
        .map(|&r_out| -> anyhow::Result<serde_json::Value> {
            Ok(json!({
                "r_out": r_out,
                "capacity": truncated_sphere_capacity(*radius, r_out, &setup.cone, p)?,
            }))
        })
        .collect::<anyhow::Result<_>>()?;
    let doc = json!({
        "command": "model",
        "dim": n,
        "p": p,
        "radius": radius,
        "decay_exponent": kappa,
        "capacity": cap,
        "far_field_amplitude": radius.powf(kappa),
        "boundary_gradient": kappa / radius,
        "mean_curvature": (n as f64 - 1.0) / radius,
        "truncated_capacities": truncated,
    });
    let path = cli.out.join("model.json");
    write_json(&path, &doc)?;
    say(
        cli,
        &format!("model: capacity = {cap:.9}, kappa = {kappa:.6} -> {}", path.display()),
    );
    Ok(EXIT_OK)
}

fn cmd_study(cli: &Cli, setup: &RunSetup, started: Instant) -> anyhow::Result<i32> {
    let study = sectorcap::truncation_study(
        &setup.curve,
        &setup.cone,
        &setup.pipeline.mesh,
        &setup.pipeline.solver,
        &setup.pipeline.study_radii,
    )?;
    let doc = json!({
        "command": "study",
        "p": setup.pipeline.solver.p,
        "entries": study.entries.iter().map(|e| json!({
            "r_out": e.r_out,
            "capacity": e.capacity,
            "newton_iterations": e.report.total_iterations(),
        })).collect::<Vec<_>>(),
        "extrapolated_capacity": study.extrapolated_capacity,
        "fit_intercept": study.fit_intercept,
        "fit_slope": study.fit_slope,
        "fit_residual": study.fit_residual,
        "elapsed_ms": timing(cli, started),
    });
    let path = cli.out.join("study.json");
    write_json(&path, &doc)?;
    say(
        cli,
        &format!(
            "study: capacity -> {:.9} over {} radii -> {}",
            study.extrapolated_capacity,
            study.entries.len(),
            path.display()
        ),
    );
    Ok(EXIT_OK)
}

fn write_profiles(out: &Path, setup: &RunSetup, field: &PotentialField, gamma: f64) -> anyhow::Result<()> {
    let mesh = field.mesh();
    let cone = mesh.cone();
    let p = field.p();
    let kappa = decay_exponent(cone.dim(), p)?;
    let curve = mesh.curve();

    // Boundary profile along Sigma.
    let bound = curvature_bound_audit(curve, cone, p, mesh.n_theta())?;
    let samples = boundary_gradient_on_sigma(field);
    let mut sigma_csv = String::from("theta,g,u_rho,grad_norm,mean_curvature,curvature_margin\n");
    for (s, (theta, margin)) in samples.iter().zip(&bound.margin_profile) {
        let h = mean_curvature_at(curve, cone, *theta)?;
        sigma_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.theta,
            curve.value(s.theta),
            s.u_rho,
            s.grad_norm,
            h,
            margin
        ));
    }
    std::fs::write(out.join("sigma_profile.csv"), sigma_csv)?;

    // Radial ray through the corrected field with its asymptote.
    let theta = setup.ray_theta;
    let g = curve.value(theta);
    let r_out = mesh.r_out();
    let m = setup.ray_samples;
    let mut ray_csv = String::from("rho,u,asymptote\n");
    for k in 0..=m {
        let rho = g * (r_out / g).powf(k as f64 / m as f64);
        let u = field.value_at(rho, theta)?;
        ray_csv.push_str(&format!("{},{},{}\n", rho, u, gamma * rho.powf(-kappa)));
    }
    std::fs::write(out.join("ray_profile.csv"), ray_csv)?;

    // Gradient function P at element centers inside the trusted window.
    let exponent = p * (cone.dim() as f64 - 1.0) / (cone.dim() as f64 - p);
    let mut p_csv = String::from("rho,theta,p_value\n");
    for (e, qs) in mesh.quad_points().chunks_exact(4).enumerate() {
        let (i, _) = mesh.qp_grid_index(4 * e);
        let rho = qs.iter().map(|q| q.rho).sum::<f64>() / 4.0;
        if i < 2 || rho > 0.7 * r_out {
            continue;
        }
        let th = qs.iter().map(|q| q.theta).sum::<f64>() / 4.0;
        let u = qs.iter().map(|q| q.value(field.values())).sum::<f64>() / 4.0;
        let (mut gr, mut gt) = (0.0, 0.0);
        for q in qs {
            let (a, b) = q.gradient(field.values());
            gr += a / 4.0;
            gt += b / 4.0;
        }
        let pv = u.powf(-exponent) * (gr * gr + gt * gt).powf(0.5 * p);
        p_csv.push_str(&format!("{},{},{}\n", rho, th, pv));
    }
    std::fs::write(out.join("pfunction.csv"), p_csv)?;
    Ok(())
}

fn cmd_solve(cli: &Cli, setup: &RunSetup, started: Instant) -> anyhow::Result<i32> {
    let r_out = *setup
        .pipeline
        .study_radii
        .last()
        .expect("validated nonempty");
    let params = sectorcap::MeshParams {
        r_out,
        ..setup.pipeline.mesh
    };
    let mesh = std::sync::Arc::new(sectorcap::build_mesh(&setup.curve, &setup.cone, &params)?);
    let (raw, report) = solve_potential(mesh, &setup.pipeline.solver)?;
    let gamma = fit_far_field_amplitude(&raw)?;
    let corrected = truncation_corrected(&raw, gamma)?;
    let cap = capacity_of(&corrected);
    write_profiles(&cli.out, setup, &corrected, gamma)?;

    let doc = json!({
        "command": "solve",
        "p": setup.pipeline.solver.p,
        "r_out": r_out,
        "capacity": cap,
        "truncated_capacity": capacity_of(&raw).value,
        "far_field_amplitude": gamma,
        "outer_level": corrected.outer_level(),
        "newton_iterations": report.total_iterations(),
        "final_gradient_norm": report.final_gradient_norm,
        "elapsed_ms": timing(cli, started),
    });
    let path = cli.out.join("report.json");
    write_json(&path, &doc)?;
    say(
        cli,
        &format!(
            "solve: capacity = {:.9} (gamma = {:.6}, {} Newton steps) -> {}",
            cap.value,
            gamma,
            report.total_iterations(),
            path.display()
        ),
    );
    Ok(EXIT_OK)
}

fn cmd_verify(cli: &Cli, setup: &RunSetup, started: Instant) -> anyhow::Result<i32> {
    let result = run_pipeline(&setup.curve, &setup.cone, &setup.pipeline)?;
    write_profiles(&cli.out, setup, &result.corrected, result.gamma)?;
    let doc = json!({
        "command": "verify",
        "p": setup.pipeline.solver.p,
        "gamma": result.gamma,
        "report": result.report,
        "elapsed_ms": timing(cli, started),
    });
    let path = cli.out.join("report.json");
    write_json(&path, &doc)?;
    for rec in &result.report.identities {
        say(
            cli,
            &format!(
                "verify: {} mismatch {:.3e} (tol {:.1e}) {}",
                rec.name,
                rec.relative_mismatch,
                rec.tolerance,
                if rec.pass { "ok" } else { "FAIL" }
            ),
        );
    }
    if result.report.pass {
        say(
            cli,
            &format!(
                "verify: capacity = {:.9}, all audits passed -> {}",
                result.report.extrapolated_capacity,
                path.display()
            ),
        );
        Ok(EXIT_OK)
    } else {
        eprintln!("verify: audit failed; see {}", path.display());
        Ok(EXIT_AUDIT_FAILED)
    }
}

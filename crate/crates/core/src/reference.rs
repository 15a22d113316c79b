//! Closed-form radial reference solutions.
//!
//! Every radial quantity is controlled by the decay exponent
//! kappa = (n - p)/(p - 1), valid for 1 < p < n.

use crate::error::{Error, Result};
use crate::geometry::{cone_unit_ball_volume, ConeSpec};

/// kappa = (n - p)/(p - 1); the fundamental decay rate rho^-kappa.
pub fn decay_exponent(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < n as f64) {
        return Err(Error::InvalidArgument(format!(
            "p = {p} must satisfy 1 < p < n = {n}"
        )));
    }
    Ok((n as f64 - p) / (p - 1.0))
}

/// Radial fundamental profile rho^-kappa and its derivative.
pub fn fundamental_solution(rho: f64, n: usize, p: f64) -> Result<(f64, f64)> {
    let kappa = decay_exponent(n, p)?;
    if rho <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "fundamental profile undefined at rho = {rho}"
        )));
    }
    Ok((rho.powf(-kappa), -kappa * rho.powf(-kappa - 1.0)))
}

/// Exterior potential of the cap of radius R: u = (rho/R)^-kappa, with its
/// radial derivative. Normalized so u(R) = 1.
pub fn radial_model(rho: f64, r: f64, n: usize, p: f64) -> Result<(f64, f64)> {
    let (v, dv) = fundamental_solution(rho, n, p)?;
    let scale = r.powf(decay_exponent(n, p)?);
    Ok((scale * v, scale * dv))
}

/// Exact solution of the truncated annulus problem (u = 1 at rho = R,
/// u = 0 at rho = r_out) and its radial derivative.
pub fn truncated_radial_solution(rho: f64, r: f64, r_out: f64, n: usize, p: f64) -> Result<(f64, f64)> {
    let kappa = decay_exponent(n, p)?;
    if !(r_out > r && r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < R = {r} < r_out = {r_out}"
        )));
    }
    let denom = r.powf(-kappa) - r_out.powf(-kappa);
    Ok((
        (rho.powf(-kappa) - r_out.powf(-kappa)) / denom,
        -kappa * rho.powf(-kappa - 1.0) / denom,
    ))
}

/// Capacity of the cap of radius R relative to the cone:
/// (n omega / p) kappa^{p-1} R^{n-p}, where omega is the unit-ball sector
/// volume. Defined as (1/p) int |grad u|^p over the exterior.
pub fn sphere_capacity(r: f64, cone: &ConeSpec, p: f64) -> Result<f64> {
    let n = cone.dim();
    let kappa = decay_exponent(n, p)?;
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let omega = cone_unit_ball_volume(cone);
    Ok(n as f64 * omega / p * kappa.powf(p - 1.0) * r.powf(n as f64 - p))
}

/// Capacity of the truncated annulus R <= rho <= r_out with Dirichlet data
/// 1 and 0. Converges to `sphere_capacity` as r_out grows.
pub fn truncated_sphere_capacity(r: f64, r_out: f64, cone: &ConeSpec, p: f64) -> Result<f64> {
    let n = cone.dim();
    let kappa = decay_exponent(n, p)?;
    if !(r_out > r && r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < R = {r} < r_out = {r_out}"
        )));
    }
    let omega = cone_unit_ball_volume(cone);
    let denom = r.powf(-kappa) - r_out.powf(-kappa);
    Ok(n as f64 * omega / p * kappa.powf(p - 1.0) * denom.powf(1.0 - p))
}

//! Geometric primitives for circular convex cones and revolution
//! hypersurfaces given by a radial graph rho = g(theta).
//!
//! All integrals here use adaptive quadrature at 1e-12 relative tolerance so
//! that geometric quantities are effectively exact compared with the PDE
//! discretization they are audited against.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;
use crate::spline::ClampedCubicSpline;

/// A circular convex cone in R^n: half-angle `half_angle` about a fixed axis,
/// or the whole space (treated as half-angle pi in polar coordinates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    n: usize,
    half_angle: f64,
    full_space: bool,
}

impl ConeSpec {
    /// A cone of half-angle `alpha` in (0, pi/2]. Larger openings (short of
    /// the full space) are not convex and are rejected.
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCone(format!("dimension n = {n} must be >= 2")));
        }
        if !(alpha > 0.0 && alpha <= PI / 2.0 + 1e-12) {
            return Err(Error::InvalidCone(format!(
                "half-angle {alpha} violates the convexity constraint 0 < alpha <= pi/2 \
                 (use the full-space flag for alpha = pi)"
            )));
        }
        Ok(Self {
            n,
            half_angle: alpha.min(PI / 2.0),
            full_space: false,
        })
    }

    /// The degenerate "cone" C = R^n.
    pub fn full_space(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCone(format!("dimension n = {n} must be >= 2")));
        }
        Ok(Self {
            n,
            half_angle: PI,
            full_space: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_full_space(&self) -> bool {
        self.full_space
    }

    /// Upper limit of the polar angle: alpha for a proper cone, pi for R^n.
    pub fn theta_max(&self) -> f64 {
        self.half_angle
    }

    /// Area of the unit (n-2)-sphere, with the convention c_2 = 2.
    pub fn angular_factor(&self) -> f64 {
        sphere_area_factor(self.n)
    }

    /// Weight of the rotationally reduced measure at (rho, theta).
    pub fn measure_weight(&self, rho: f64, theta: f64) -> f64 {
        self.angular_factor() * rho.powi(self.n as i32 - 1) * theta.sin().powi(self.n as i32 - 2)
    }
}

fn sphere_area_factor(n: usize) -> f64 {
    // c_2 = 2, c_3 = 2*pi, c_n = 2*pi*c_{n-2} / (n - 3).
    match n {
        2 => 2.0,
        3 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area_factor(n - 2) / (n as f64 - 3.0),
    }
}

/// Volume of C intersected with the unit ball.
pub fn cone_unit_ball_volume(cone: &ConeSpec) -> f64 {
    let m = cone.dim() as i32 - 2;
    let integral = quad::integrate_default(|t| t.sin().powi(m), 0.0, cone.theta_max());
    cone.angular_factor() / cone.dim() as f64 * integral
}

enum CurveKind {
    Sphere {
        radius: f64,
    },
    /// g = r (1 + sum_k delta_k cos(k pi theta / alpha)); flat at both ends.
    CosineSeries {
        radius: f64,
        deltas: Vec<f64>,
    },
    Sampled {
        spline: ClampedCubicSpline,
    },
    Analytic {
        g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        dg: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d2g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Clone for CurveKind {
    fn clone(&self) -> Self {
        match self {
            Self::Sphere { radius } => Self::Sphere { radius: *radius },
            Self::CosineSeries { radius, deltas } => Self::CosineSeries {
                radius: *radius,
                deltas: deltas.clone(),
            },
            Self::Sampled { spline } => Self::Sampled {
                spline: spline.clone(),
            },
            Self::Analytic { g, dg, d2g } => Self::Analytic {
                g: g.clone(),
                dg: dg.clone(),
                d2g: d2g.clone(),
            },
        }
    }
}

/// Generating curve rho = g(theta) of the revolution hypersurface Sigma,
/// theta in [0, alpha].
#[derive(Clone)]
pub struct SigmaCurve {
    alpha: f64,
    kind: CurveKind,
}

impl fmt::Debug for SigmaCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            CurveKind::Sphere { radius } => format!("sphere R = {radius}"),
            CurveKind::CosineSeries { radius, deltas } => {
                format!("cosine series R = {radius}, deltas = {deltas:?}")
            }
            CurveKind::Sampled { .. } => "sampled spline".to_string(),
            CurveKind::Analytic { .. } => "analytic".to_string(),
        };
        write!(f, "SigmaCurve {{ alpha: {}, {} }}", self.alpha, kind)
    }
}

impl SigmaCurve {
    /// Spherical cap of radius `radius` centered at the vertex.
    pub fn sphere(radius: f64, alpha: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidCurve(format!("radius {radius} must be positive")));
        }
        Ok(Self {
            alpha,
            kind: CurveKind::Sphere { radius },
        })
    }

    /// g = radius (1 + sum_k deltas[k-1] cos(k pi theta / alpha)).
    pub fn cosine_series(radius: f64, deltas: &[f64], alpha: f64) -> Result<Self> {
        let curve = Self {
            alpha,
            kind: CurveKind::CosineSeries {
                radius,
                deltas: deltas.to_vec(),
            },
        };
        curve.validate_positive()?;
        Ok(curve)
    }

    /// Build from uniform samples over [0, alpha] with a clamped cubic
    /// spline (zero slope at both joints).
    pub fn from_samples(values: &[f64], alpha: f64) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InvalidCurve(
                "need at least 4 samples for a spline curve".into(),
            ));
        }
        let spline = ClampedCubicSpline::new(0.0, alpha, values, 0.0, 0.0);
        let curve = Self {
            alpha,
            kind: CurveKind::Sampled { spline },
        };
        curve.validate_positive()?;
        Ok(curve)
    }

    /// Curve defined by closures for g, g' and g''. Test and oracle use.
    pub fn analytic(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        alpha: f64,
    ) -> Result<Self> {
        let curve = Self {
            alpha,
            kind: CurveKind::Analytic {
                g: Arc::new(g),
                dg: Arc::new(dg),
                d2g: Arc::new(d2g),
            },
        };
        curve.validate_positive()?;
        Ok(curve)
    }

    fn validate_positive(&self) -> Result<()> {
        let m = 2048;
        for i in 0..=m {
            let theta = self.alpha * i as f64 / m as f64;
            if self.value(theta) <= 0.0 {
                return Err(Error::InvalidCurve(format!(
                    "g(theta) must stay positive; g({theta}) = {}",
                    self.value(theta)
                )));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// True when the curve is exactly a vertex-centered sphere cap.
    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, CurveKind::Sphere { .. })
    }

    pub fn value(&self, theta: f64) -> f64 {
        match &self.kind {
            CurveKind::Sphere { radius } => *radius,
            CurveKind::CosineSeries { radius, deltas } => {
                let mut s = 1.0;
                for (k, d) in deltas.iter().enumerate() {
                    s += d * ((k + 1) as f64 * PI * theta / self.alpha).cos();
                }
                radius * s
            }
            CurveKind::Sampled { spline } => spline.value(theta),
            CurveKind::Analytic { g, .. } => g(theta),
        }
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        match &self.kind {
            CurveKind::Sphere { .. } => 0.0,
            CurveKind::CosineSeries { radius, deltas } => {
                let mut s = 0.0;
                for (k, d) in deltas.iter().enumerate() {
                    let w = (k + 1) as f64 * PI / self.alpha;
                    s -= d * w * (w * theta).sin();
                }
                radius * s
            }
            CurveKind::Sampled { spline } => spline.derivative(theta),
            CurveKind::Analytic { dg, .. } => dg(theta),
        }
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        match &self.kind {
            CurveKind::Sphere { .. } => 0.0,
            CurveKind::CosineSeries { radius, deltas } => {
                let mut s = 0.0;
                for (k, d) in deltas.iter().enumerate() {
                    let w = (k + 1) as f64 * PI / self.alpha;
                    s -= d * w * w * (w * theta).cos();
                }
                radius * s
            }
            CurveKind::Sampled { spline } => spline.second_derivative(theta),
            CurveKind::Analytic { d2g, .. } => d2g(theta),
        }
    }

    /// Uniform samples (theta, g) — the CSV exchange format.
    pub fn samples(&self, m: usize) -> Vec<(f64, f64)> {
        (0..=m)
            .map(|i| {
                let theta = self.alpha * i as f64 / m as f64;
                (theta, self.value(theta))
            })
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.samples(2048)
            .iter()
            .map(|&(_, g)| g)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.samples(2048)
            .iter()
            .map(|&(_, g)| g)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The same curve scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        match &mut out.kind {
            CurveKind::Sphere { radius } | CurveKind::CosineSeries { radius, .. } => {
                *radius *= lambda;
            }
            CurveKind::Sampled { .. } | CurveKind::Analytic { .. } => {
                let base = self.clone();
                out.kind = CurveKind::Analytic {
                    g: {
                        let c = base.clone();
                        Arc::new(move |t| lambda * c.value(t))
                    },
                    dg: {
                        let c = base.clone();
                        Arc::new(move |t| lambda * c.derivative(t))
                    },
                    d2g: Arc::new(move |t| lambda * base.second_derivative(t)),
                };
            }
        }
        out
    }
}

fn check_compatible(curve: &SigmaCurve, cone: &ConeSpec) -> Result<()> {
    if (curve.alpha() - cone.theta_max()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "curve is defined on [0, {}] but the cone spans [0, {}]",
            curve.alpha(),
            cone.theta_max()
        )));
    }
    Ok(())
}

/// Area H^{n-1}(Sigma) of the revolution hypersurface.
pub fn sigma_area(curve: &SigmaCurve, cone: &ConeSpec) -> Result<f64> {
    check_compatible(curve, cone)?;
    let m = cone.dim() as i32 - 2;
    let c = cone.angular_factor();
    Ok(quad::integrate_default(
        |t| {
            let g = curve.value(t);
            let dg = curve.derivative(t);
            c * (g * t.sin()).powi(m) * (g * g + dg * dg).sqrt()
        },
        0.0,
        curve.alpha(),
    ))
}

/// Volume H^n(Omega ∩ C) of the region enclosed by Sigma inside the cone.
pub fn enclosed_volume(curve: &SigmaCurve, cone: &ConeSpec) -> Result<f64> {
    check_compatible(curve, cone)?;
    let n = cone.dim();
    let c = cone.angular_factor();
    Ok(quad::integrate_default(
        |t| {
            c / n as f64 * curve.value(t).powi(n as i32) * t.sin().powi(n as i32 - 2)
        },
        0.0,
        curve.alpha(),
    ))
}

/// Mean curvature (trace convention: sum of principal curvatures) of Sigma
/// at polar angle `theta`, with the normal pointing away from Omega.
pub fn mean_curvature_at(curve: &SigmaCurve, cone: &ConeSpec, theta: f64) -> Result<f64> {
    check_compatible(curve, cone)?;
    let g = curve.value(theta);
    let dg = curve.derivative(theta);
    let d2g = curve.second_derivative(theta);
    let w = g * g + dg * dg;
    if w <= 1e-300 {
        return Err(Error::InvalidCurve(
            "g^2 + g'^2 vanishes; curvature undefined".into(),
        ));
    }
    let k_merid = (g * g + 2.0 * dg * dg - g * d2g) / w.powf(1.5);
    let s = theta.sin();
    let k_rot = if s.abs() < 1e-7 {
        // Symmetric limit on the axis.
        k_merid
    } else {
        (g * s - dg * theta.cos()) / (g * s * w.sqrt())
    };
    Ok(k_merid + (cone.dim() as f64 - 2.0) * k_rot)
}

/// Mean curvature sampled on a uniform theta-grid with `m + 1` points.
pub fn mean_curvature_profile(
    curve: &SigmaCurve,
    cone: &ConeSpec,
    m: usize,
) -> Result<Vec<(f64, f64)>> {
    (0..=m)
        .map(|i| {
            let theta = curve.alpha() * i as f64 / m as f64;
            mean_curvature_at(curve, cone, theta).map(|h| (theta, h))
        })
        .collect()
}

/// Residuals of the admissibility conditions g'(0) = 0 and g'(alpha) = 0.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct OrthogonalityResidual {
    pub at_axis: f64,
    pub at_wall: f64,
}

impl OrthogonalityResidual {
    pub fn max(&self) -> f64 {
        self.at_axis.max(self.at_wall)
    }
}

/// Admissibility threshold on the analytic curve evaluator.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

pub fn orthogonality_residual(curve: &SigmaCurve) -> OrthogonalityResidual {
    OrthogonalityResidual {
        at_axis: curve.derivative(0.0).abs(),
        at_wall: curve.derivative(curve.alpha()).abs(),
    }
}

/// P(Omega; C) / vol^{(n-1)/n} - n (omega_n^C)^{1/n}. Nonnegative, zero
/// exactly for vertex-centered sphere caps.
pub fn isoperimetric_deficit(curve: &SigmaCurve, cone: &ConeSpec) -> Result<f64> {
    let n = cone.dim() as f64;
    let area = sigma_area(curve, cone)?;
    let vol = enclosed_volume(curve, cone)?;
    let omega = cone_unit_ball_volume(cone);
    Ok(area / vol.powf((n - 1.0) / n) - n * omega.powf(1.0 / n))
}

/// integral over Sigma of (n-1)/H minus n vol(Omega ∩ C). Nonnegative for
/// admissible curves with H > 0; zero exactly for vertex-centered caps.
pub fn heintze_karcher_deficit(curve: &SigmaCurve, cone: &ConeSpec) -> Result<f64> {
    check_compatible(curve, cone)?;
    let n = cone.dim();
    let samples = 4096;
    let mut min_h = f64::INFINITY;
    for i in 0..=samples {
        let theta = curve.alpha() * i as f64 / samples as f64;
        min_h = min_h.min(mean_curvature_at(curve, cone, theta)?);
    }
    if min_h <= 0.0 {
        return Err(Error::NonPositiveCurvature { min_h });
    }
    let c = cone.angular_factor();
    let m = n as i32 - 2;
    let integral = quad::integrate_default(
        |t| {
            let g = curve.value(t);
            let dg = curve.derivative(t);
            let h = mean_curvature_at(curve, cone, t).expect("checked above");
            (n as f64 - 1.0) / h * c * (g * t.sin()).powi(m) * (g * g + dg * dg).sqrt()
        },
        0.0,
        curve.alpha(),
    );
    Ok(integral - n as f64 * enclosed_volume(curve, cone)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const HALF: f64 = PI / 2.0;

    #[test]
    fn rejects_nonconvex_opening() {
        assert!(ConeSpec::new(3, 2.0).is_err());
        assert!(ConeSpec::new(3, 0.0).is_err());
        assert!(ConeSpec::new(1, 1.0).is_err());
        assert!(ConeSpec::new(3, 1.0).is_ok());
    }

    #[test]
    fn angular_factor_recursion() {
        assert_eq!(sphere_area_factor(2), 2.0);
        assert_relative_eq!(sphere_area_factor(3), 2.0 * PI, max_relative = 1e-15);
        // c_4 = 2 pi c_2 / 1 = 4 pi, c_5 = 2 pi c_3 / 2 = 2 pi^2.
        assert_relative_eq!(sphere_area_factor(4), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area_factor(5), 2.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn unit_ball_volume_half_space_and_full_space() {
        let half = ConeSpec::new(3, HALF).unwrap();
        assert_relative_eq!(cone_unit_ball_volume(&half), 2.0 * PI / 3.0, max_relative = 1e-12);
        let full = ConeSpec::full_space(3).unwrap();
        assert_relative_eq!(cone_unit_ball_volume(&full), 4.0 * PI / 3.0, max_relative = 1e-12);
        // alpha = pi/3 in R^3: 2 pi / 3 (1 - cos alpha) = pi/3.
        let third = ConeSpec::new(3, PI / 3.0).unwrap();
        assert_relative_eq!(cone_unit_ball_volume(&third), PI / 3.0, max_relative = 1e-12);
        // n = 2 sector of angle alpha has unit-ball area alpha.
        let sector = ConeSpec::new(2, 0.7).unwrap();
        assert_relative_eq!(cone_unit_ball_volume(&sector), 0.7, max_relative = 1e-12);
    }

    #[test]
    fn sphere_cap_area_and_volume() {
        let cone = ConeSpec::new(3, HALF).unwrap();
        let cap = SigmaCurve::sphere(1.0, HALF).unwrap();
        assert_relative_eq!(sigma_area(&cap, &cone).unwrap(), 2.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(
            enclosed_volume(&cap, &cone).unwrap(),
            2.0 * PI / 3.0,
            max_relative = 1e-12
        );
        // Scaling: area ~ R^{n-1}, volume ~ R^n.
        let cap2 = SigmaCurve::sphere(2.0, HALF).unwrap();
        assert_relative_eq!(sigma_area(&cap2, &cone).unwrap(), 8.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(
            enclosed_volume(&cap2, &cone).unwrap(),
            16.0 * PI / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn sphere_mean_curvature_is_constant() {
        for &n in &[2usize, 3, 4, 7] {
            let cone = ConeSpec::new(n, HALF).unwrap();
            let cap = SigmaCurve::sphere(2.0, HALF).unwrap();
            for &theta in &[0.0, 0.3, 1.0, HALF] {
                let h = mean_curvature_at(&cap, &cone, theta).unwrap();
                assert_relative_eq!(h, (n as f64 - 1.0) / 2.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn curvature_scales_inversely() {
        let cone = ConeSpec::new(3, HALF).unwrap();
        let base = SigmaCurve::cosine_series(1.0, &[0.1, -0.03], HALF).unwrap();
        let scaled = base.scaled(2.5);
        for &theta in &[0.1, 0.7, 1.4] {
            let h1 = mean_curvature_at(&base, &cone, theta).unwrap();
            let h2 = mean_curvature_at(&scaled, &cone, theta).unwrap();
            assert_relative_eq!(h2, h1 / 2.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn orthogonality_residual_flags_tilted_curve() {
        // g = 1 + 0.2 cos(theta) has g'(pi/2) = -0.2: meets the wall at a tilt.
        let tilted = SigmaCurve::analytic(
            |t| 1.0 + 0.2 * t.cos(),
            |t| -0.2 * t.sin(),
            |t| -0.2 * t.cos(),
            HALF,
        )
        .unwrap();
        let r = orthogonality_residual(&tilted);
        assert!(r.at_axis.abs() < 1e-15);
        assert_relative_eq!(r.at_wall, 0.2, max_relative = 1e-12);
        assert!(r.max() > ORTHOGONALITY_TOL);

        let flat = SigmaCurve::cosine_series(1.0, &[0.2], HALF).unwrap();
        assert!(orthogonality_residual(&flat).max() < 1e-12);
    }

    #[test]
    fn deficits_vanish_for_caps_and_grow_for_perturbations() {
        let cone = ConeSpec::new(3, HALF).unwrap();
        let cap = SigmaCurve::sphere(1.3, HALF).unwrap();
        assert!(isoperimetric_deficit(&cap, &cone).unwrap().abs() < 1e-10);
        assert!(heintze_karcher_deficit(&cap, &cone).unwrap().abs() < 1e-10);

        let bumpy = SigmaCurve::cosine_series(1.0, &[0.0, 0.05], HALF).unwrap();
        assert!(isoperimetric_deficit(&bumpy, &cone).unwrap() > 1e-4);
        assert!(heintze_karcher_deficit(&bumpy, &cone).unwrap() > 1e-4);
    }

    #[test]
    fn deficits_are_scale_invariant_or_homogeneous() {
        let cone = ConeSpec::new(3, HALF).unwrap();
        let c = SigmaCurve::cosine_series(1.0, &[0.05, 0.1], HALF).unwrap();
        let cs = c.scaled(3.0);
        // Isoperimetric deficit is scale invariant; HK deficit scales like vol.
        assert_relative_eq!(
            isoperimetric_deficit(&cs, &cone).unwrap(),
            isoperimetric_deficit(&c, &cone).unwrap(),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            heintze_karcher_deficit(&cs, &cone).unwrap(),
            heintze_karcher_deficit(&c, &cone).unwrap() * 27.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn heintze_karcher_rejects_nonconvex_curve() {
        let cone = ConeSpec::new(3, HALF).unwrap();
        // Large high-frequency bump drives H negative somewhere.
        let wild = SigmaCurve::cosine_series(1.0, &[0.0, 0.0, 0.45], HALF).unwrap();
        match heintze_karcher_deficit(&wild, &cone) {
            Err(Error::NonPositiveCurvature { min_h }) => assert!(min_h <= 0.0),
            other => panic!("expected NonPositiveCurvature, got {other:?}"),
        }
    }

    #[test]
    fn sampled_curve_matches_analytic_source() {
        let f = |t: f64| 1.0 + 0.15 * (2.0 * PI * t / HALF).cos();
        let ys: Vec<f64> = (0..=200).map(|i| f(HALF * i as f64 / 200.0)).collect();
        let sampled = SigmaCurve::from_samples(&ys, HALF).unwrap();
        let cone = ConeSpec::new(3, HALF).unwrap();
        let exact = SigmaCurve::cosine_series(1.0, &[0.0, 0.15], HALF).unwrap();
        assert_relative_eq!(
            sigma_area(&sampled, &cone).unwrap(),
            sigma_area(&exact, &cone).unwrap(),
            max_relative = 1e-7
        );
        assert_relative_eq!(
            enclosed_volume(&sampled, &cone).unwrap(),
            enclosed_volume(&exact, &cone).unwrap(),
            max_relative = 1e-7
        );
    }

    #[test]
    fn rejects_curve_cone_angle_mismatch() {
        let cone = ConeSpec::new(3, PI / 3.0).unwrap();
        let cap = SigmaCurve::sphere(1.0, HALF).unwrap();
        assert!(sigma_area(&cap, &cone).is_err());
    }

    #[test]
    fn rejects_nonpositive_curve() {
        assert!(SigmaCurve::cosine_series(1.0, &[-1.2], HALF).is_err());
        assert!(SigmaCurve::sphere(0.0, HALF).is_err());
    }
}


//! Property tests: mesh quadrature must agree with adaptive 1-D quadrature
//! of the same annular region over random curves and truncation radii.

use std::f64::consts::PI;

use proptest::prelude::*;
use sectorcap::geometry::{ConeSpec, SigmaCurve};
use sectorcap::mesh::{build_mesh, Grading, MeshParams};
use sectorcap::quad;

const HALF: f64 = PI / 2.0;

/// Volume between the polygonal inner boundary and rho = r_out computed
/// independently of the mesh, but with the same chordal curve so the
/// comparison is quadrature-only. The chord radius at angle theta in
/// [theta_j, theta_{j+1}] interpolates g linearly in theta.
fn annulus_volume_chordal(
    curve: &SigmaCurve,
    cone: &ConeSpec,
    r_out: f64,
    n_theta: usize,
) -> f64 {
    let n = cone.dim();
    let c = cone.angular_factor();
    let dt = cone.theta_max() / n_theta as f64;
    let mut total = 0.0;
    for j in 0..n_theta {
        let (t0, t1) = (dt * j as f64, dt * (j + 1) as f64);
        let (g0, g1) = (curve.value(t0), curve.value(t1));
        total += quad::integrate(
            |t| {
                let g = g0 + (g1 - g0) * (t - t0) / dt;
                c / n as f64 * (r_out.powi(n as i32) - g.powi(n as i32)) * t.sin().powi(n as i32 - 2)
            },
            t0,
            t1,
            1e-13,
        );
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn mesh_measure_matches_independent_quadrature(
        d1 in -0.1f64..0.1,
        d2 in -0.05f64..0.05,
        r_out in 4.0f64..64.0,
        dim in 2usize..5,
        uniform in any::<bool>(),
    ) {
        let cone = ConeSpec::new(dim, HALF).unwrap();
        let curve = SigmaCurve::cosine_series(1.0, &[d1, d2], HALF).unwrap();
        let params = MeshParams {
            n_rho: 64,
            n_theta: 32,
            r_out,
            grading: if uniform { Grading::Uniform } else { Grading::Geometric },
        };
        let mesh = build_mesh(&curve, &cone, &params).unwrap();
        let exact = annulus_volume_chordal(&curve, &cone, r_out, params.n_theta);
        let measured = mesh.measure();
        prop_assert!(
            (measured - exact).abs() / exact < 1e-4,
            "measure {measured} vs chordal quadrature {exact}"
        );
    }
}

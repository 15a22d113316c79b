//! Discrete-energy insertion: interpolating the exact truncated radial
//! profile onto the mesh and evaluating the p-energy by mesh quadrature must
//! reproduce the closed-form truncated capacity at second order.

use std::f64::consts::PI;

use sectorcap::geometry::{ConeSpec, SigmaCurve};
use sectorcap::mesh::{build_mesh, Grading, MeshParams};
use sectorcap::reference::{truncated_radial_solution, truncated_sphere_capacity};

fn discrete_energy(p: f64, n_rho: usize, n_theta: usize, r_out: f64) -> f64 {
    let alpha = PI / 2.0;
    let cone = ConeSpec::new(3, alpha).unwrap();
    let curve = SigmaCurve::sphere(1.0, alpha).unwrap();
    let mesh = build_mesh(
        &curve,
        &cone,
        &MeshParams {
            n_rho,
            n_theta,
            r_out,
            grading: Grading::Geometric,
        },
    )
    .unwrap();
    let u: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|node| truncated_radial_solution(node.rho, 1.0, r_out, 3, p).unwrap().0)
        .collect();
    mesh.quad_points()
        .iter()
        .map(|q| q.weight * q.grad_norm_sq(&u).powf(p / 2.0) / p)
        .sum()
}

#[test]
fn interpolated_profile_energy_converges_at_second_order() {
    let r_out = 16.0;
    for &p in &[1.5, 2.0, 2.5] {
        let exact = truncated_sphere_capacity(1.0, r_out, &ConeSpec::new(3, PI / 2.0).unwrap(), p)
            .unwrap();
        let e_coarse = (discrete_energy(p, 16, 8, r_out) - exact).abs();
        let e_fine = (discrete_energy(p, 64, 32, r_out) - exact).abs();
        let order = (e_coarse / e_fine).log2() / 2.0;
        assert!(
            order >= 1.9,
            "p = {p}: observed order {order} (errors {e_coarse} -> {e_fine})"
        );
        assert!(e_fine / exact < 1e-3, "p = {p}: fine-mesh error too large");
    }
}

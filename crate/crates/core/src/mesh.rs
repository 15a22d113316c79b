//! Structured meridian mesh for the axisymmetric exterior problem.
//!
//! The computational domain is the (rho, theta) strip
//! g(theta) <= rho <= r_out, 0 <= theta <= theta_max, discretized by a
//! tensor grid of bilinear quadrilaterals. All rotational symmetry is folded
//! into the quadrature weight c_n rho^{n-1} sin^{n-2}(theta), so fields and
//! integrals live on the 2-D strip while representing n-dimensional objects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConeSpec, SigmaCurve};

/// Radial node placement between g(theta) and r_out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    /// Log-spaced: rho_i = g (r_out/g)^{i/n_rho}. The right choice for
    /// exterior problems, where the solution varies on logarithmic scales.
    Geometric,
    Uniform,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeshParams {
    pub n_rho: usize,
    pub n_theta: usize,
    pub r_out: f64,
    pub grading: Grading,
}

/// Boundary classification of a node. Dirichlet data is imposed on `Sigma`
/// and `Outer`; `Wall` and `Axis` carry the natural (no-flux) condition and
/// stay unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeTag {
    Interior,
    Sigma,
    Outer,
    Wall,
    Axis,
}

#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub rho: f64,
    pub theta: f64,
    pub tag: NodeTag,
}

/// Precomputed quadrature point: shape values, physical shape gradients and
/// the full measure weight (Gauss weight x Jacobian x rotational factor).
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub nodes: [usize; 4],
    pub shape: [f64; 4],
    /// d shape / d rho.
    pub d_rho: [f64; 4],
    /// d shape / d theta (angular coordinate, not arc length).
    pub d_theta: [f64; 4],
    pub rho: f64,
    pub theta: f64,
    pub weight: f64,
}

impl QuadPoint {
    /// Value of a nodal field at this point.
    pub fn value(&self, u: &[f64]) -> f64 {
        (0..4).map(|a| self.shape[a] * u[self.nodes[a]]).sum()
    }

    /// Physical gradient components (u_rho, u_theta / rho).
    pub fn gradient(&self, u: &[f64]) -> (f64, f64) {
        let mut gr = 0.0;
        let mut gt = 0.0;
        for a in 0..4 {
            gr += self.d_rho[a] * u[self.nodes[a]];
            gt += self.d_theta[a] * u[self.nodes[a]];
        }
        (gr, gt / self.rho)
    }

    pub fn grad_norm_sq(&self, u: &[f64]) -> f64 {
        let (gr, gt) = self.gradient(u);
        gr * gr + gt * gt
    }
}

#[derive(Debug, Clone)]
pub struct MeridianMesh {
    curve: SigmaCurve,
    cone: ConeSpec,
    params: MeshParams,
    nodes: Vec<Node>,
    /// Element connectivity, counterclockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
    elems: Vec<[usize; 4]>,
    qps: Vec<QuadPoint>,
}

/// 2-point Gauss abscissa on [-1, 1].
const GP: f64 = 0.577_350_269_189_625_7;

fn shape_ref(xi: f64, eta: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let d_xi = [
        -0.25 * (1.0 - eta),
        0.25 * (1.0 - eta),
        0.25 * (1.0 + eta),
        -0.25 * (1.0 + eta),
    ];
    let d_eta = [
        -0.25 * (1.0 - xi),
        -0.25 * (1.0 + xi),
        0.25 * (1.0 + xi),
        0.25 * (1.0 - xi),
    ];
    (n, d_xi, d_eta)
}

pub fn build_mesh(curve: &SigmaCurve, cone: &ConeSpec, params: &MeshParams) -> Result<MeridianMesh> {
    if params.n_rho < 4 || params.n_theta < 4 {
        return Err(Error::InvalidArgument(format!(
            "mesh needs n_rho >= 4 and n_theta >= 4 (got {} x {})",
            params.n_rho, params.n_theta
        )));
    }
    if (curve.alpha() - cone.theta_max()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "curve spans [0, {}] but the cone spans [0, {}]",
            curve.alpha(),
            cone.theta_max()
        )));
    }
    let g_max = curve.max_value();
    if params.r_out <= 1.5 * g_max {
        return Err(Error::InvalidTruncation {
            r_out: params.r_out,
            limit: 1.5 * g_max,
        });
    }

    let (n_rho, n_theta) = (params.n_rho, params.n_theta);
    let theta_max = cone.theta_max();
    let full = cone.is_full_space();

    let mut nodes = Vec::with_capacity((n_rho + 1) * (n_theta + 1));
    for j in 0..=n_theta {
        let theta = theta_max * j as f64 / n_theta as f64;
        let g = curve.value(theta);
        for i in 0..=n_rho {
            let s = i as f64 / n_rho as f64;
            let rho = match params.grading {
                Grading::Geometric => g * (params.r_out / g).powf(s),
                Grading::Uniform => g + (params.r_out - g) * s,
            };
            // Tag priority: Sigma and Outer win at corners; the wall exists
            // only for a proper cone, otherwise theta = theta_max is the
            // lower half of the symmetry axis.
            let tag = if i == 0 {
                NodeTag::Sigma
            } else if i == n_rho {
                NodeTag::Outer
            } else if j == 0 {
                NodeTag::Axis
            } else if j == n_theta {
                if full {
                    NodeTag::Axis
                } else {
                    NodeTag::Wall
                }
            } else {
                NodeTag::Interior
            };
            nodes.push(Node { rho, theta, tag });
        }
    }

    let idx = |i: usize, j: usize| j * (n_rho + 1) + i;
    let mut elems = Vec::with_capacity(n_rho * n_theta);
    let mut qps = Vec::with_capacity(4 * n_rho * n_theta);
    for j in 0..n_theta {
        for i in 0..n_rho {
            let conn = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            elems.push(conn);
            let rc: Vec<f64> = conn.iter().map(|&a| nodes[a].rho).collect();
            let tc: Vec<f64> = conn.iter().map(|&a| nodes[a].theta).collect();
            for &eta in &[-GP, GP] {
                for &xi in &[-GP, GP] {
                    let (shape, d_xi, d_eta) = shape_ref(xi, eta);
                    let mut rho = 0.0;
                    let mut theta = 0.0;
                    let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
                    for a in 0..4 {
                        rho += shape[a] * rc[a];
                        theta += shape[a] * tc[a];
                        j11 += d_xi[a] * rc[a];
                        j12 += d_eta[a] * rc[a];
                        j21 += d_xi[a] * tc[a];
                        j22 += d_eta[a] * tc[a];
                    }
                    let det = j11 * j22 - j12 * j21;
                    if det <= 0.0 {
                        return Err(Error::InvalidCurve(format!(
                            "degenerate element at (i, j) = ({i}, {j}): Jacobian {det} <= 0; \
                             the generating curve varies too fast for this mesh"
                        )));
                    }
                    let mut d_rho = [0.0; 4];
                    let mut d_theta = [0.0; 4];
                    for a in 0..4 {
                        d_rho[a] = (j22 * d_xi[a] - j21 * d_eta[a]) / det;
                        d_theta[a] = (-j12 * d_xi[a] + j11 * d_eta[a]) / det;
                    }
                    let weight = det * cone.measure_weight(rho, theta);
                    qps.push(QuadPoint {
                        nodes: conn,
                        shape,
                        d_rho,
                        d_theta,
                        rho,
                        theta,
                        weight,
                    });
                }
            }
        }
    }

    Ok(MeridianMesh {
        curve: curve.clone(),
        cone: *cone,
        params: *params,
        nodes,
        elems,
        qps,
    })
}

impl MeridianMesh {
    pub fn curve(&self) -> &SigmaCurve {
        &self.curve
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn params(&self) -> &MeshParams {
        &self.params
    }

    pub fn r_out(&self) -> f64 {
        self.params.r_out
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn elems(&self) -> &[[usize; 4]] {
        &self.elems
    }

    pub fn quad_points(&self) -> &[QuadPoint] {
        &self.qps
    }

    pub fn n_rho(&self) -> usize {
        self.params.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.params.n_theta
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.params.n_rho + 1) + i
    }

    /// Grid coordinates (radial layer, angular strip) of the element that
    /// owns quadrature point `k`; follows the construction order.
    pub fn qp_grid_index(&self, k: usize) -> (usize, usize) {
        let e = k / 4;
        (e % self.params.n_rho, e / self.params.n_rho)
    }

    /// Same domain at twice the resolution in both directions.
    pub fn refine(&self) -> Result<MeridianMesh> {
        let params = MeshParams {
            n_rho: 2 * self.params.n_rho,
            n_theta: 2 * self.params.n_theta,
            ..self.params
        };
        build_mesh(&self.curve, &self.cone, &params)
    }

    /// Integral of f(rho, theta) against the weighted measure.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.qps.iter().map(|q| q.weight * f(q.rho, q.theta)).sum()
    }

    /// Total weighted measure of the meshed annular region.
    pub fn measure(&self) -> f64 {
        self.qps.iter().map(|q| q.weight).sum()
    }

    /// Evaluate a nodal field at an arbitrary (rho, theta) inside the mesh.
    /// Exact inversion of the bilinear map: at fixed eta, rho is affine in xi.
    pub fn eval_field(&self, u: &[f64], rho: f64, theta: f64) -> Result<f64> {
        let n_theta = self.params.n_theta;
        let n_rho = self.params.n_rho;
        let theta_max = self.cone.theta_max();
        if !(0.0..=theta_max + 1e-12).contains(&theta) {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} outside [0, {theta_max}]"
            )));
        }
        let dt = theta_max / n_theta as f64;
        let j = ((theta / dt).floor() as usize).min(n_theta - 1);
        let eta = 2.0 * (theta - dt * j as f64) / dt - 1.0;
        let col = |i: usize| -> f64 {
            let r0 = self.nodes[self.node_index(i, j)].rho;
            let r1 = self.nodes[self.node_index(i, j + 1)].rho;
            0.5 * ((1.0 - eta) * r0 + (1.0 + eta) * r1)
        };
        if rho < col(0) - 1e-9 || rho > col(n_rho) + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "rho = {rho} outside the meshed range [{}, {}] at theta = {theta}",
                col(0),
                col(n_rho)
            )));
        }
        // Binary search on the monotone column radii.
        let (mut lo, mut hi) = (0usize, n_rho);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if col(mid) <= rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (ra, rb) = (col(lo), col(hi));
        let xi = (2.0 * (rho - ra) / (rb - ra) - 1.0).clamp(-1.0, 1.0);
        let (shape, _, _) = shape_ref(xi, eta);
        let conn = [
            self.node_index(lo, j),
            self.node_index(hi, j),
            self.node_index(hi, j + 1),
            self.node_index(lo, j + 1),
        ];
        Ok((0..4).map(|a| shape[a] * u[conn[a]]).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const HALF: f64 = PI / 2.0;

    fn sphere_mesh(n: usize, r_out: f64, n_rho: usize, n_theta: usize) -> MeridianMesh {
        let alpha = HALF;
        let cone = ConeSpec::new(n, alpha).unwrap();
        let curve = SigmaCurve::sphere(1.0, alpha).unwrap();
        build_mesh(
            &curve,
            &cone,
            &MeshParams {
                n_rho,
                n_theta,
                r_out,
                grading: Grading::Geometric,
            },
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let cone = ConeSpec::new(3, HALF).unwrap();
        let curve = SigmaCurve::sphere(1.0, HALF).unwrap();
        let p = MeshParams {
            n_rho: 3,
            n_theta: 8,
            r_out: 16.0,
            grading: Grading::Geometric,
        };
        assert!(build_mesh(&curve, &cone, &p).is_err());
        let p2 = MeshParams { n_rho: 8, r_out: 1.4, ..p };
        match build_mesh(&curve, &cone, &p2) {
            Err(Error::InvalidTruncation { limit, .. }) => {
                assert_relative_eq!(limit, 1.5, max_relative = 1e-12)
            }
            other => panic!("expected InvalidTruncation, got {other:?}"),
        }
    }

    #[test]
    fn annulus_measure_matches_closed_form() {
        // Half-space annulus 1 <= rho <= 16 in R^3: vol = 2 pi (16^3 - 1) / 3.
        let mesh = sphere_mesh(3, 16.0, 96, 48);
        let exact = 2.0 * PI * (16.0f64.powi(3) - 1.0) / 3.0;
        assert_relative_eq!(mesh.measure(), exact, max_relative = 1e-6);
    }

    #[test]
    fn planar_measure_is_exact() {
        // n = 2: the weight is 2 rho, polynomial on each element, so 2x2
        // Gauss is exact and refinement must not change the measure at all.
        let mesh = sphere_mesh(2, 8.0, 8, 8);
        let exact = HALF * (64.0 - 1.0); // alpha (r^2 - 1) with c_2 = 2
        assert_relative_eq!(mesh.measure(), exact, max_relative = 1e-12);
        let fine = mesh.refine().unwrap();
        assert_relative_eq!(fine.measure(), exact, max_relative = 1e-12);
    }

    #[test]
    fn inverse_quartic_moment() {
        // int rho^-4 dmu over the R^3 half-space annulus = 2 pi (1 - 1/16).
        let mesh = sphere_mesh(3, 16.0, 96, 16);
        let v = mesh.integrate(|rho, _| rho.powi(-4));
        assert_relative_eq!(v, 2.0 * PI * (1.0 - 1.0 / 16.0), max_relative = 1e-5);
    }

    #[test]
    fn tags_partition_the_boundary() {
        let mesh = sphere_mesh(3, 16.0, 8, 6);
        let count = |t: NodeTag| mesh.nodes().iter().filter(|n| n.tag == t).count();
        assert_eq!(count(NodeTag::Sigma), 7);
        assert_eq!(count(NodeTag::Outer), 7);
        assert_eq!(count(NodeTag::Axis), 7);
        assert_eq!(count(NodeTag::Wall), 7);
        assert_eq!(count(NodeTag::Interior), 9 * 7 - 4 * 7);
        assert_eq!(mesh.nodes().len(), 9 * 7);
        assert_eq!(mesh.elems().len(), 48);
        assert_eq!(mesh.quad_points().len(), 4 * 48);
    }

    #[test]
    fn full_space_has_no_wall() {
        let cone = ConeSpec::full_space(3).unwrap();
        let curve = SigmaCurve::sphere(1.0, PI).unwrap();
        let mesh = build_mesh(
            &curve,
            &cone,
            &MeshParams {
                n_rho: 8,
                n_theta: 8,
                r_out: 16.0,
                grading: Grading::Geometric,
            },
        )
        .unwrap();
        assert!(mesh.nodes().iter().all(|n| n.tag != NodeTag::Wall));
        let axis = mesh.nodes().iter().filter(|n| n.tag == NodeTag::Axis).count();
        assert_eq!(axis, 2 * 7);
        // Full ball shell: 4 pi (16^3 - 1) / 3.
        assert_relative_eq!(
            mesh.measure(),
            4.0 * PI * (16.0f64.powi(3) - 1.0) / 3.0,
            max_relative = 1e-4
        );
    }

    #[test]
    fn refine_doubles_resolution() {
        let mesh = sphere_mesh(3, 16.0, 8, 6);
        let fine = mesh.refine().unwrap();
        assert_eq!(fine.n_rho(), 16);
        assert_eq!(fine.n_theta(), 12);
        assert_eq!(fine.nodes().len(), 17 * 13);
    }

    #[test]
    fn eval_field_reproduces_nodal_interpolant() {
        let mesh = sphere_mesh(3, 16.0, 16, 12);
        // An affine-in-(rho,theta) field is reproduced exactly by bilinear
        // elements on this mesh.
        let u: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|n| 0.3 * n.rho - 0.7 * n.theta + 2.0)
            .collect();
        for &(rho, theta) in &[(1.0, 0.0), (2.3, 0.4), (9.7, 1.2), (16.0, HALF)] {
            let v = mesh.eval_field(&u, rho, theta).unwrap();
            assert_relative_eq!(v, 0.3 * rho - 0.7 * theta + 2.0, max_relative = 1e-10);
        }
        assert!(mesh.eval_field(&u, 0.5, 0.3).is_err());
        assert!(mesh.eval_field(&u, 17.0, 0.3).is_err());
    }

    #[test]
    fn quadrature_weights_are_positive() {
        let curve = SigmaCurve::cosine_series(1.0, &[0.1, 0.05], HALF).unwrap();
        let cone = ConeSpec::new(3, HALF).unwrap();
        let mesh = build_mesh(
            &curve,
            &cone,
            &MeshParams {
                n_rho: 24,
                n_theta: 24,
                r_out: 16.0,
                grading: Grading::Geometric,
            },
        )
        .unwrap();
        assert!(mesh.quad_points().iter().all(|q| q.weight >= 0.0));
        // theta = 0 quadrature points carry zero angular weight in R^3 but
        // none are exactly on the axis (Gauss points are interior).
        assert!(mesh.quad_points().iter().all(|q| q.weight > 0.0));
    }
}

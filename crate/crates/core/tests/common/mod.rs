//! Manufactured Stokes solution on the flat box shared by the solver and acceptance tests.
#![allow(dead_code)]

use contact_stokes::assembly::*;
use contact_stokes::equilibrium::{build_equilibrium, EquilibriumSurface, PhysicalParams};
use contact_stokes::fem::element_point;
use contact_stokes::geometry::{coefficient_fields, CosineSeries, Extension};
use contact_stokes::mesh::{build_mesh, BoundaryTag, Mesh};
use contact_stokes::quadrature::TriangleRule;

pub fn flat_box() -> (PhysicalParams, EquilibriumSurface) {
    let p = PhysicalParams {
        ell: 0.5,
        m_top: 1.0,
        ..Default::default()
    };
    let eq = build_equilibrium(&p).unwrap();
    (p, eq)
}

pub fn zero_system(
    p: &PhysicalParams,
    eq: &EquilibriumSurface,
    mesh: &Mesh,
    forcing: Option<&Forcing<'_>>,
) -> AssembledSystem {
    let ext = Extension::new(eq, CosineSeries::zero(eq.ell, mesh.surface_nodes.len()));
    let fields = coefficient_fields(&ext, mesh).unwrap();
    let surface = SurfaceOperator::new(mesh, eq, p);
    let eta = vec![0.0; mesh.surface_nodes.len()];
    assemble_system(mesh, eq, &fields, &surface, &eta, 1.0, p, forcing).unwrap()
}

// Manufactured solution on [−½,½]×[0,1]: u = curl of X²(1−X)²Y²(1−Y)², p = X²Y − 1/6, X = x+½.
pub fn poly(t: f64) -> [f64; 4] {
    let v = t * t * (1.0 - t) * (1.0 - t);
    let d1 = 2.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    let d2 = 2.0 * (1.0 - 6.0 * t + 6.0 * t * t);
    let d3 = 12.0 * (2.0 * t - 1.0);
    [v, d1, d2, d3]
}

pub fn exact(x: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2], f64) {
    let a = poly(x[0] + 0.5);
    let b = poly(x[1]);
    let u = [a[0] * b[1], -a[1] * b[0]];
    let grad = [[a[1] * b[1], a[0] * b[2]], [-a[2] * b[0], -a[1] * b[1]]];
    let p = (x[0] + 0.5).powi(2) * x[1] - 1.0 / 6.0;
    (u, grad, p)
}

pub fn body(x: [f64; 2]) -> [f64; 2] {
    let a = poly(x[0] + 0.5);
    let b = poly(x[1]);
    let lap = [a[2] * b[1] + a[0] * b[3], -a[3] * b[0] - a[1] * b[2]];
    let xx = x[0] + 0.5;
    [-lap[0] + 2.0 * xx * x[1], -lap[1] + xx * xx]
}

pub fn traction(x: [f64; 2], tag: BoundaryTag) -> [f64; 2] {
    let (_, g, p) = exact(x);
    let n = match tag {
        BoundaryTag::Surface => [0.0, 1.0],
        BoundaryTag::Bottom => [0.0, -1.0],
        BoundaryTag::LeftWall => [-1.0, 0.0],
        BoundaryTag::RightWall => [1.0, 0.0],
    };
    let mut t = [0.0; 2];
    for i in 0..2 {
        t[i] -= p * n[i];
        for j in 0..2 {
            t[i] += (g[i][j] + g[j][i]) * n[j];
        }
    }
    t
}

/// (velocity L², velocity H¹, pressure L²) errors.
pub fn mms_errors(n: usize) -> (f64, f64, f64) {
    let (p, eq) = flat_box();
    let mesh = build_mesh(&eq, n, 0.0, Some(1.0)).unwrap();
    let forcing = Forcing {
        body: &body,
        traction: &traction,
    };
    let sys = zero_system(&p, &eq, &mesh, Some(&forcing));
    let sol = solve_saddle(&sys).unwrap();
    assert!(
        sol.flux_multiplier.abs() < 1e-4,
        "flux multiplier {}",
        sol.flux_multiplier
    );
    let rule = TriangleRule::collapsed(6);
    let (mut e0, mut e1, mut ep) = (0.0, 0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let pt = element_point(&mesh, t, q[0], q[1]);
            let (ue, ge, pe) = exact(pt.x);
            let mut uh = [0.0; 2];
            let mut gh = [[0.0; 2]; 2];
            for b in 0..6 {
                for c in 0..2 {
                    uh[c] += pt.phi[b] * sol.u[tri[b]][c];
                    for k in 0..2 {
                        gh[c][k] += pt.grad[b][k] * sol.u[tri[b]][c];
                    }
                }
            }
            let ph: f64 = (0..3)
                .map(|v| pt.psi[v] * sol.p[mesh.pressure_index[tri[v]].unwrap()])
                .sum();
            let ww = w * pt.det;
            for c in 0..2 {
                e0 += ww * (uh[c] - ue[c]).powi(2);
                for k in 0..2 {
                    e1 += ww * (gh[c][k] - ge[c][k]).powi(2);
                }
            }
            ep += ww * (ph - pe).powi(2);
        }
    }
    (e0.sqrt(), (e0 + e1).sqrt(), ep.sqrt())
}

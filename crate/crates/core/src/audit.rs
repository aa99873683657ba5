//! Energy-dissipation bookkeeping for stepped runs.
//!
//! The balance checked per step is
//!
//! ```text
//! d/dt[½(η,η)_{1,Σ} + σ∫𝒬(ζ₀′,∂₁η)] + (μ/2)∫|𝔻_𝒜u|²J + ∫_{Σ_s}βJ|u·τ|²
//!     + κΣ|u·𝒩|² + κΣ Ŵ(u·𝒩)(u·𝒩) = 0,
//! ```
//!
//! with the time derivative taken as a difference across the step and the dissipation at
//! the step's velocity. Integrals use their own quadrature, independent of the assembly.

use crate::assembly::{for_each_surface_point, SurfaceOperator};
use crate::equilibrium::{energy_functional, EquilibriumSurface, PhysicalParams};
use crate::error::{Error, Result};
use crate::fem::{edge_shape, element_point};
use crate::geometry::GeometryFields;
use crate::kernels::{kappa_of, q_eval};
use crate::mesh::{BoundaryTag, Mesh};
use crate::quadrature::{GaussRule, TriangleRule};
use crate::stepper::{Simulation, StepRecord};
use rayon::prelude::*;

/// Collapsed Gauss order for the audit's element quadrature.
const AUDIT_ORDER: usize = 5;

/// ½(η,η)_{1,Σ} + σ∫𝒬(ζ₀′, ∂₁η), which equals 𝓘(ζ₀+η) − 𝓘(ζ₀) for zero-mean η.
pub fn perturbation_energy(
    mesh: &Mesh,
    eq: &EquilibriumSurface,
    surface: &SurfaceOperator,
    params: &PhysicalParams,
    eta: &[f64],
) -> Result<f64> {
    let mut q = 0.0;
    let mut err = None;
    if eta.iter().any(|&e| e != 0.0) {
        for_each_surface_point(mesh, |s0, x, w, _, dpsi| {
            let deta: f64 = (0..3).map(|a| eta[s0 + a] * dpsi[a]).sum();
            match q_eval(eq.eval(x)[1], deta) {
                Ok(v) => q += w * v,
                Err(e) => err = Some(e),
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(surface.quadratic_energy(eta) + params.sigma * q)
}

/// 𝓘(ζ₀ + η).
pub fn total_energy(sim: &Simulation<'_>, eta: &[f64]) -> Result<f64> {
    let base = energy_functional(&sim.eq.zeta0, sim.eq.dx, sim.params)?;
    Ok(base + perturbation_energy(sim.mesh, sim.eq, &sim.surface, sim.params, eta)?)
}

/// Bulk and slip dissipation of a velocity field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipation {
    /// (μ/2)∫|𝔻_𝒜u|²J.
    pub viscous: f64,
    /// ∫_{Σ_s} βJ|u·τ|².
    pub slip: f64,
}

pub fn dissipation(
    mesh: &Mesh,
    fields: &GeometryFields,
    params: &PhysicalParams,
    u: &[[f64; 2]],
) -> Dissipation {
    let rule = TriangleRule::collapsed(AUDIT_ORDER);
    let viscous: f64 = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let tri = &mesh.triangles[t];
            let mut s = 0.0;
            for (p, wq) in rule.points.iter().zip(&rule.weights) {
                let ep = element_point(mesh, t, p[0], p[1]);
                let (mut j, mut a) = (0.0, 0.0);
                let mut grad = [[0.0; 2]; 2];
                for b in 0..6 {
                    let f = &fields.nodes[tri[b]];
                    j += ep.phi[b] * f.j;
                    a += ep.phi[b] * f.a;
                    for c in 0..2 {
                        for k in 0..2 {
                            grad[c][k] += u[tri[b]][c] * ep.grad[b][k];
                        }
                    }
                }
                let k = 1.0 / j;
                let acal = [[1.0, -a * k], [0.0, k]];
                // (∇_𝒜u)_{ij} = 𝒜_{jk} ∂_k u_i
                let mut ga = [[0.0; 2]; 2];
                for i in 0..2 {
                    for jj in 0..2 {
                        ga[i][jj] = acal[jj][0] * grad[i][0] + acal[jj][1] * grad[i][1];
                    }
                }
                let mut dd = 0.0;
                for i in 0..2 {
                    for jj in 0..2 {
                        let d = ga[i][jj] + ga[jj][i];
                        dd += d * d;
                    }
                }
                s += wq * ep.det * 0.5 * params.mu * dd * j;
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let line = GaussRule::unit(AUDIT_ORDER + 1);
    let mut slip = 0.0;
    for e in &mesh.boundary_edges {
        let c = match e.tag {
            BoundaryTag::LeftWall | BoundaryTag::RightWall => 1,
            BoundaryTag::Bottom => 0,
            BoundaryTag::Surface => continue,
        };
        for (t, wq) in line.nodes.iter().zip(&line.weights) {
            let (n, dn) = edge_shape(*t);
            let (mut ut, mut j, mut dx, mut dy) = (0.0, 0.0, 0.0, 0.0);
            for a in 0..3 {
                let node = e.nodes[a];
                ut += n[a] * u[node][c];
                j += n[a] * fields.nodes[node].j;
                dx += dn[a] * mesh.nodes[node][0];
                dy += dn[a] * mesh.nodes[node][1];
            }
            slip += wq * (dx * dx + dy * dy).sqrt() * params.beta * j * ut * ut;
        }
    }
    Dissipation { viscous, slip }
}

/// One line of the energy balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditEntry {
    pub time: f64,
    pub dt: f64,
    pub energy_old: f64,
    pub energy_new: f64,
    pub viscous: f64,
    pub slip: f64,
    /// κΣ|u·𝒩|².
    pub contact: f64,
    /// κΣ Ŵ(u·𝒩)(u·𝒩).
    pub contact_nonlinear: f64,
    /// |ΔE/dt + dissipation|.
    pub residual: f64,
}

/// Balance residual per recorded step.
pub fn energy_audit(sim: &Simulation<'_>, records: &[StepRecord]) -> Result<Vec<AuditEntry>> {
    if records.is_empty() {
        return Err(Error::InsufficientHistory { have: 1, need: 2 });
    }
    let kappa = kappa_of(&sim.params.response);
    let energy = |eta: &[f64]| perturbation_energy(sim.mesh, sim.eq, &sim.surface, sim.params, eta);
    let mut out = Vec::with_capacity(records.len());
    let mut cached: Option<(Vec<f64>, f64)> = None;
    for r in records {
        let energy_old = match &cached {
            Some((eta, e)) if eta == &r.eta_old => *e,
            _ => energy(&r.eta_old)?,
        };
        let energy_new = energy(&r.eta_new)?;
        let fields = sim.fields(&r.eta_old)?;
        let d = dissipation(sim.mesh, &fields, sim.params, &r.u);
        let v = r.contact_velocities;
        let contact = kappa * (v[0] * v[0] + v[1] * v[1]);
        let contact_nonlinear = kappa * (r.w_hat[0] * v[0] + r.w_hat[1] * v[1]);
        let residual =
            ((energy_new - energy_old) / r.dt + d.viscous + d.slip + contact + contact_nonlinear)
                .abs();
        out.push(AuditEntry {
            time: r.time,
            dt: r.dt,
            energy_old,
            energy_new,
            viscous: d.viscous,
            slip: d.slip,
            contact,
            contact_nonlinear,
            residual,
        });
        cached = Some((r.eta_new.clone(), energy_new));
    }
    Ok(out)
}

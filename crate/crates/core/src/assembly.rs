//! Mixed P2/P1 discretization of the flattened Stokes problem with surface-tension and
//! contact-point coupling.
//!
//! Unknowns are ordered as free velocity components (node-major), P1 pressures, the
//! zero-mean pressure multiplier and the flux multiplier enforcing ∫ u·𝒩 = 0 on Σ.

use crate::equilibrium::{EquilibriumSurface, PhysicalParams};
use crate::error::{Error, Result};
use crate::fem::{edge_shape, element_point};
use crate::geometry::{validate_geometry, GeometryFields};
use crate::kernels::{kappa_of, r_eval};
use crate::linalg::{Factorization, PatternCache, TripletMatrix};
use crate::mesh::{BoundaryTag, Mesh};
use crate::quadrature::{GaussRule, TriangleRule};
use rayon::prelude::*;

/// Global numbering of the unknowns.
#[derive(Debug, Clone)]
pub struct DofMap {
    /// Equation index of each velocity component, `None` where u·ν = 0 fixes it.
    pub velocity: Vec<[Option<usize>; 2]>,
    pub n_velocity: usize,
    pub pressure_offset: usize,
    pub n_pressure: usize,
    pub mean_row: usize,
    pub flux_row: usize,
    pub size: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let fixed = mesh.fixed_components();
        let mut next = 0;
        let velocity = fixed
            .iter()
            .map(|f| {
                let mut d = [None; 2];
                for c in 0..2 {
                    if !f[c] {
                        d[c] = Some(next);
                        next += 1;
                    }
                }
                d
            })
            .collect();
        let n_pressure = mesh.n_pressure();
        Self {
            velocity,
            n_velocity: next,
            pressure_offset: next,
            n_pressure,
            mean_row: next + n_pressure,
            flux_row: next + n_pressure + 1,
            size: next + n_pressure + 2,
        }
    }
}

/// Surface mass and stiffness in x₁ for the quadratic surface nodes.
///
/// `stiffness` is (φ,ψ)_{1,Σ} = ∫ gφψ + σφ′ψ′/(1+ζ₀′²)^{3/2}.
#[derive(Debug, Clone)]
pub struct SurfaceOperator {
    pub x: Vec<f64>,
    pub mass: Vec<f64>,
    pub stiffness: TripletMatrix,
}

/// Gauss points per surface edge.
pub const SURFACE_GAUSS: usize = 5;

/// Quadrature on the quadratic surface edges: calls `f(edge, [i0,i1,i2], t-weight data)`.
pub(crate) fn for_each_surface_point(
    mesh: &Mesh,
    mut f: impl FnMut(usize, f64, f64, [f64; 3], [f64; 3]),
) {
    let rule = GaussRule::unit(SURFACE_GAUSS);
    let xs = mesh.surface_x();
    for k in 0..mesh.nx {
        let (x0, x2) = (xs[2 * k], xs[2 * k + 2]);
        let h = x2 - x0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let (n, dn) = edge_shape(*t);
            let d = [dn[0] / h, dn[1] / h, dn[2] / h];
            f(2 * k, x0 + t * h, w * h, n, d);
        }
    }
}

impl SurfaceOperator {
    pub fn new(mesh: &Mesh, eq: &EquilibriumSurface, params: &PhysicalParams) -> Self {
        let n = mesh.surface_nodes.len();
        let mut mass = vec![0.0; n];
        let mut stiffness = TripletMatrix::new(n);
        for_each_surface_point(mesh, |s0, x, w, psi, dpsi| {
            let dz = eq.eval(x)[1];
            let weight = params.sigma / (1.0 + dz * dz).powf(1.5);
            for a in 0..3 {
                mass[s0 + a] += w * psi[a];
                for b in 0..3 {
                    stiffness.add(
                        s0 + a,
                        s0 + b,
                        w * (params.g * psi[a] * psi[b] + weight * dpsi[a] * dpsi[b]),
                    );
                }
            }
        });
        Self {
            x: mesh.surface_x(),
            mass,
            stiffness,
        }
    }

    pub fn apply(&self, eta: &[f64]) -> Vec<f64> {
        self.stiffness.mul(eta)
    }

    /// ½ (η, η)_{1,Σ}.
    pub fn quadratic_energy(&self, eta: &[f64]) -> f64 {
        0.5 * self
            .apply(eta)
            .iter()
            .zip(eta)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    /// ∫ η dx₁ of the quadratic interpolant.
    pub fn integral(&self, eta: &[f64]) -> f64 {
        self.mass.iter().zip(eta).map(|(m, e)| m * e).sum()
    }
}

/// Manufactured body force and boundary traction added to the load.
pub struct Forcing<'a> {
    /// Body force f, integrated as ∫ f·w J.
    pub body: &'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    /// Traction on every boundary edge, integrated against arclength.
    pub traction: &'a (dyn Fn([f64; 2], BoundaryTag) -> [f64; 2] + Sync),
}

/// The assembled monolithic system for one time step.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: TripletMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    /// 𝒩 at the two contact nodes.
    pub contact_normals: [[f64; 2]; 2],
    /// Equation indices of the contact node velocity components.
    pub contact_dofs: [[Option<usize>; 2]; 2],
    /// Flux row: m_i 𝒩_i per free surface component.
    pub flux: Vec<(usize, f64)>,
}

/// Velocity, pressure and multipliers of one saddle solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub u: Vec<[f64; 2]>,
    pub p: Vec<f64>,
    pub mean_multiplier: f64,
    pub flux_multiplier: f64,
}

/// Coefficients J and A at a quadrature point, interpolated from the nodal fields.
fn interpolate_fields(fields: &GeometryFields, tri: &[usize; 6], phi: &[f64; 6]) -> (f64, f64) {
    let mut j = 0.0;
    let mut a = 0.0;
    for k in 0..6 {
        let f = &fields.nodes[tri[k]];
        j += phi[k] * f.j;
        a += phi[k] * f.a;
    }
    (j, a)
}

struct ElementBlock {
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<(usize, f64)>,
    mean: Vec<(usize, f64)>,
}

fn element_block(
    mesh: &Mesh,
    fields: &GeometryFields,
    dofs: &DofMap,
    rule: &TriangleRule,
    mu: f64,
    forcing: Option<&Forcing<'_>>,
    t: usize,
) -> ElementBlock {
    let tri = &mesh.triangles[t];
    let mut kvv = [[0.0; 12]; 12];
    let mut bqv = [[0.0; 12]; 3];
    let mut fv = [0.0; 12];
    let mut mq = [0.0; 3];
    for (p, wq) in rule.points.iter().zip(&rule.weights) {
        let ep = element_point(mesh, t, p[0], p[1]);
        let w = wq * ep.det;
        let (j, a) = interpolate_fields(fields, tri, &ep.phi);
        let k = 1.0 / j;
        // g = 𝒜∇φ with 𝒜 = [[1, −AK], [0, K]]
        let mut g = [[0.0; 2]; 6];
        for b in 0..6 {
            g[b] = [ep.grad[b][0] - a * k * ep.grad[b][1], k * ep.grad[b][1]];
        }
        let wj = w * j;
        for b1 in 0..6 {
            for b2 in 0..6 {
                let dot = g[b1][0] * g[b2][0] + g[b1][1] * g[b2][1];
                for c in 0..2 {
                    for d in 0..2 {
                        let delta = if c == d { dot } else { 0.0 };
                        kvv[2 * b1 + c][2 * b2 + d] += mu * wj * (delta + g[b1][d] * g[b2][c]);
                    }
                }
            }
        }
        for q in 0..3 {
            mq[q] += w * ep.psi[q];
            for b in 0..6 {
                for d in 0..2 {
                    bqv[q][2 * b + d] -= wj * ep.psi[q] * g[b][d];
                }
            }
        }
        if let Some(f) = forcing {
            let fb = (f.body)(ep.x);
            for b in 0..6 {
                for d in 0..2 {
                    fv[2 * b + d] += wj * fb[d] * ep.phi[b];
                }
            }
        }
    }
    let vdof = |i: usize| dofs.velocity[tri[i / 2]][i % 2];
    let mut entries = Vec::with_capacity(144 + 72);
    let mut rhs = Vec::new();
    for r in 0..12 {
        let Some(gr) = vdof(r) else { continue };
        for c in 0..12 {
            if let Some(gc) = vdof(c) {
                entries.push((gr, gc, kvv[r][c]));
            }
        }
        if fv[r] != 0.0 {
            rhs.push((gr, fv[r]));
        }
    }
    let mut mean = Vec::with_capacity(3);
    for q in 0..3 {
        let pq =
            dofs.pressure_offset + mesh.pressure_index[tri[q]].expect("vertex carries a pressure");
        mean.push((pq, mq[q]));
        for c in 0..12 {
            if let Some(gc) = vdof(c) {
                entries.push((pq, gc, bqv[q][c]));
                entries.push((gc, pq, bqv[q][c]));
            }
        }
    }
    ElementBlock { entries, rhs, mean }
}

/// Assembles the step system for surface perturbation `eta` (quadratic surface nodal values).
///
/// The surface unknown is eliminated by ξ = ηⁿ + dt·(u·𝒩); ℛ is lagged at ηⁿ and the
/// contact nonlinearity Ŵ is left to the caller (see [`AssembledSystem::contact_load`]).
#[allow(clippy::too_many_arguments)]
pub fn assemble_system(
    mesh: &Mesh,
    eq: &EquilibriumSurface,
    fields: &GeometryFields,
    surface: &SurfaceOperator,
    eta: &[f64],
    dt: f64,
    params: &PhysicalParams,
    forcing: Option<&Forcing<'_>>,
) -> Result<AssembledSystem> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep(dt));
    }
    let ns = mesh.surface_nodes.len();
    if eta.len() != ns || fields.nodes.len() != mesh.n_nodes() {
        return Err(Error::InvalidInput(format!(
            "eta has {} values and fields {} nodes; mesh has {} surface nodes and {} nodes",
            eta.len(),
            fields.nodes.len(),
            ns,
            mesh.n_nodes()
        )));
    }
    let status = validate_geometry(fields);
    if !status.ok {
        return Err(Error::GeometryGate {
            j_dev: status.worst_j_dev,
            a_max: status.worst_a,
        });
    }
    let dofs = DofMap::new(mesh);
    let mut matrix = TripletMatrix::new(dofs.size);
    let mut rhs = vec![0.0; dofs.size];
    let rule = TriangleRule::degree5();

    let blocks: Vec<ElementBlock> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| element_block(mesh, fields, &dofs, &rule, params.mu, forcing, t))
        .collect();
    for b in blocks {
        matrix.entries.extend(b.entries);
        for (r, v) in b.rhs {
            rhs[r] += v;
        }
        for (p, v) in b.mean {
            matrix.add(p, dofs.mean_row, v);
            matrix.add(dofs.mean_row, p, v);
        }
    }

    boundary_terms(
        mesh,
        fields,
        &dofs,
        params.beta,
        forcing,
        &mut matrix,
        &mut rhs,
    );

    // surface coupling (ξ, w·𝒩)_{1,Σ} and the lagged curvature remainder
    let normal = |s: usize| fields.n_vec[s];
    let sdof = |s: usize, c: usize| dofs.velocity[mesh.surface_nodes[s]][c];
    for &(r, c, v) in &surface.stiffness.entries {
        let (nr, nc) = (normal(r), normal(c));
        for a in 0..2 {
            let Some(gr) = sdof(r, a) else { continue };
            for b in 0..2 {
                if let Some(gc) = sdof(c, b) {
                    matrix.add(gr, gc, dt * v * nr[a] * nc[b]);
                }
            }
            rhs[gr] -= v * eta[c] * nr[a];
        }
    }
    let mut r_load = vec![0.0; ns];
    if eta.iter().any(|&e| e != 0.0) {
        for_each_surface_point(mesh, |s0, x, w, _psi, dpsi| {
            let deta: f64 = (0..3).map(|a| eta[s0 + a] * dpsi[a]).sum();
            let r = r_eval(eq.eval(x)[1], deta);
            for a in 0..3 {
                r_load[s0 + a] += w * params.sigma * r * dpsi[a];
            }
        });
    }
    let mut flux = Vec::new();
    for s in 0..ns {
        let n = normal(s);
        for a in 0..2 {
            if let Some(g) = sdof(s, a) {
                rhs[g] -= r_load[s] * n[a];
                let f = surface.mass[s] * n[a];
                flux.push((g, f));
                matrix.add(g, dofs.flux_row, f);
                matrix.add(dofs.flux_row, g, f);
            }
        }
    }

    // contact bracket κ (u·𝒩)(w·𝒩) at ±ℓ
    let kappa = kappa_of(&params.response);
    let ends = [0, ns - 1];
    let contact_normals = [normal(ends[0]), normal(ends[1])];
    let mut contact_dofs = [[None; 2]; 2];
    for (side, &s) in ends.iter().enumerate() {
        let n = normal(s);
        contact_dofs[side] = [sdof(s, 0), sdof(s, 1)];
        for a in 0..2 {
            let Some(gr) = sdof(s, a) else { continue };
            for b in 0..2 {
                if let Some(gc) = sdof(s, b) {
                    matrix.add(gr, gc, kappa * n[a] * n[b]);
                }
            }
        }
    }

    Ok(AssembledSystem {
        matrix,
        rhs,
        dofs,
        contact_normals,
        contact_dofs,
        flux,
    })
}

fn boundary_terms(
    mesh: &Mesh,
    fields: &GeometryFields,
    dofs: &DofMap,
    beta: f64,
    forcing: Option<&Forcing<'_>>,
    matrix: &mut TripletMatrix,
    rhs: &mut [f64],
) {
    let rule = GaussRule::unit(SURFACE_GAUSS);
    for e in &mesh.boundary_edges {
        // tangential component carrying slip
        let slip = match e.tag {
            BoundaryTag::LeftWall | BoundaryTag::RightWall => Some(1),
            BoundaryTag::Bottom => Some(0),
            BoundaryTag::Surface => None,
        };
        if slip.is_none() && forcing.is_none() {
            continue;
        }
        let xs = e.nodes.map(|n| mesh.nodes[n]);
        for (t, wq) in rule.nodes.iter().zip(&rule.weights) {
            let (n, dn) = edge_shape(*t);
            let mut x = [0.0; 2];
            let mut dx = [0.0; 2];
            let mut j = 0.0;
            for a in 0..3 {
                for c in 0..2 {
                    x[c] += n[a] * xs[a][c];
                    dx[c] += dn[a] * xs[a][c];
                }
                j += n[a] * fields.nodes[e.nodes[a]].j;
            }
            let ds = wq * (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
            if let Some(c) = slip {
                for a in 0..3 {
                    let Some(gr) = dofs.velocity[e.nodes[a]][c] else {
                        continue;
                    };
                    for b in 0..3 {
                        if let Some(gc) = dofs.velocity[e.nodes[b]][c] {
                            matrix.add(gr, gc, beta * j * n[a] * n[b] * ds);
                        }
                    }
                }
            }
            if let Some(f) = forcing {
                let tr = (f.traction)(x, e.tag);
                for a in 0..3 {
                    for c in 0..2 {
                        if let Some(gr) = dofs.velocity[e.nodes[a]][c] {
                            rhs[gr] += tr[c] * n[a] * ds;
                        }
                    }
                }
            }
        }
    }
}

impl AssembledSystem {
    pub fn factor(&self) -> Result<Factorization> {
        Factorization::new(self.matrix.clone())
    }

    pub fn factor_cached(&self, cache: &PatternCache) -> Result<Factorization> {
        Factorization::with_pattern_cache(self.matrix.clone(), cache)
    }

    /// Load −κŴ(v±)(w·𝒩)(±ℓ) for contact-line velocities `w_hat` = [Ŵ(v₋), Ŵ(v₊)].
    pub fn contact_load(&self, kappa: f64, w_hat: [f64; 2]) -> Vec<f64> {
        let mut b = vec![0.0; self.dofs.size];
        for side in 0..2 {
            for a in 0..2 {
                if let Some(g) = self.contact_dofs[side][a] {
                    b[g] -= kappa * w_hat[side] * self.contact_normals[side][a];
                }
            }
        }
        b
    }

    /// Normal velocity u·𝒩 at the two contact nodes.
    pub fn contact_velocities(&self, x: &[f64]) -> [f64; 2] {
        let mut v = [0.0; 2];
        for side in 0..2 {
            for a in 0..2 {
                if let Some(g) = self.contact_dofs[side][a] {
                    v[side] += x[g] * self.contact_normals[side][a];
                }
            }
        }
        v
    }

    /// Σ m_i (u_i·𝒩_i), the discrete flux through Σ.
    pub fn flux_of(&self, x: &[f64]) -> f64 {
        self.flux.iter().map(|&(g, f)| f * x[g]).sum()
    }

    pub fn unpack(&self, x: &[f64]) -> SaddleSolution {
        let u = self
            .dofs
            .velocity
            .iter()
            .map(|d| [d[0].map_or(0.0, |g| x[g]), d[1].map_or(0.0, |g| x[g])])
            .collect();
        let p =
            x[self.dofs.pressure_offset..self.dofs.pressure_offset + self.dofs.n_pressure].to_vec();
        SaddleSolution {
            u,
            p,
            mean_multiplier: x[self.dofs.mean_row],
            flux_multiplier: x[self.dofs.flux_row],
        }
    }
}

/// Direct solve of the assembled system.
pub fn solve_saddle(system: &AssembledSystem) -> Result<SaddleSolution> {
    let x = system.factor()?.solve(&system.rhs)?;
    Ok(system.unpack(&x))
}

/// P1 pressure mass matrix on the reference domain.
pub fn pressure_mass(mesh: &Mesh) -> TripletMatrix {
    let rule = TriangleRule::degree5();
    let mut m = TripletMatrix::new(mesh.n_pressure());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let idx =
            [0, 1, 2].map(|q| mesh.pressure_index[tri[q]].expect("vertex carries a pressure"));
        for (p, wq) in rule.points.iter().zip(&rule.weights) {
            let ep = element_point(mesh, t, p[0], p[1]);
            for a in 0..3 {
                for b in 0..3 {
                    m.add(idx[a], idx[b], wq * ep.det * ep.psi[a] * ep.psi[b]);
                }
            }
        }
    }
    m
}

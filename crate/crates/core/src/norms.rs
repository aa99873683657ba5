//! Weighted and fractional Sobolev norms, energy/dissipation functionals, decay fits and
//! the corner-regularity probe.

use crate::assembly::for_each_surface_point;
use crate::audit::{energy_audit, total_energy};
use crate::equilibrium::{uniform_derivative, uniform_weights, PhysicalParams};
use crate::error::{Error, Result};
use crate::fem::{edge_shape, element_point};
use crate::geometry::CosineSeries;
use crate::kernels::kappa_of;
use crate::linalg::dense_solve;
use crate::mesh::{BoundaryTag, Mesh};
use crate::quadrature::TriangleRule;
use crate::stepper::{Simulation, StepRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Order, weight exponent and corner set of a weighted norm ‖·‖_{W^k_δ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub k: usize,
    pub delta: f64,
    pub corners: Vec<[f64; 2]>,
    /// Restricts the integral to a smooth neighbourhood of the corners of this radius.
    pub patch_radius: Option<f64>,
}

impl WeightedNormSpec {
    pub fn new(k: usize, delta: f64, corners: Vec<[f64; 2]>) -> Self {
        Self {
            k,
            delta,
            corners,
            patch_radius: None,
        }
    }

    /// Norm on the contact corners of `mesh`.
    pub fn on_mesh(mesh: &Mesh, k: usize, delta: f64) -> Self {
        Self::new(
            k,
            delta,
            mesh.corners.iter().map(|&c| mesh.nodes[c]).collect(),
        )
    }

    fn distance(&self, x: [f64; 2]) -> f64 {
        self.corners
            .iter()
            .map(|c| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// dist^{2δ} times the patch cutoff.
    fn weight(&self, x: [f64; 2]) -> f64 {
        let d = self.distance(x);
        let cut = match self.patch_radius {
            Some(r) => smooth_cutoff(d / r),
            None => 1.0,
        };
        if cut == 0.0 {
            0.0
        } else if self.delta == 0.0 {
            cut
        } else {
            cut * d.powf(2.0 * self.delta)
        }
    }
}

/// 1 on [0, ½], 0 beyond 1, C² in between.
fn smooth_cutoff(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = 2.0 * (1.0 - t);
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Nodal second derivatives [∂₁₁, ∂₁₂, ∂₂₂] by least-squares quadratic fits over the
/// nodes of each node's element patch.
pub fn recover_hessian(mesh: &Mesh, values: &[f64]) -> Vec<[f64; 3]> {
    let adj = mesh.node_elements();
    (0..mesh.n_nodes())
        .into_par_iter()
        .map(|n| {
            let mut patch: Vec<usize> = adj[n].iter().flat_map(|&t| mesh.triangles[t]).collect();
            patch.sort_unstable();
            patch.dedup();
            let x0 = mesh.nodes[n];
            let h = patch
                .iter()
                .map(|&m| {
                    ((mesh.nodes[m][0] - x0[0]).powi(2) + (mesh.nodes[m][1] - x0[1]).powi(2)).sqrt()
                })
                .fold(0.0, f64::max);
            let mut ata = vec![vec![0.0; 6]; 6];
            let mut atb = vec![0.0; 6];
            for &m in &patch {
                let dx = (mesh.nodes[m][0] - x0[0]) / h;
                let dy = (mesh.nodes[m][1] - x0[1]) / h;
                let row = [1.0, dx, dy, dx * dx, dx * dy, dy * dy];
                for i in 0..6 {
                    atb[i] += row[i] * values[m];
                    for j in 0..6 {
                        ata[i][j] += row[i] * row[j];
                    }
                }
            }
            match dense_solve(ata, atb) {
                Some(c) => [2.0 * c[3] / (h * h), c[4] / (h * h), 2.0 * c[5] / (h * h)],
                None => [0.0; 3],
            }
        })
        .collect()
}

const MAX_SPLIT_DEPTH: usize = 12;
const RADIAL_LAYERS: usize = 48;

struct WeightedIntegrand<'a> {
    mesh: &'a Mesh,
    values: &'a [f64],
    hessian: Option<&'a [[f64; 3]]>,
    spec: &'a WeightedNormSpec,
    rule: TriangleRule,
}

impl WeightedIntegrand<'_> {
    /// Σ_{|α|≤k} |∂^α u|² at a reference point of element t.
    fn density(&self, t: usize, r: [f64; 2]) -> (f64, f64) {
        let ep = element_point(self.mesh, t, r[0], r[1]);
        let tri = &self.mesh.triangles[t];
        let w = self.spec.weight(ep.x);
        if w == 0.0 {
            return (0.0, ep.det);
        }
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut hs = [0.0; 3];
        for b in 0..6 {
            let f = self.values[tri[b]];
            v += ep.phi[b] * f;
            g[0] += ep.grad[b][0] * f;
            g[1] += ep.grad[b][1] * f;
            if let Some(h) = self.hessian {
                for c in 0..3 {
                    hs[c] += ep.phi[b] * h[tri[b]][c];
                }
            }
        }
        let mut s = v * v;
        if self.spec.k >= 1 {
            s += g[0] * g[0] + g[1] * g[1];
        }
        if self.spec.k >= 2 {
            s += hs[0] * hs[0] + 2.0 * hs[1] * hs[1] + hs[2] * hs[2];
        }
        (w * s, ep.det)
    }

    fn physical(&self, t: usize, r: [f64; 2]) -> [f64; 2] {
        element_point(self.mesh, t, r[0], r[1]).x
    }

    /// Rule applied on the reference sub-triangle `v`.
    fn apply_rule(&self, t: usize, v: [[f64; 2]; 3]) -> f64 {
        let area2 = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
            .abs();
        let mut s = 0.0;
        for (p, w) in self.rule.points.iter().zip(&self.rule.weights) {
            let r = [
                v[0][0] + p[0] * (v[1][0] - v[0][0]) + p[1] * (v[2][0] - v[0][0]),
                v[0][1] + p[0] * (v[1][1] - v[0][1]) + p[1] * (v[2][1] - v[0][1]),
            ];
            let (f, det) = self.density(t, r);
            s += w * area2 * f * det;
        }
        s
    }

    fn integrate(&self, t: usize, v: [[f64; 2]; 3], depth: usize) -> f64 {
        let xs = v.map(|r| self.physical(t, r));
        let diam = (0..3)
            .map(|i| {
                let j = (i + 1) % 3;
                ((xs[i][0] - xs[j][0]).powi(2) + (xs[i][1] - xs[j][1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        if let Some(i) = (0..3).find(|&i| self.spec.distance(xs[i]) <= 1e-12 * diam.max(1e-300)) {
            return self.radial(t, [v[i], v[(i + 1) % 3], v[(i + 2) % 3]], depth);
        }
        let dist = self
            .spec
            .corners
            .iter()
            .map(|c| point_triangle_distance(*c, xs))
            .fold(f64::INFINITY, f64::min);
        if dist < 2.0 * diam && depth < MAX_SPLIT_DEPTH {
            let m = [mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0])];
            return self.integrate(t, [v[0], m[0], m[2]], depth + 1)
                + self.integrate(t, [m[0], v[1], m[1]], depth + 1)
                + self.integrate(t, [m[2], m[1], v[2]], depth + 1)
                + self.integrate(t, [m[0], m[1], m[2]], depth + 1);
        }
        self.apply_rule(t, v)
    }

    /// Geometric layers toward the corner vertex `v[0]`.
    fn radial(&self, t: usize, v: [[f64; 2]; 3], depth: usize) -> f64 {
        let at = |p: [f64; 2], s: f64| {
            [
                v[0][0] + s * (p[0] - v[0][0]),
                v[0][1] + s * (p[1] - v[0][1]),
            ]
        };
        let mut total = 0.0;
        let mut s = 1.0;
        for _ in 0..RADIAL_LAYERS {
            let h = 0.5 * s;
            let (a1, b1, a0, b0) = (at(v[1], s), at(v[2], s), at(v[1], h), at(v[2], h));
            total += self.integrate_layer(t, [a0, a1, b1], depth)
                + self.integrate_layer(t, [a0, b1, b0], depth);
            s = h;
        }
        total + self.apply_rule(t, [v[0], at(v[1], s), at(v[2], s)])
    }

    fn integrate_layer(&self, t: usize, v: [[f64; 2]; 3], depth: usize) -> f64 {
        // one split keeps the rule resolving r^{2δ} across the layer
        let m = [mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0])];
        let _ = depth;
        self.apply_rule(t, [v[0], m[0], m[2]])
            + self.apply_rule(t, [m[0], v[1], m[1]])
            + self.apply_rule(t, [m[2], m[1], v[2]])
            + self.apply_rule(t, [m[0], m[1], m[2]])
    }
}

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * ab[0]).powi(2) + (p[1] - a[1] - t * ab[1]).powi(2)).sqrt()
}

fn point_triangle_distance(p: [f64; 2], x: [[f64; 2]; 3]) -> f64 {
    let cross =
        |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let s = [cross(x[0], x[1]), cross(x[1], x[2]), cross(x[2], x[0])];
    if s.iter().all(|&v| v >= 0.0) || s.iter().all(|&v| v <= 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|i| point_segment_distance(p, x[i], x[(i + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

/// ‖u‖_{W^k_δ} = (Σ_{|α|≤k} ∫ dist(x,M)^{2δ} |∂^α u|²)^{1/2} for a quadratic nodal field.
///
/// First derivatives come from the element basis, second derivatives from patch recovery.
pub fn weighted_norm(mesh: &Mesh, values: &[f64], spec: &WeightedNormSpec) -> Result<f64> {
    if spec.k > 2 {
        return Err(Error::InvalidInput(format!(
            "order k = {} exceeds the two derivatives available for quadratic fields",
            spec.k
        )));
    }
    if values.len() != mesh.n_nodes() {
        return Err(Error::InvalidInput(format!(
            "field has {} values, mesh {} nodes",
            values.len(),
            mesh.n_nodes()
        )));
    }
    if !(spec.delta > -1.0 && spec.delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "weight exponent {} must exceed -1",
            spec.delta
        )));
    }
    let hess = if spec.k == 2 {
        Some(recover_hessian(mesh, values))
    } else {
        None
    };
    let integrand = WeightedIntegrand {
        mesh,
        values,
        hessian: hess.as_deref(),
        spec,
        rule: TriangleRule::collapsed(6),
    };
    let reference = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let parts: Vec<f64> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| integrand.integrate(t, reference, 0))
        .collect();
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// Componentwise weighted norm of a vector field.
pub fn weighted_norm_vector(
    mesh: &Mesh,
    values: &[[f64; 2]],
    spec: &WeightedNormSpec,
) -> Result<f64> {
    let mut s = 0.0;
    for c in 0..2 {
        let comp: Vec<f64> = values.iter().map(|v| v[c]).collect();
        s += weighted_norm(mesh, &comp, spec)?.powi(2);
    }
    Ok(s.sqrt())
}

/// Quadratic nodal representation of a P1 pressure field.
pub fn pressure_to_nodal(mesh: &Mesh, p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_nodes()];
    for tri in &mesh.triangles {
        let v =
            [0, 1, 2].map(|i| p[mesh.pressure_index[tri[i]].expect("vertex carries a pressure")]);
        out[tri[0]] = v[0];
        out[tri[1]] = v[1];
        out[tri[2]] = v[2];
        out[tri[3]] = 0.5 * (v[0] + v[1]);
        out[tri[4]] = 0.5 * (v[1] + v[2]);
        out[tri[5]] = 0.5 * (v[2] + v[0]);
    }
    out
}

/// Gagliardo seminorm ∫∫ d(x)^δ d(y)^δ |f(x)−f(y)|²/|x−y|² on uniform samples over
/// (−ℓ, ℓ), d the distance to the nearer endpoint; the diagonal takes its Taylor limit f′².
pub fn gagliardo_seminorm(f: &[f64], ell: f64, delta: f64) -> Result<f64> {
    let n = f.len();
    if n < 8 {
        return Err(Error::GridTooCoarse { got: n, need: 8 });
    }
    let h = 2.0 * ell / (n - 1) as f64;
    let w = uniform_weights(n, h)?;
    let df = uniform_derivative(f, h)?;
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let x = -ell + i as f64 * h;
            let dist = (ell - x.abs()).max(0.0);
            if delta == 0.0 {
                1.0
            } else {
                dist.powf(delta)
            }
        })
        .collect();
    let s: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = w[i] * d[i] * d[i] * df[i] * df[i];
            for j in 0..n {
                if j != i {
                    let q = (f[i] - f[j]) / ((i as f64 - j as f64) * h);
                    row += w[j] * d[j] * d[i] * q * q;
                }
            }
            w[i] * row
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(s.max(0.0).sqrt())
}

/// ‖f‖_{H^s_δ} on uniform samples for s ∈ {½, 3/2}: the weighted L² (s = ½) or H¹ (s = 3/2)
/// norm plus the Gagliardo seminorm of f (s = ½) or f′ (s = 3/2).
pub fn fractional_norm(f: &[f64], ell: f64, s: f64, delta: f64) -> Result<f64> {
    let n = f.len();
    if n < 8 {
        return Err(Error::GridTooCoarse { got: n, need: 8 });
    }
    let h = 2.0 * ell / (n - 1) as f64;
    let w = uniform_weights(n, h)?;
    let weight = |i: usize| {
        let x = -ell + i as f64 * h;
        if delta == 0.0 {
            1.0
        } else {
            (ell - x.abs()).max(0.0).powf(2.0 * delta)
        }
    };
    let l2: f64 = (0..n).map(|i| w[i] * weight(i) * f[i] * f[i]).sum();
    if (s - 0.5).abs() < 1e-12 {
        let semi = gagliardo_seminorm(f, ell, delta)?;
        Ok((l2 + semi * semi).sqrt())
    } else if (s - 1.5).abs() < 1e-12 {
        let df = uniform_derivative(f, h)?;
        let h1: f64 = (0..n).map(|i| w[i] * weight(i) * df[i] * df[i]).sum();
        let semi = gagliardo_seminorm(&df, ell, delta)?;
        Ok((l2 + h1 + semi * semi).sqrt())
    } else {
        Err(Error::InvalidInput(format!(
            "fractional order {s} not supported (use 0.5 or 1.5)"
        )))
    }
}

/// Samples of η, η′ and η″ on `n` uniform points from the cosine series of η.
pub fn uniform_surface_samples(series: &CosineSeries, n: usize) -> [Vec<f64>; 3] {
    let ell = series.ell;
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let x = -ell + 2.0 * ell * i as f64 / (n - 1) as f64;
        for (k, a) in series.coeffs.iter().enumerate() {
            let al = series.alpha(k);
            let (s, c) = (al * (x + ell)).sin_cos();
            out[0][i] += a * c;
            out[1][i] -= a * al * s;
            out[2][i] -= a * al * al * c;
        }
    }
    out
}

/// [a, b]_ℓ = κ(a(ℓ)b(ℓ) + a(−ℓ)b(−ℓ)).
pub fn bracket(kappa: f64, a: [f64; 2], b: [f64; 2]) -> f64 {
    kappa * (a[0] * b[0] + a[1] * b[1])
}

/// ‖η‖²_{H¹} of quadratic surface values by exact edge quadrature.
pub fn surface_h1_squared(mesh: &Mesh, eta: &[f64]) -> f64 {
    let mut s = 0.0;
    for_each_surface_point(mesh, |s0, _, w, psi, dpsi| {
        let (mut v, mut d) = (0.0, 0.0);
        for a in 0..3 {
            v += eta[s0 + a] * psi[a];
            d += eta[s0 + a] * dpsi[a];
        }
        s += w * (v * v + d * d);
    });
    s
}

/// (‖u‖²_{H¹(Ω)}, ‖u‖²_{L²(Σ_s)}) of a quadratic velocity field.
pub fn velocity_norms_squared(mesh: &Mesh, u: &[[f64; 2]]) -> (f64, f64) {
    let rule = TriangleRule::degree5();
    let bulk: f64 = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let tri = &mesh.triangles[t];
            let mut s = 0.0;
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let ep = element_point(mesh, t, p[0], p[1]);
                for c in 0..2 {
                    let (mut v, mut g0, mut g1) = (0.0, 0.0, 0.0);
                    for b in 0..6 {
                        let f = u[tri[b]][c];
                        v += ep.phi[b] * f;
                        g0 += ep.grad[b][0] * f;
                        g1 += ep.grad[b][1] * f;
                    }
                    s += w * ep.det * (v * v + g0 * g0 + g1 * g1);
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let line = crate::quadrature::GaussRule::unit(4);
    let mut wall = 0.0;
    for e in mesh
        .boundary_edges
        .iter()
        .filter(|e| e.tag != BoundaryTag::Surface)
    {
        for (t, w) in line.nodes.iter().zip(&line.weights) {
            let (n, dn) = edge_shape(*t);
            let (mut v, mut dx, mut dy) = ([0.0; 2], 0.0, 0.0);
            for a in 0..3 {
                let node = e.nodes[a];
                v[0] += n[a] * u[node][0];
                v[1] += n[a] * u[node][1];
                dx += dn[a] * mesh.nodes[node][0];
                dy += dn[a] * mesh.nodes[node][1];
            }
            wall += w * (dx * dx + dy * dy).sqrt() * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    (bulk, wall)
}

/// L² norm squared of a P1 pressure field.
pub fn pressure_l2_squared(mesh: &Mesh, p: &[f64]) -> f64 {
    let m = crate::assembly::pressure_mass(mesh);
    m.mul(p).iter().zip(p).map(|(a, b)| a * b).sum()
}

/// Discrete counterparts of the parallel energy and dissipation functionals at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    /// Σ_{j≤2} ‖∂_t^jη‖²_{H¹}.
    pub e_parallel: f64,
    /// Σ_{j≤2} ‖∂_t^ju‖²_{H¹} + ‖∂_t^ju‖²_{L²(Σ_s)} + [∂_t^ju·𝒩]²_ℓ.
    pub d_bar: f64,
    /// d_bar + Σ_{j≤2} ‖∂_t^jp‖²_{L²} + ‖∂_t^jη‖²_{H^{3/2}}.
    pub d_parallel: f64,
    /// d_parallel plus the weighted terms of the full dissipation (surrogates).
    pub d_full: f64,
    /// ‖∂_t³η‖²_{W^{1/2}_δ}: a third backward difference, reported separately as noisy.
    pub dt3_eta: f64,
}

/// Minimum records for [`functionals`].
pub const FUNCTIONAL_WINDOW: usize = 3;

/// Samples used for the fractional surface norms.
pub const SURFACE_SAMPLES: usize = 129;

fn backward<T>(levels: &[&[T]], j: usize) -> Vec<T>
where
    T: Copy
        + Default
        + std::ops::Sub<Output = T>
        + std::ops::Mul<f64, Output = T>
        + std::ops::Add<Output = T>,
{
    // levels[0] newest; coefficients of the j-th backward difference
    const C: [&[f64]; 4] = [
        &[1.0],
        &[1.0, -1.0],
        &[1.0, -2.0, 1.0],
        &[1.0, -3.0, 3.0, -1.0],
    ];
    let n = levels[0].len();
    (0..n)
        .map(|i| {
            let mut acc = T::default();
            for (k, c) in C[j].iter().enumerate() {
                acc = acc + levels[k][i] * *c;
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct V2([f64; 2]);
impl std::ops::Add for V2 {
    type Output = V2;
    fn add(self, o: V2) -> V2 {
        V2([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}
impl std::ops::Sub for V2 {
    type Output = V2;
    fn sub(self, o: V2) -> V2 {
        V2([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}
impl std::ops::Mul<f64> for V2 {
    type Output = V2;
    fn mul(self, s: f64) -> V2 {
        V2([self.0[0] * s, self.0[1] * s])
    }
}

/// Functionals at the last record of `window` (oldest first, uniform dt), with weight
/// exponent `delta` for the weighted terms.
pub fn functionals(sim: &Simulation<'_>, window: &[StepRecord], delta: f64) -> Result<Functionals> {
    if window.len() < FUNCTIONAL_WINDOW {
        return Err(Error::InsufficientHistory {
            have: window.len(),
            need: FUNCTIONAL_WINDOW,
        });
    }
    let mesh = sim.mesh;
    let ell = sim.eq.ell;
    let dt = window[window.len() - 1].dt;
    let recent: Vec<&StepRecord> = window.iter().rev().take(FUNCTIONAL_WINDOW).collect();
    // η levels: newest first, four states
    let mut eta_levels: Vec<&[f64]> = recent.iter().map(|r| r.eta_new.as_slice()).collect();
    eta_levels.push(recent[FUNCTIONAL_WINDOW - 1].eta_old.as_slice());
    let u_levels: Vec<Vec<V2>> = recent
        .iter()
        .map(|r| r.u.iter().map(|&v| V2(v)).collect())
        .collect();
    let u_refs: Vec<&[V2]> = u_levels.iter().map(|v| v.as_slice()).collect();
    let p_refs: Vec<&[f64]> = recent.iter().map(|r| r.p.as_slice()).collect();
    let c_levels: Vec<[f64; 2]> = recent.iter().map(|r| r.contact_velocities).collect();
    let kappa = kappa_of(&sim.params.response);
    let weighted = |k| WeightedNormSpec::on_mesh(mesh, k, delta);

    let mut f = Functionals {
        e_parallel: 0.0,
        d_bar: 0.0,
        d_parallel: 0.0,
        d_full: 0.0,
        dt3_eta: 0.0,
    };
    for j in 0..3 {
        let scale = dt.powi(j as i32);
        let deta: Vec<f64> = backward(&eta_levels, j).iter().map(|v| v / scale).collect();
        f.e_parallel += surface_h1_squared(mesh, &deta);
        let du: Vec<[f64; 2]> = backward(&u_refs, j)
            .iter()
            .map(|v| [v.0[0] / scale, v.0[1] / scale])
            .collect();
        let (h1, wall) = velocity_norms_squared(mesh, &du);
        let c: Vec<f64> = (0..2)
            .map(|s| match j {
                0 => c_levels[0][s],
                1 => (c_levels[0][s] - c_levels[1][s]) / dt,
                _ => (c_levels[0][s] - 2.0 * c_levels[1][s] + c_levels[2][s]) / (dt * dt),
            })
            .collect();
        f.d_bar += h1 + wall + bracket(kappa, [c[0], c[1]], [c[0], c[1]]);
        let dp: Vec<f64> = backward(&p_refs, j).iter().map(|v| v / scale).collect();
        let samples = uniform_surface_samples(
            &CosineSeries::from_surface_nodes(mesh, &deta)?,
            SURFACE_SAMPLES,
        );
        f.d_parallel +=
            pressure_l2_squared(mesh, &dp) + fractional_norm(&samples[0], ell, 1.5, 0.0)?.powi(2);
        if j <= 1 {
            // weighted W^{5/2}_δ surrogate of ∂_t^jη, W²_δ of ∂_t^ju, W¹_δ of ∂_t^jp
            let h1w: f64 = samples[0]
                .iter()
                .chain(&samples[1])
                .map(|v| v * v)
                .sum::<f64>()
                * 2.0
                * ell
                / SURFACE_SAMPLES as f64;
            let semi = gagliardo_seminorm(&samples[2], ell, delta)?;
            let w2 = weighted_norm_vector(mesh, &du, &weighted(2))?;
            let p1 = weighted_norm(mesh, &pressure_to_nodal(mesh, &dp), &weighted(1))?;
            f.d_full += h1w + semi * semi + w2 * w2 + p1 * p1;
        }
    }
    f.d_parallel += f.d_bar;
    f.d_full += f.d_parallel;
    let d3: Vec<f64> = backward(&eta_levels, 3)
        .iter()
        .map(|v| v / dt.powi(3))
        .collect();
    let s3 = uniform_surface_samples(
        &CosineSeries::from_surface_nodes(mesh, &d3)?,
        SURFACE_SAMPLES,
    );
    f.dt3_eta = fractional_norm(&s3[0], ell, 0.5, delta)?.powi(2);
    Ok(f)
}

/// Exponential rate of a positive series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares line through (t, log E) over the last 80% of the series; λ = −slope.
pub fn decay_fit(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(
            "times and values differ in length".into(),
        ));
    }
    let start = times.len() / 5;
    let (t, v) = (&times[start..], &values[start..]);
    if t.len() < 10 {
        return Err(Error::InsufficientHistory {
            have: t.len(),
            need: 10,
        });
    }
    if let Some(bad) = v.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "decay fit needs positive samples, found {bad}"
        )));
    }
    let y: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = y.iter().map(|b| (b - ym) * (b - ym)).sum();
    let ss_res: f64 = t
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - ym - slope * (a - tm)).powi(2))
        .sum();
    let r_squared = if ss_tot <= 1e-300 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(DecayFit {
        lambda: -slope,
        r_squared,
        samples: t.len(),
    })
}

/// One time-series row of a diagnostics report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time: f64,
    /// ∫η after re-projection.
    pub mass: f64,
    /// ∫η before re-projection.
    pub mass_drift: f64,
    /// 𝓘(ζ₀ + η).
    pub energy_i: f64,
    pub e_parallel: f64,
    pub d_bar: f64,
    pub d_parallel: f64,
    pub d_full: f64,
    pub dt3_eta: f64,
    /// 1 when the third time difference is available, 0 otherwise.
    pub dt3_flag: u8,
    pub balance_residual: f64,
}

/// Row data plus summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub rows: Vec<DiagnosticsRow>,
    pub decay: Option<DecayFit>,
    /// (δ, ‖u_final‖_{W²_δ}) at the final step.
    pub weighted_table: Vec<(f64, f64)>,
    /// Σ residual·dt over the run.
    pub integrated_residual: f64,
}

/// Builds the report for a run given its records (uniform dt).
pub fn build_report(
    sim: &Simulation<'_>,
    records: &[StepRecord],
    delta: f64,
    deltas: &[f64],
) -> Result<DiagnosticsReport> {
    let audit = if records.is_empty() {
        Vec::new()
    } else {
        energy_audit(sim, records)?
    };
    let mut rows = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let f = if i + 1 >= FUNCTIONAL_WINDOW {
            Some(functionals(
                sim,
                &records[i + 1 - FUNCTIONAL_WINDOW..=i],
                delta,
            )?)
        } else {
            None
        };
        let e_parallel = match &f {
            Some(f) => f.e_parallel,
            None => surface_h1_squared(sim.mesh, &r.eta_new),
        };
        rows.push(DiagnosticsRow {
            step: i + 1,
            time: r.time,
            mass: sim.surface.integral(&r.eta_new),
            mass_drift: r.mass_drift,
            energy_i: total_energy(sim, &r.eta_new)?,
            e_parallel,
            d_bar: f.map_or(0.0, |f| f.d_bar),
            d_parallel: f.map_or(0.0, |f| f.d_parallel),
            d_full: f.map_or(0.0, |f| f.d_full),
            dt3_eta: f.map_or(0.0, |f| f.dt3_eta),
            dt3_flag: u8::from(f.is_some()),
            balance_residual: audit[i].residual,
        });
    }
    let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.e_parallel).collect();
    let decay = decay_fit(&times, &e).ok();
    let weighted_table = match records.last() {
        Some(r) => deltas
            .iter()
            .map(|&d| {
                Ok((
                    d,
                    weighted_norm_vector(
                        sim.mesh,
                        &r.u,
                        &WeightedNormSpec::on_mesh(sim.mesh, 2, d),
                    )?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let integrated_residual = audit.iter().map(|a| a.residual * a.dt).sum();
    Ok(DiagnosticsReport {
        rows,
        decay,
        weighted_table,
        integrated_residual,
    })
}

/// Steady solve used by the corner probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeScenario {
    pub params: PhysicalParams,
    pub depth: f64,
    /// Surface count of the coarsest level; doubled per level.
    pub n_surface: usize,
    pub grading: Option<f64>,
    /// Initial mode number and amplitude (relative to min ζ₀) driving the solve.
    pub mode: usize,
    pub amplitude: f64,
    pub dt: f64,
    /// Radius of the corner patches.
    pub patch_radius: f64,
}

/// One entry of the refinement table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub level: usize,
    pub n_surface: usize,
    pub delta: f64,
    pub norm: f64,
    /// norm / previous level's norm (NaN on the first level).
    pub ratio: f64,
}

/// ‖D²u‖_{W⁰_δ} on corner patches for successive refinements of the scenario.
pub fn corner_probe(
    scenario: &ProbeScenario,
    deltas: &[f64],
    levels: usize,
) -> Result<Vec<ProbeRow>> {
    use crate::equilibrium::build_equilibrium;
    use crate::mesh::build_mesh;
    let eq = build_equilibrium(&scenario.params)?;
    let mut rows: Vec<ProbeRow> = Vec::new();
    for level in 0..levels {
        let n = scenario.n_surface << level;
        let mesh = build_mesh(&eq, n, scenario.depth, scenario.grading)?;
        let sim = Simulation::new(&scenario.params, &eq, &mesh);
        let (state, _) =
            sim.initial_state(sim.mode_profile(scenario.mode, scenario.amplitude * eq.min_zeta0))?;
        let (_, rec) = sim.advance(&state, scenario.dt)?;
        let comps: [Vec<f64>; 2] = [0, 1].map(|c| rec.u.iter().map(|v| v[c]).collect());
        let hess: Vec<Vec<[f64; 3]>> = comps.iter().map(|c| recover_hessian(&mesh, c)).collect();
        for &delta in deltas {
            let mut spec = WeightedNormSpec::on_mesh(&mesh, 0, delta);
            spec.patch_radius = Some(scenario.patch_radius);
            let mut s = 0.0;
            for h in &hess {
                for k in 0..3 {
                    let field: Vec<f64> = h.iter().map(|v| v[k]).collect();
                    let mult = if k == 1 { 2.0 } else { 1.0 };
                    s += mult * weighted_norm(&mesh, &field, &spec)?.powi(2);
                }
            }
            let norm = s.sqrt();
            let prev = rows
                .iter()
                .rev()
                .find(|r| r.delta == delta && r.level + 1 == level);
            rows.push(ProbeRow {
                level,
                n_surface: n,
                delta,
                norm,
                ratio: prev.map_or(f64::NAN, |p| norm / p.norm),
            });
        }
    }
    Ok(rows)
}

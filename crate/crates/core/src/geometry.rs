//! Extension η̄ of the surface perturbation and the coefficient fields of the flattening map.

use crate::equilibrium::EquilibriumSurface;
use crate::error::{Error, Result};
use crate::fem::{edge_shape, nodal_gradient};
use crate::mesh::Mesh;
use rayon::prelude::*;
use std::f64::consts::PI;

const RESAMPLE_FACTOR: usize = 4;

/// η as a cosine series Σ a_k cos(α_k (x₁ + ℓ)), α_k = kπ/(2ℓ).
///
/// This is the Fourier series of the even reflection of η to a period of 4ℓ.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    pub ell: f64,
    pub coeffs: Vec<f64>,
}

impl CosineSeries {
    pub fn zero(ell: f64, n_modes: usize) -> Self {
        Self {
            ell,
            coeffs: vec![0.0; n_modes + 1],
        }
    }

    pub fn alpha(&self, k: usize) -> f64 {
        k as f64 * PI / (2.0 * self.ell)
    }

    /// Interpolating series through samples on the uniform grid x_j = −ℓ + 2ℓ j/N (DCT-I).
    pub fn from_uniform_samples(values: &[f64], ell: f64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::GridTooCoarse { got: n, need: 2 });
        }
        let m = n - 1;
        let mut coeffs = vec![0.0; n];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                // reduce the angle index mod 2m to keep the argument small
                let r = (j * k) % (2 * m);
                s += w * v * (PI * r as f64 / m as f64).cos();
            }
            let c = if k == 0 || k == m { 1.0 } else { 2.0 };
            *ck = c * s / m as f64;
        }
        Ok(Self { ell, coeffs })
    }

    /// Series from a piecewise quadratic surface function given on the mesh surface nodes.
    ///
    /// Uniform surface nodes are interpolated directly; otherwise the quadratic
    /// interpolant is resampled on a finer uniform grid first.
    pub fn from_surface_nodes(mesh: &Mesh, values: &[f64]) -> Result<Self> {
        if values.len() != mesh.surface_nodes.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} surface values, got {}",
                mesh.surface_nodes.len(),
                values.len()
            )));
        }
        if mesh.surface_is_uniform() {
            return Self::from_uniform_samples(values, mesh.ell);
        }
        let xs = mesh.surface_x();
        let n = xs.len();
        let ell = mesh.ell;
        // oversampled so the trigonometric interpolant tracks the quadratic one at the nodes
        let m = RESAMPLE_FACTOR * (n - 1) + 1;
        let mut samples = Vec::with_capacity(m);
        let mut e = 0;
        for j in 0..m {
            let x = -ell + 2.0 * ell * j as f64 / (m - 1) as f64;
            while e + 1 < mesh.nx && x > xs[2 * e + 2] {
                e += 1;
            }
            let (x0, x2) = (xs[2 * e], xs[2 * e + 2]);
            let (_, _, t) = edge_parameter(x0, xs[2 * e + 1], x2, x);
            let (nv, _) = edge_shape(t);
            samples.push(
                nv[0] * values[2 * e] + nv[1] * values[2 * e + 1] + nv[2] * values[2 * e + 2],
            );
        }
        Self::from_uniform_samples(&samples, ell)
    }

    /// (η, ∂₁η) on the surface.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let theta = PI * (x + self.ell) / (2.0 * self.ell);
        let (s1, c1) = theta.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let (mut v, mut d) = (0.0, 0.0);
        for (k, a) in self.coeffs.iter().enumerate() {
            v += a * c;
            d -= a * self.alpha(k) * s;
            let cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
        }
        (v, d)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }
}

/// Solves x(t) = target for a quadratic edge x(t) through (x0, xm, x2) at t = 0, 1/2, 1.
fn edge_parameter(x0: f64, xm: f64, x2: f64, target: f64) -> (f64, f64, f64) {
    let mut t = ((target - x0) / (x2 - x0)).clamp(0.0, 1.0);
    for _ in 0..50 {
        let (n, dn) = edge_shape(t);
        let f = n[0] * x0 + n[1] * xm + n[2] * x2 - target;
        let df = dn[0] * x0 + dn[1] * xm + dn[2] * x2;
        let step = f / df;
        t = (t - step).clamp(0.0, 1.0);
        if step.abs() < 1e-15 {
            break;
        }
    }
    (x0, x2, t)
}

/// Cutoff φ with φ = 0 below m/4, φ = z above m/2 and a C⁴ polynomial blend between.
/// Returns (φ, φ′).
pub fn cutoff_phi(z: f64, min_zeta0: f64) -> (f64, f64) {
    let a = 0.25 * min_zeta0;
    let b = 0.5 * min_zeta0;
    if z <= a {
        (0.0, 0.0)
    } else if z >= b {
        (z, 1.0)
    } else {
        let w = b - a;
        let t = (z - a) / w;
        let u = 1.0 - t;
        let t2 = t * t;
        let s = t2 * t2 * t * (126.0 - 420.0 * t + 540.0 * t2 - 315.0 * t2 * t + 70.0 * t2 * t2);
        let ds = 630.0 * t2 * t2 * (u * u) * (u * u) / w;
        (z * s, s + z * ds)
    }
}

/// η̄ and its first derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionSample {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// All coefficient fields at one point of Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFields {
    pub eta_bar: ExtensionSample,
    pub w: f64,
    pub a: f64,
    pub j: f64,
    pub k: f64,
    /// 𝒜 = (∇Φ⁻¹)ᵀ, row-major.
    pub acal: [[f64; 2]; 2],
    /// ∇Φ, row-major: (∇Φ)_{ik} = ∂_k Φ_i.
    pub grad_phi: [[f64; 2]; 2],
    pub phi_map: [f64; 2],
}

impl PointFields {
    pub fn identity(x: [f64; 2]) -> Self {
        Self {
            eta_bar: ExtensionSample {
                value: 0.0,
                d1: 0.0,
                d2: 0.0,
            },
            w: 0.0,
            a: 0.0,
            j: 1.0,
            k: 1.0,
            acal: [[1.0, 0.0], [0.0, 1.0]],
            grad_phi: [[1.0, 0.0], [0.0, 1.0]],
            phi_map: x,
        }
    }

    /// M = K∇Φ.
    pub fn m_mat(&self) -> [[f64; 2]; 2] {
        let g = self.grad_phi;
        [
            [self.k * g[0][0], self.k * g[0][1]],
            [self.k * g[1][0], self.k * g[1][1]],
        ]
    }
}

/// The flattening map built from η and the equilibrium surface.
#[derive(Debug, Clone)]
pub struct Extension<'a> {
    pub eq: &'a EquilibriumSurface,
    pub series: CosineSeries,
}

impl<'a> Extension<'a> {
    pub fn new(eq: &'a EquilibriumSurface, series: CosineSeries) -> Self {
        Self { eq, series }
    }

    pub fn is_zero(&self) -> bool {
        self.series.coeffs.iter().all(|&a| a == 0.0)
    }

    /// η̄(x) = Σ a_k cos(α_k(x₁+ℓ)) exp(α_k (x₂ − ζ₀(x₁))).
    pub fn eval_with(&self, x: [f64; 2], zeta: [f64; 3]) -> ExtensionSample {
        let s = &self.series;
        let depth = x[1] - zeta[0];
        let theta = PI * (x[0] + s.ell) / (2.0 * s.ell);
        let (s1, c1) = theta.sin_cos();
        let step = (PI * depth / (2.0 * s.ell)).exp();
        let (mut c, mut sn, mut e) = (1.0, 0.0, 1.0);
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (k, a) in s.coeffs.iter().enumerate() {
            let al = s.alpha(k);
            let ae = a * e;
            v += ae * c;
            d1 += ae * (-al * sn - al * zeta[1] * c);
            d2 += ae * al * c;
            let cn = c * c1 - sn * s1;
            sn = sn * c1 + c * s1;
            c = cn;
            e *= step;
        }
        ExtensionSample { value: v, d1, d2 }
    }

    pub fn eval(&self, x: [f64; 2]) -> ExtensionSample {
        self.eval_with(x, self.eq.eval(x[0]))
    }

    /// Coefficient fields at `x`.
    pub fn fields_at(&self, x: [f64; 2]) -> PointFields {
        if self.is_zero() {
            return PointFields::identity(x);
        }
        let zeta = self.eq.eval(x[0]);
        let e = self.eval_with(x, zeta);
        let (phi, dphi) = cutoff_phi(x[1], self.eq.min_zeta0);
        let w = phi / zeta[0];
        let a = w * e.d1 - w / zeta[0] * zeta[1] * e.value;
        let j = 1.0 + w * e.d2 + dphi * e.value / zeta[0];
        let k = 1.0 / j;
        PointFields {
            eta_bar: e,
            w,
            a,
            j,
            k,
            acal: [[1.0, -a * k], [0.0, k]],
            grad_phi: [[1.0, 0.0], [a, j]],
            phi_map: [x[0], x[1] + w * e.value],
        }
    }
}

/// Coefficient fields sampled at mesh nodes.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub nodes: Vec<PointFields>,
    /// 𝒩 = 𝒩₀ − ∂₁η e₁ on surface nodes.
    pub n_vec: Vec<[f64; 2]>,
    /// 𝒩₀ = −ζ₀′ e₁ + e₂ on surface nodes.
    pub n0_vec: Vec<[f64; 2]>,
    /// 𝒯 = e₁ + (ζ₀′ + ∂₁η) e₂ on surface nodes.
    pub t_vec: Vec<[f64; 2]>,
}

impl GeometryFields {
    pub fn eta_bar(&self) -> Vec<f64> {
        self.nodes.iter().map(|f| f.eta_bar.value).collect()
    }
}

/// Evaluates the extension at every node, rejecting nodes above the graph of ζ₀.
pub fn poisson_extend(
    series: &CosineSeries,
    eq: &EquilibriumSurface,
    mesh: &Mesh,
) -> Result<Vec<f64>> {
    let ext = Extension::new(eq, series.clone());
    check_below_graph(eq, mesh)?;
    Ok(mesh.nodes.par_iter().map(|&x| ext.eval(x).value).collect())
}

fn check_below_graph(eq: &EquilibriumSurface, mesh: &Mesh) -> Result<()> {
    for (i, p) in mesh.nodes.iter().enumerate() {
        let z = eq.eval(p[0])[0];
        if p[1] > z + 1e-12 * z.abs().max(1.0) || p[0].abs() > eq.ell * (1.0 + 1e-14) {
            return Err(Error::InvalidMesh(format!(
                "node {i} at {:?} lies outside the equilibrium domain",
                p
            )));
        }
    }
    Ok(())
}

pub fn coefficient_fields(ext: &Extension<'_>, mesh: &Mesh) -> Result<GeometryFields> {
    check_below_graph(ext.eq, mesh)?;
    let nodes: Vec<PointFields> = mesh.nodes.par_iter().map(|&x| ext.fields_at(x)).collect();
    if let Some((node, f)) = nodes.iter().enumerate().find(|(_, f)| !(f.j > 0.0)) {
        return Err(Error::MapDegenerate { node, j_min: f.j });
    }
    let mut n_vec = Vec::new();
    let mut n0_vec = Vec::new();
    let mut t_vec = Vec::new();
    for &n in &mesh.surface_nodes {
        let x = mesh.nodes[n][0];
        let dz = ext.eq.eval(x)[1];
        let (_, deta) = ext.series.eval(x);
        n_vec.push([-dz - deta, 1.0]);
        n0_vec.push([-dz, 1.0]);
        t_vec.push([1.0, dz + deta]);
    }
    Ok(GeometryFields {
        nodes,
        n_vec,
        n0_vec,
        t_vec,
    })
}

/// Outcome of the small-data gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryStatus {
    pub ok: bool,
    pub worst_j_dev: f64,
    pub worst_a: f64,
}

pub const GATE_THRESHOLD: f64 = 0.5;

pub fn validate_geometry(fields: &GeometryFields) -> GeometryStatus {
    let worst_j_dev = fields
        .nodes
        .iter()
        .map(|f| (f.j - 1.0).abs())
        .fold(0.0, f64::max);
    let worst_a = fields.nodes.iter().map(|f| f.a.abs()).fold(0.0, f64::max);
    GeometryStatus {
        ok: worst_j_dev <= GATE_THRESHOLD && worst_a <= GATE_THRESHOLD,
        worst_j_dev,
        worst_a,
    }
}

/// max over interior nodes of |∂₁J − ∂₂A|, the only non-trivial row of ∂_k(J𝒜_{jk}),
/// with derivatives of the quadratic interpolants.
pub fn piola_residual(fields: &GeometryFields, mesh: &Mesh) -> f64 {
    let j: Vec<f64> = fields.nodes.iter().map(|f| f.j).collect();
    let a: Vec<f64> = fields.nodes.iter().map(|f| f.a).collect();
    let gj = nodal_gradient(mesh, &j);
    let ga = nodal_gradient(mesh, &a);
    let boundary = mesh.boundary_node_mask();
    (0..mesh.n_nodes())
        .filter(|&n| !boundary[n])
        .map(|n| (gj[n][0] - ga[n][1]).abs())
        .fold(0.0, f64::max)
}

/// max over interior nodes of |∂₁J − ∂₂A| with derivatives of the spectrally evaluated
/// fields taken by central differences of step `h`.
pub fn piola_residual_pointwise(ext: &Extension<'_>, mesh: &Mesh, h: f64) -> f64 {
    let boundary = mesh.boundary_node_mask();
    (0..mesh.n_nodes())
        .into_par_iter()
        .filter(|&n| !boundary[n])
        .map(|n| {
            let x = mesh.nodes[n];
            let dj =
                (ext.fields_at([x[0] + h, x[1]]).j - ext.fields_at([x[0] - h, x[1]]).j) / (2.0 * h);
            let da =
                (ext.fields_at([x[0], x[1] + h]).a - ext.fields_at([x[0], x[1] - h]).a) / (2.0 * h);
            (dj - da).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// max over nodes of |𝒜ᵀ∇Φ − I| with ∇Φ from the quadratic interpolant of Φ.
pub fn inverse_transpose_residual(fields: &GeometryFields, mesh: &Mesh) -> f64 {
    let p1: Vec<f64> = fields.nodes.iter().map(|f| f.phi_map[0]).collect();
    let p2: Vec<f64> = fields.nodes.iter().map(|f| f.phi_map[1]).collect();
    let g1 = nodal_gradient(mesh, &p1);
    let g2 = nodal_gradient(mesh, &p2);
    let mut worst: f64 = 0.0;
    for (n, f) in fields.nodes.iter().enumerate() {
        let grad = [g1[n], g2[n]];
        for r in 0..2 {
            for c in 0..2 {
                // (𝒜ᵀ∇Φ)_{rc} = Σ_i 𝒜_{ir} ∂_c Φ_i
                let v = f.acal[0][r] * grad[0][c] + f.acal[1][r] * grad[1][c];
                let id = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((v - id).abs());
            }
        }
    }
    worst
}

/// Writes node id, x₁, x₂, η̄, J, A, K, W as CSV.
pub fn dump_fields_csv(fields: &GeometryFields, mesh: &Mesh, path: &std::path::Path) -> Result<()> {
    let mut out = String::from("node,x1,x2,eta_bar,J,A,K,W\n");
    for (n, (p, f)) in mesh.nodes.iter().zip(&fields.nodes).enumerate() {
        out.push_str(&format!(
            "{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            p[0], p[1], f.eta_bar.value, f.j, f.a, f.k, f.w
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_round_trip() {
        let n = 17;
        let ell = 1.3;
        let vals: Vec<f64> = (0..n).map(|j| ((j * j) as f64 * 0.37).sin()).collect();
        let s = CosineSeries::from_uniform_samples(&vals, ell).unwrap();
        for (j, v) in vals.iter().enumerate() {
            let x = -ell + 2.0 * ell * j as f64 / (n - 1) as f64;
            assert!((s.eval(x).0 - v).abs() < 1e-13);
        }
    }

    #[test]
    fn cosine_series_derivative() {
        let s = CosineSeries {
            ell: 1.0,
            coeffs: vec![0.1, -0.3, 0.2, 0.05],
        };
        let h = 1e-6;
        for &x in &[-0.9, -0.2, 0.4, 0.77] {
            let fd = (s.eval(x + h).0 - s.eval(x - h).0) / (2.0 * h);
            assert!((fd - s.eval(x).1).abs() < 1e-8);
        }
    }
}

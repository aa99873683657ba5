//! Equilibrium capillary surface ζ₀ and pressure P₀.

use crate::error::{Error, Result};
use crate::kernels::ResponseFunction;
use crate::quadrature::{integrate, integrate_adaptive};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

/// Model constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub g: f64,
    pub sigma: f64,
    pub mu: f64,
    pub beta: f64,
    /// ⟦γ⟧ = γ_sv − γ_sf.
    pub gamma_jump: f64,
    /// Half-width ℓ of the vessel.
    pub ell: f64,
    /// Wall height L.
    pub wall_height: f64,
    /// Fluid mass above the vessel bottom line.
    pub m_top: f64,
    pub response: ResponseFunction,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            sigma: 1.0,
            mu: 1.0,
            beta: 1.0,
            gamma_jump: 0.0,
            ell: 1.0,
            wall_height: 10.0,
            m_top: 2.0,
            response: ResponseFunction::Linear { kappa: 1.0 },
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g", self.g),
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("beta", self.beta),
            ("ell", self.ell),
            ("wall_height", self.wall_height),
            ("m_top", self.m_top),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.gamma_jump.abs() < self.sigma) {
            return Err(Error::InvalidParams(format!(
                "|gamma_jump| = {} must be below sigma = {}",
                self.gamma_jump.abs(),
                self.sigma
            )));
        }
        if let ResponseFunction::Linear { kappa } = self.response {
            if !(kappa > 0.0) {
                return Err(Error::NonPositiveKappa(kappa));
            }
        }
        Ok(())
    }

    /// Largest |ψ| reached by Ξ⁻¹, arcsin(|⟦γ⟧|/σ).
    pub fn z_max(&self) -> f64 {
        (self.gamma_jump.abs() / self.sigma).asin()
    }

    fn sign(&self) -> f64 {
        if self.gamma_jump > 0.0 {
            1.0
        } else if self.gamma_jump < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// The constant C of the closed-form profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CConstant {
    /// ⟦γ⟧ = 0: the surface is flat and no C exists.
    Flat,
    /// C = 1 + eps, stored through eps to keep accuracy when C is close to 1.
    Value { eps: f64 },
}

impl CConstant {
    pub fn value(&self) -> Option<f64> {
        match self {
            CConstant::Flat => None,
            CConstant::Value { eps } => Some(1.0 + eps),
        }
    }
}

/// C − cos ψ written as eps + 2 sin²(ψ/2).
#[inline]
fn c_minus_cos(eps: f64, psi: f64) -> f64 {
    let s = (0.5 * psi).sin();
    eps + 2.0 * s * s
}

/// h(1 + eps) = ∫₀^{z_max} cos ψ / √(C − cos ψ) dψ.
pub fn h_of_eps(eps: f64, z_max: f64) -> Result<f64> {
    integrate(|psi| psi.cos() / c_minus_cos(eps, psi).sqrt(), 0.0, z_max)
}

/// h(r) for r > 1.
pub fn h_integral(r: f64, params: &PhysicalParams) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::Domain {
            value: r,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    h_of_eps(r - 1.0, params.z_max())
}

/// Solves h(C) = ℓ√(2g/σ) for C > 1.
pub fn compute_c(params: &PhysicalParams) -> Result<CConstant> {
    params.validate()?;
    if params.gamma_jump == 0.0 {
        return Ok(CConstant::Flat);
    }
    let zm = params.z_max();
    let target = params.ell * (2.0 * params.g / params.sigma).sqrt();
    let f = |eps: f64| h_of_eps(eps, zm).map(|h| h - target);

    // h decreases in eps: f(lo) > 0 > f(hi).
    let mut hi = 1.0;
    let mut f_hi = f(hi)?;
    while f_hi > 0.0 {
        hi *= 4.0;
        if hi > 1e300 {
            return Err(Error::Bracket("h(C) stays above target".into()));
        }
        f_hi = f(hi)?;
    }
    let mut lo = hi / 4.0;
    let mut f_lo = f(lo)?;
    while f_lo <= 0.0 {
        hi = lo;
        f_hi = f_lo;
        lo /= 4.0;
        if lo < 1e-280 {
            return Err(Error::Bracket("C indistinguishable from 1".into()));
        }
        f_lo = f(lo)?;
    }
    while hi - lo > 1e-8 * hi {
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let fm = f(mid)?;
        if fm > 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    // secant refinement from the bracket ends
    let (mut x0, mut f0, mut x1, mut f1) = (lo, f_lo, hi, f_hi);
    for _ in 0..5 {
        if f1 == f0 || f1 == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 > 0.0) || !x2.is_finite() {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1)?;
    }
    let eps = if f1.abs() <= f_lo.abs().min(f_hi.abs()) {
        x1
    } else if f_lo.abs() < f_hi.abs() {
        lo
    } else {
        hi
    };
    Ok(CConstant::Value { eps })
}

fn xi_scale(params: &PhysicalParams) -> f64 {
    (params.sigma / (2.0 * params.g)).sqrt()
}

/// Ξ(z) = √(σ/2g) ∫₀^z cos ψ / √(C − cos ψ) dψ.
pub fn xi_map(z: f64, c: CConstant, params: &PhysicalParams) -> Result<f64> {
    let CConstant::Value { eps } = c else {
        return Err(Error::InvalidParams(
            "Xi is undefined for a flat surface".into(),
        ));
    };
    let zm = params.z_max();
    if z.abs() > zm * (1.0 + 1e-14) {
        return Err(Error::Domain {
            value: z,
            lo: -zm,
            hi: zm,
        });
    }
    // tight tolerance: profile samples are differentiated twice downstream
    let v = integrate_adaptive(
        |psi| psi.cos() / c_minus_cos(eps, psi).sqrt(),
        0.0,
        z.abs(),
        1e-15,
        1e-15,
    )?;
    Ok(z.signum() * xi_scale(params) * v)
}

/// Ξ⁻¹(x) by monotone bisection.
pub fn xi_inverse(x: f64, c: CConstant, params: &PhysicalParams) -> Result<f64> {
    let ell = params.ell;
    if x.abs() > ell * (1.0 + 1e-14) {
        return Err(Error::Domain {
            value: x,
            lo: -ell,
            hi: ell,
        });
    }
    let zm = params.z_max();
    if x.abs() >= ell {
        return Ok(x.signum() * zm);
    }
    let target = x.abs();
    let (mut lo, mut hi) = (0.0, zm);
    while hi - lo > 1e-15 * zm {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if xi_map(mid, c, params)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(x.signum() * 0.5 * (lo + hi))
}

/// Equilibrium profile with derivative samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSurface {
    pub c_const: CConstant,
    pub ell: f64,
    /// Grid spacing of the samples.
    pub dx: f64,
    pub x: Vec<f64>,
    pub zeta0: Vec<f64>,
    pub dzeta0: Vec<f64>,
    pub ddzeta0: Vec<f64>,
    pub p0: f64,
    pub m_min: f64,
    /// ∫χ, computed by quadrature.
    pub chi_integral: f64,
    pub omega: f64,
    pub delta_omega: f64,
    pub min_zeta0: f64,
}

/// Critical weight max(0, 2 − π/ω).
pub fn critical_weight(omega: f64) -> f64 {
    (2.0 - PI / omega).max(0.0)
}

pub const DEFAULT_SAMPLES: usize = 2049;

pub fn build_equilibrium(params: &PhysicalParams) -> Result<EquilibriumSurface> {
    build_equilibrium_with(params, DEFAULT_SAMPLES)
}

pub fn build_equilibrium_with(params: &PhysicalParams, n: usize) -> Result<EquilibriumSurface> {
    params.validate()?;
    if n < 3 {
        return Err(Error::GridTooCoarse { got: n, need: 3 });
    }
    let ell = params.ell;
    let dx = 2.0 * ell / (n - 1) as f64;
    let x: Vec<f64> = (0..n)
        .map(|i| ell * (2.0 * i as f64 - (n - 1) as f64) / (n - 1) as f64)
        .collect();
    let c_const = compute_c(params)?;
    let (g, sigma) = (params.g, params.sigma);
    let p0 = (g * params.m_top - 2.0 * params.gamma_jump) / (2.0 * ell);

    let (chi, dchi, ddchi, chi_integral, chi_min) = match c_const {
        CConstant::Flat => (vec![0.0; n], vec![0.0; n], vec![0.0; n], 0.0, 0.0),
        CConstant::Value { eps } => {
            let sgn = params.sign();
            let amp = (2.0 * sigma / g).sqrt();
            let chi_of = |z: f64| sgn * amp * c_minus_cos(eps, z).sqrt();
            // the right half, mirrored so the samples are exactly even
            let mut z = vec![0.0; n];
            for i in (n / 2)..n {
                z[i] = xi_inverse(x[i].abs(), c_const, params)?;
            }
            for i in 0..n / 2 {
                z[i] = -z[n - 1 - i];
            }
            let chi: Vec<f64> = z.iter().map(|&zi| chi_of(zi)).collect();
            let dchi: Vec<f64> = z.iter().map(|&zi| sgn * zi.tan()).collect();
            let ddchi: Vec<f64> = z
                .iter()
                .zip(&chi)
                .map(|(&zi, &ci)| g * ci / (sigma * zi.cos().powi(3)))
                .collect();
            let zm = params.z_max();
            let scale = xi_scale(params);
            let chi_integral = integrate(
                |s| chi_of(s) * scale * s.cos() / c_minus_cos(eps, s).sqrt(),
                -zm,
                zm,
            )?;
            let chi_min = if sgn > 0.0 { chi_of(0.0) } else { chi_of(zm) };
            (chi, dchi, ddchi, chi_integral, chi_min)
        }
    };
    let m_min = chi_integral - 2.0 * ell * chi_min;
    if params.m_top <= m_min {
        return Err(Error::InsufficientMass {
            m_top: params.m_top,
            m_min,
        });
    }
    let lift = (params.m_top - m_min) / (2.0 * ell);
    let zeta0: Vec<f64> = chi.iter().map(|c| c - chi_min + lift).collect();
    let contact = zeta0[0].max(zeta0[n - 1]);
    if contact >= params.wall_height {
        return Err(Error::Spills {
            height: contact,
            wall: params.wall_height,
        });
    }
    let min_zeta0 = zeta0.iter().cloned().fold(f64::INFINITY, f64::min);
    let slope = dchi[0];
    let omega = (-slope / (1.0 + slope * slope).sqrt()).acos();
    Ok(EquilibriumSurface {
        c_const,
        ell,
        dx,
        x,
        zeta0,
        dzeta0: dchi,
        ddzeta0: ddchi,
        p0,
        m_min,
        chi_integral,
        omega,
        delta_omega: critical_weight(omega),
        min_zeta0,
    })
}

impl EquilibriumSurface {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Equilibrium contact angle θ_eq = π − ω.
    pub fn theta_eq(&self) -> f64 {
        PI - self.omega
    }

    /// (ζ₀, ζ₀′, ζ₀″) at `x` by quintic Hermite interpolation of the samples.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let n = self.x.len();
        let t = ((x + self.ell) / self.dx).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let h = self.dx;
        let s = t - i as f64;
        let (f0, f1) = (self.zeta0[i], self.zeta0[i + 1]);
        let (d0, d1) = (self.dzeta0[i] * h, self.dzeta0[i + 1] * h);
        let (e0, e1) = (self.ddzeta0[i] * h * h, self.ddzeta0[i + 1] * h * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let s5 = s4 * s;
        // quintic Hermite basis and derivatives
        let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
        let dh00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let dh10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let dh11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let dh20 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
        let dh21 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
        let ddh00 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
        let ddh10 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
        let ddh11 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
        let ddh20 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
        let ddh21 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);
        let v = h00 * f0 + h01 * f1 + h10 * d0 + h11 * d1 + h20 * e0 + h21 * e1;
        let dv = dh00 * (f0 - f1) + dh10 * d0 + dh11 * d1 + dh20 * e0 + dh21 * e1;
        let ddv = ddh00 * (f0 - f1) + ddh10 * d0 + ddh11 * d1 + ddh20 * e0 + ddh21 * e1;
        [v, dv / h, ddv / (h * h)]
    }

    /// Writes columns x, zeta0, dzeta0, ddzeta0 after a commented parameter echo.
    pub fn write_profile_csv(&self, params: &PhysicalParams, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!(
            "# g={:.17e} sigma={:.17e} gamma_jump={:.17e} ell={:.17e} m_top={:.17e} p0={:.17e} omega={:.17e} delta_omega={:.17e}\n",
            params.g, params.sigma, params.gamma_jump, params.ell, params.m_top, self.p0, self.omega, self.delta_omega
        ));
        out.push_str("x,zeta0,dzeta0,ddzeta0\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.x[i], self.zeta0[i], self.dzeta0[i], self.ddzeta0[i]
            ));
        }
        let mut f = std::fs::File::create(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// First derivative on a uniform grid: fourth order when n ≥ 5, second order otherwise.
pub fn uniform_derivative(f: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 3 {
        return Err(Error::GridTooCoarse { got: n, need: 3 });
    }
    // stencils applied to differences f_j − f_i so constants differentiate to exactly zero
    let st = |i: usize, offs: &[(isize, f64)], den: f64| -> f64 {
        offs.iter()
            .map(|&(o, w)| w * (f[(i as isize + o) as usize] - f[i]))
            .sum::<f64>()
            / (den * h)
    };
    let mut d = vec![0.0; n];
    if n < 5 {
        d[0] = st(0, &[(1, 4.0), (2, -1.0)], 2.0);
        for i in 1..n - 1 {
            d[i] = st(i, &[(1, 1.0), (-1, -1.0)], 2.0);
        }
        d[n - 1] = st(n - 1, &[(-1, -4.0), (-2, 1.0)], 2.0);
        return Ok(d);
    }
    d[0] = st(0, &[(1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)], 12.0);
    d[1] = st(1, &[(-1, -3.0), (1, 18.0), (2, -6.0), (3, 1.0)], 12.0);
    for i in 2..n - 2 {
        d[i] = st(i, &[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0);
    }
    let m = n - 1;
    d[m] = st(m, &[(-1, -48.0), (-2, 36.0), (-3, -16.0), (-4, 3.0)], 12.0);
    d[m - 1] = st(m - 1, &[(1, 3.0), (-1, -18.0), (-2, 6.0), (-3, -1.0)], 12.0);
    Ok(d)
}

/// ℋ(ζ) = ∂₁(∂₁ζ / √(1 + ∂₁ζ²)) on a uniform grid of spacing `dx`.
pub fn mean_curvature(zeta: &[f64], dx: f64) -> Result<Vec<f64>> {
    let dz = uniform_derivative(zeta, dx)?;
    let ddz = uniform_second_derivative(zeta, dx)?;
    Ok(dz
        .iter()
        .zip(&ddz)
        .map(|(d, dd)| dd / (1.0 + d * d).powf(1.5))
        .collect())
}

/// Second derivative on a uniform grid, fourth order including the ends (n ≥ 6).
pub fn uniform_second_derivative(f: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 3 {
        return Err(Error::GridTooCoarse { got: n, need: 3 });
    }
    let st = |i: usize, offs: &[(isize, f64)], den: f64| -> f64 {
        offs.iter()
            .map(|&(o, w)| w * (f[(i as isize + o) as usize] - f[i]))
            .sum::<f64>()
            / (den * h * h)
    };
    let mut d = vec![0.0; n];
    if n < 6 {
        for i in 0..n {
            let c = i.clamp(1, n - 2);
            d[i] = (f[c - 1] - 2.0 * f[c] + f[c + 1]) / (h * h);
        }
        return Ok(d);
    }
    d[0] = st(
        0,
        &[(1, -154.0), (2, 214.0), (3, -156.0), (4, 61.0), (5, -10.0)],
        12.0,
    );
    d[1] = st(
        1,
        &[(-1, 10.0), (1, -4.0), (2, 14.0), (3, -6.0), (4, 1.0)],
        12.0,
    );
    for i in 2..n - 2 {
        d[i] = st(i, &[(-2, -1.0), (-1, 16.0), (1, 16.0), (2, -1.0)], 12.0);
    }
    let m = n - 1;
    d[m] = st(
        m,
        &[
            (-1, -154.0),
            (-2, 214.0),
            (-3, -156.0),
            (-4, 61.0),
            (-5, -10.0),
        ],
        12.0,
    );
    d[m - 1] = st(
        m - 1,
        &[(1, 10.0), (-1, -4.0), (-2, 14.0), (-3, -6.0), (-4, 1.0)],
        12.0,
    );
    Ok(d)
}

/// Composite quadrature weights of fourth order on a uniform grid (Gregory end corrections).
pub fn uniform_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::GridTooCoarse { got: n, need: 3 });
    }
    let mut w = vec![h; n];
    if n < 7 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        return Ok(w);
    }
    let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    for (k, c) in ends.iter().enumerate() {
        w[k] = c * h;
        w[n - 1 - k] = c * h;
    }
    Ok(w)
}

/// 𝓘(ζ) = ∫ (g/2)ζ² + σ√(1+ζ′²) − ⟦γ⟧(ζ(ℓ) + ζ(−ℓ)).
pub fn energy_functional(zeta: &[f64], dx: f64, params: &PhysicalParams) -> Result<f64> {
    let dz = uniform_derivative(zeta, dx)?;
    let w = uniform_weights(zeta.len(), dx)?;
    let bulk: f64 = zeta
        .iter()
        .zip(&dz)
        .zip(&w)
        .map(|((z, d), w)| w * (0.5 * params.g * z * z + params.sigma * (1.0 + d * d).sqrt()))
        .sum();
    Ok(bulk - params.gamma_jump * (zeta[0] + zeta[zeta.len() - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumResidual {
    pub ode_res: f64,
    pub bc_res: f64,
    pub mass_res: f64,
}

impl EquilibriumResidual {
    pub fn max(&self) -> f64 {
        self.ode_res.max(self.bc_res).max(self.mass_res)
    }
}

pub fn equilibrium_residual(
    s: &EquilibriumSurface,
    params: &PhysicalParams,
) -> Result<EquilibriumResidual> {
    let n = s.len();
    let slope: Vec<f64> = s
        .dzeta0
        .iter()
        .map(|&d| crate::kernels::slope_sine(d))
        .collect();
    let curv = uniform_derivative(&slope, s.dx)?;
    let ode_res = s
        .zeta0
        .iter()
        .zip(&curv)
        .map(|(z, h)| (params.g * z - params.sigma * h - s.p0).abs())
        .fold(0.0, f64::max);
    let tension = |d: f64| params.sigma * crate::kernels::slope_sine(d);
    let bc_res = (tension(s.dzeta0[n - 1]) - params.gamma_jump)
        .abs()
        .max((tension(s.dzeta0[0]) + params.gamma_jump).abs());
    // trapezoid with the Euler–Maclaurin derivative correction
    let h = s.dx;
    let trap: f64 = h * (s.zeta0.iter().sum::<f64>() - 0.5 * (s.zeta0[0] + s.zeta0[n - 1]));
    let mass = trap - h * h / 12.0 * (s.dzeta0[n - 1] - s.dzeta0[0]);
    Ok(EquilibriumResidual {
        ode_res,
        bc_res,
        mass_res: (mass - params.m_top).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64, m_top: f64) -> PhysicalParams {
        PhysicalParams {
            gamma_jump: gamma,
            m_top,
            ..Default::default()
        }
    }

    #[test]
    fn hermite_eval_reproduces_samples() {
        let p = params(0.5, 3.0);
        let s = build_equilibrium_with(&p, 257).unwrap();
        for i in [0, 17, 128, 200, 256] {
            let [v, d, dd] = s.eval(s.x[i]);
            assert!((v - s.zeta0[i]).abs() < 1e-13);
            assert!((d - s.dzeta0[i]).abs() < 1e-11);
            assert!((dd - s.ddzeta0[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn hermite_eval_between_samples_matches_fine_profile() {
        let p = params(-0.6, 3.0);
        let coarse = build_equilibrium_with(&p, 129).unwrap();
        let fine = build_equilibrium_with(&p, 257).unwrap();
        for i in (1..256).step_by(2) {
            let [v, d, _] = coarse.eval(fine.x[i]);
            assert!((v - fine.zeta0[i]).abs() < 1e-11, "i={i}");
            assert!((d - fine.dzeta0[i]).abs() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn gregory_weights_integrate_quartics() {
        let n = 33;
        let h = 2.0 / (n - 1) as f64;
        let w = uniform_weights(n, h).unwrap();
        for p in 0..4 {
            let s: f64 = (0..n).map(|i| w[i] * (-1.0 + h * i as f64).powi(p)).sum();
            let want = if p % 2 == 1 {
                0.0
            } else {
                2.0 / (p as f64 + 1.0)
            };
            assert!((s - want).abs() < 1e-13, "p={p}");
        }
    }
}

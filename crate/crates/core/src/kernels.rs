//! Curvature remainder ℛ, its potential 𝒬, and the contact-law remainder Ŵ.

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use std::path::Path;

/// f(y) = y / √(1+y²), the slope-to-sine map of the curvature operator.
#[inline]
pub fn slope_sine(y: f64) -> f64 {
    y / (1.0 + y * y).sqrt()
}

#[inline]
fn d1(y: f64) -> f64 {
    (1.0 + y * y).powf(-1.5)
}

#[inline]
fn d2(y: f64) -> f64 {
    -3.0 * y * (1.0 + y * y).powf(-2.5)
}

#[inline]
fn d3(y: f64) -> f64 {
    (12.0 * y * y - 3.0) * (1.0 + y * y).powf(-3.5)
}

#[inline]
fn d4(y: f64) -> f64 {
    (45.0 * y - 60.0 * y * y * y) * (1.0 + y * y).powf(-4.5)
}

#[inline]
fn d5(y: f64) -> f64 {
    let y2 = y * y;
    (45.0 - 540.0 * y2 + 360.0 * y2 * y2) * (1.0 + y2).powf(-5.5)
}

const SERIES_CUTOFF: f64 = 1e-3;

/// Second-order Taylor remainder ℛ(y, z) = f(y+z) − f(y) − z f′(y).
#[inline]
pub fn r_eval(y: f64, z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        let z2 = z * z;
        z2 * (d2(y) / 2.0 + z * (d3(y) / 6.0 + z * (d4(y) / 24.0 + z * d5(y) / 120.0)))
    } else {
        slope_sine(y + z) - slope_sine(y) - z * d1(y)
    }
}

/// ∂ℛ/∂z = f′(y+z) − f′(y).
#[inline]
pub fn r_dz(y: f64, z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        z * (d2(y) + z * (d3(y) / 2.0 + z * (d4(y) / 6.0 + z * d5(y) / 24.0)))
    } else {
        d1(y + z) - d1(y)
    }
}

/// ∂ℛ/∂y = f′(y+z) − f′(y) − z f″(y).
#[inline]
pub fn r_dy(y: f64, z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        let z2 = z * z;
        z2 * (d3(y) / 2.0 + z * (d4(y) / 6.0 + z * d5(y) / 24.0))
    } else {
        d1(y + z) - d1(y) - z * d2(y)
    }
}

/// 𝒬(y, z) = ∫₀^z ℛ(y, r) dr.
pub fn q_eval(y: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.0);
    }
    let (a, b, sign) = if z > 0.0 {
        (0.0, z, 1.0)
    } else {
        (z, 0.0, -1.0)
    };
    // the closed form of ℛ carries ~1e-16 absolute roundoff, integrated over |z|
    let abs_tol = 1e-15 * z.abs();
    Ok(sign * integrate_adaptive(|r| r_eval(y, r), a, b, abs_tol, 1e-13)?)
}

/// Monotone piecewise cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput(
                "pchip needs at least 2 matching samples".into(),
            ));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput(
                "pchip abscissae must be strictly increasing".into(),
            ));
        }
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
        } else {
            for i in 1..n - 1 {
                if s[i - 1] * s[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], s[0], s[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value and derivative at `t`, which must lie in the sampled range.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.range();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { value: t, lo, hi });
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        let dv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * d1)
            / h;
        Ok((v, dv))
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    /// Overrides the node slope at `i` if it stays within the monotonicity region.
    fn try_set_slope(&mut self, i: usize, slope: f64) -> bool {
        let n = self.x.len();
        let sec = |k: usize| (self.y[k + 1] - self.y[k]) / (self.x[k + 1] - self.x[k]);
        let mut bound = f64::INFINITY;
        if i > 0 {
            bound = bound.min(3.0 * sec(i - 1));
        }
        if i + 1 < n {
            bound = bound.min(3.0 * sec(i));
        }
        if slope > 0.0 && slope <= bound {
            self.d[i] = slope;
            true
        } else {
            false
        }
    }
}

fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() {
        0.0
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

/// Finite-difference weights for the first derivative at `x0` (Fornberg's algorithm).
pub fn fornberg_first_derivative(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let m = 1;
    let mut c = vec![vec![vec![0.0; n]; n]; m + 1];
    c[0][0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            for k in 0..=m.min(i) {
                let prev = if k > 0 { c[k - 1][i - 1][j] } else { 0.0 };
                c[k][i][j] = ((xs[i] - x0) * c[k][i - 1][j] - k as f64 * prev) / c3;
            }
        }
        for k in 0..=m.min(i) {
            let prev = if k > 0 { c[k - 1][i - 1][i - 1] } else { 0.0 };
            c[k][i][i] = c1 / c2 * (k as f64 * prev - (xs[i - 1] - x0) * c[k][i - 1][i - 1]);
        }
        c1 = c2;
    }
    c[m][n - 1].clone()
}

/// Contact-point velocity response 𝒱 and its inverse 𝒲.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseFunction {
    /// 𝒱(z) = z/κ, 𝒲(v) = κ v.
    Linear { kappa: f64 },
    /// 𝒱(z) = A sinh(Bz), 𝒲(v) = asinh(v/A)/B.
    Sinh { a: f64, b: f64 },
    /// Monotone cubic interpolation of sampled (z, 𝒱(z)).
    Tabulated(TabulatedResponse),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedResponse {
    v_of_z: Pchip,
    kappa: f64,
}

impl TabulatedResponse {
    pub fn new(z: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if z.len() < 5 {
            return Err(Error::InvalidInput(
                "tabulated response needs at least 5 samples".into(),
            ));
        }
        for w in v.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::NonMonotoneResponse(format!(
                    "samples {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let mut pchip = Pchip::new(z, v)?;
        let (lo, hi) = pchip.range();
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::InvalidInput(
                "tabulated response must bracket z = 0".into(),
            ));
        }
        let (v0, _) = pchip.eval(0.0)?;
        let scale = pchip.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if v0.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "tabulated response has V(0) = {v0}, expected 0"
            )));
        }
        // 𝒱′(0) from the five samples nearest to zero, fourth order
        let mut idx: Vec<usize> = (0..pchip.x.len()).collect();
        idx.sort_by(|&a, &b| {
            pchip.x[a]
                .abs()
                .total_cmp(&pchip.x[b].abs())
                .then(a.cmp(&b))
        });
        let mut near: Vec<usize> = idx[..5].to_vec();
        near.sort_unstable();
        let xs: Vec<f64> = near.iter().map(|&i| pchip.x[i]).collect();
        let w = fornberg_first_derivative(0.0, &xs);
        let dv0: f64 = near.iter().zip(&w).map(|(&i, w)| w * pchip.y[i]).sum();
        if !(dv0 > 0.0) {
            return Err(Error::NonPositiveKappa(if dv0 == 0.0 {
                f64::INFINITY
            } else {
                1.0 / dv0
            }));
        }
        if let Ok(i) = pchip.x.binary_search_by(|v| v.total_cmp(&0.0)) {
            pchip.try_set_slope(i, dv0);
        }
        Ok(Self {
            v_of_z: pchip,
            kappa: 1.0 / dv0,
        })
    }

    /// Reads a two-column CSV `z, V(z)`; a non-numeric first row is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let (mut z, mut v) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if rec.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "{}: row {} has fewer than 2 columns",
                    path.display(),
                    line + 1
                )));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    z.push(a);
                    v.push(b);
                }
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        Self::new(z, v)
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        self.v_of_z.samples()
    }

    fn inverse(&self, v: f64) -> Result<f64> {
        let (zs, vs) = self.v_of_z.samples();
        let (vlo, vhi) = (vs[0], *vs.last().unwrap());
        if !(v >= vlo && v <= vhi) {
            return Err(Error::OutOfRange {
                value: v,
                lo: vlo,
                hi: vhi,
            });
        }
        let k = match vs.binary_search_by(|s| s.total_cmp(&v)) {
            Ok(k) => return Ok(zs[k]),
            Err(k) => k - 1,
        };
        let (mut lo, mut hi) = (zs[k], zs[k + 1]);
        let mut z = lo + (hi - lo) * (v - vs[k]) / (vs[k + 1] - vs[k]);
        for _ in 0..200 {
            let (fz, dz) = self.v_of_z.eval(z)?;
            let r = fz - v;
            if r == 0.0 {
                return Ok(z);
            }
            if r > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let newton = z - r / dz;
            z = if dz > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * z.abs().max(1e-300) || (r / dz).abs() < 1e-17 {
                break;
            }
        }
        Ok(z)
    }
}

impl ResponseFunction {
    pub fn linear(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::NonPositiveKappa(kappa));
        }
        Ok(Self::Linear { kappa })
    }

    pub fn sinh(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sinh response needs A, B > 0 (got {a}, {b})"
            )));
        }
        Ok(Self::Sinh { a, b })
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear { .. })
    }

    /// 𝒱(z).
    pub fn v(&self, z: f64) -> Result<f64> {
        match self {
            Self::Linear { kappa } => Ok(z / kappa),
            Self::Sinh { a, b } => Ok(a * (b * z).sinh()),
            Self::Tabulated(t) => Ok(t.v_of_z.eval(z)?.0),
        }
    }

    /// 𝒲(v) = 𝒱⁻¹(v).
    pub fn w(&self, v: f64) -> Result<f64> {
        match self {
            Self::Linear { kappa } => Ok(kappa * v),
            Self::Sinh { a, b } => Ok((v / a).asinh() / b),
            Self::Tabulated(t) => t.inverse(v),
        }
    }

    /// 𝒲′(v).
    pub fn w_prime(&self, v: f64) -> Result<f64> {
        match self {
            Self::Linear { kappa } => Ok(*kappa),
            Self::Sinh { a, b } => Ok(1.0 / (b * (a * a + v * v).sqrt())),
            Self::Tabulated(t) => {
                let z = t.inverse(v)?;
                Ok(1.0 / t.v_of_z.eval(z)?.1)
            }
        }
    }

    /// Ŵ(v) = 𝒲(v)/κ − v.
    pub fn w_hat(&self, v: f64) -> Result<f64> {
        match self {
            Self::Linear { .. } => Ok(0.0),
            _ => Ok(self.w(v)? / kappa_of(self) - v),
        }
    }

    /// Ŵ′(v).
    pub fn w_hat_prime(&self, v: f64) -> Result<f64> {
        match self {
            Self::Linear { .. } => Ok(0.0),
            _ => Ok(self.w_prime(v)? / kappa_of(self) - 1.0),
        }
    }
}

/// κ = 𝒲′(0).
pub fn kappa_of(response: &ResponseFunction) -> f64 {
    match response {
        ResponseFunction::Linear { kappa } => *kappa,
        ResponseFunction::Sinh { a, b } => 1.0 / (a * b),
        ResponseFunction::Tabulated(t) => t.kappa,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_continuous_across_series_cutoff() {
        for &y in &[-3.0, -0.4, 0.0, 0.7, 2.5] {
            let lo = r_eval(y, SERIES_CUTOFF * (1.0 - 1e-13));
            let hi = r_eval(y, SERIES_CUTOFF * (1.0 + 1e-13));
            assert!((lo - hi).abs() < 1e-15, "y={y} {lo:e} {hi:e}");
            let lo = r_dz(y, -SERIES_CUTOFF * (1.0 - 1e-13));
            let hi = r_dz(y, -SERIES_CUTOFF * (1.0 + 1e-13));
            assert!((lo - hi).abs() < 1e-15, "y={y} {lo:e} {hi:e}");
            let lo = r_dy(y, SERIES_CUTOFF * (1.0 - 1e-13));
            let hi = r_dy(y, SERIES_CUTOFF * (1.0 + 1e-13));
            assert!((lo - hi).abs() < 1e-15, "y={y} {lo:e} {hi:e}");
        }
    }

    #[test]
    fn fornberg_central_stencil() {
        let w = fornberg_first_derivative(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let want = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn pchip_preserves_monotonicity() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = vec![0.0, 0.0, 0.1, 3.0, 3.0, 3.1, 8.0, 8.0, 8.0, 9.0];
        let p = Pchip::new(x, y).unwrap();
        let mut prev = -1.0;
        for k in 0..=900 {
            let (v, d) = p.eval(k as f64 / 100.0).unwrap();
            assert!(v >= prev - 1e-14 && d >= -1e-12);
            prev = v;
        }
    }
}

//! Semi-implicit time stepping of the surface perturbation η.

use crate::assembly::{assemble_system, AssembledSystem, SaddleSolution, SurfaceOperator};
use crate::equilibrium::{EquilibriumSurface, PhysicalParams};
use crate::error::{Error, Result};
use crate::geometry::{coefficient_fields, CosineSeries, Extension, GeometryFields};
use crate::kernels::kappa_of;
use crate::linalg::{dense_solve, Factorization, PatternCache};
use crate::mesh::Mesh;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;

/// Previous surface states kept for backward-difference time derivatives.
pub const HISTORY_LEN: usize = 4;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Evolving unknowns; η is given at the quadratic surface nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationState {
    pub version: u32,
    pub time: f64,
    pub step: usize,
    /// Step size of the most recent step (0 before the first).
    pub dt: f64,
    pub eta: Vec<f64>,
    /// η at earlier steps, most recent first.
    pub history: VecDeque<Vec<f64>>,
    pub u: Vec<[f64; 2]>,
    pub p: Vec<f64>,
    /// ∂_tη at (−ℓ, +ℓ).
    pub contact_velocities: [f64; 2],
}

impl SimulationState {
    pub fn new(mesh: &Mesh, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != mesh.surface_nodes.len() {
            return Err(Error::InvalidInput(format!(
                "eta has {} values, mesh has {} surface nodes",
                eta.len(),
                mesh.surface_nodes.len()
            )));
        }
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("eta contains non-finite values".into()));
        }
        Ok(Self {
            version: CHECKPOINT_VERSION,
            time: 0.0,
            step: 0,
            dt: 0.0,
            eta,
            history: VecDeque::new(),
            u: vec![[0.0; 2]; mesh.n_nodes()],
            p: vec![0.0; mesh.n_pressure()],
            contact_velocities: [0.0; 2],
        })
    }

    /// Backward difference approximation of ∂_t^j η for j ≤ 3; `None` while the
    /// history is too short.
    pub fn time_derivative(&self, j: usize) -> Option<Vec<f64>> {
        const COEFFS: [&[f64]; 4] = [
            &[1.0],
            &[1.0, -1.0],
            &[1.0, -2.0, 1.0],
            &[1.0, -3.0, 3.0, -1.0],
        ];
        let c = COEFFS.get(j)?;
        if self.history.len() + 1 < c.len() || (j > 0 && !(self.dt > 0.0)) {
            return None;
        }
        let scale = self.dt.powi(j as i32);
        let mut out = vec![0.0; self.eta.len()];
        for (k, ck) in c.iter().enumerate() {
            let level = if k == 0 {
                &self.eta
            } else {
                &self.history[k - 1]
            };
            for (o, v) in out.iter_mut().zip(level) {
                *o += ck * v;
            }
        }
        if j > 0 {
            out.iter_mut().for_each(|o| *o /= scale);
        }
        Some(out)
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let state: Self = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        if state.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidInput(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                state.version
            )));
        }
        Ok(state)
    }
}

/// What one step produced; enough to audit the energy balance afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub time: f64,
    pub dt: f64,
    pub eta_old: Vec<f64>,
    pub eta_new: Vec<f64>,
    pub u: Vec<[f64; 2]>,
    pub p: Vec<f64>,
    pub contact_velocities: [f64; 2],
    /// Ŵ at the contact velocities.
    pub w_hat: [f64; 2],
    /// ∫ηⁿ⁺¹ before re-projection.
    pub mass_drift: f64,
    pub newton_iterations: usize,
}

/// A fixed discretization ready to be stepped.
pub struct Simulation<'a> {
    pub params: &'a PhysicalParams,
    pub eq: &'a EquilibriumSurface,
    pub mesh: &'a Mesh,
    pub surface: SurfaceOperator,
    pub newton_tol: f64,
    pub max_newton: usize,
    pattern: PatternCache,
}

type NewtonOutcome = (Vec<f64>, [f64; 2], [f64; 2], usize);

impl<'a> Simulation<'a> {
    pub fn new(params: &'a PhysicalParams, eq: &'a EquilibriumSurface, mesh: &'a Mesh) -> Self {
        Self {
            params,
            eq,
            mesh,
            surface: SurfaceOperator::new(mesh, eq, params),
            newton_tol: 1e-10,
            max_newton: 10,
            pattern: PatternCache::default(),
        }
    }

    pub fn extension(&self, eta: &[f64]) -> Result<Extension<'a>> {
        Ok(Extension::new(
            self.eq,
            CosineSeries::from_surface_nodes(self.mesh, eta)?,
        ))
    }

    pub fn fields(&self, eta: &[f64]) -> Result<GeometryFields> {
        coefficient_fields(&self.extension(eta)?, self.mesh)
    }

    /// Initial state from surface values, shifted to zero mean; also returns the shift.
    pub fn initial_state(&self, mut eta: Vec<f64>) -> Result<(SimulationState, f64)> {
        if eta.len() != self.mesh.surface_nodes.len() {
            return Err(Error::InvalidInput(format!(
                "initial profile has {} values, mesh has {} surface nodes",
                eta.len(),
                self.mesh.surface_nodes.len()
            )));
        }
        let shift = self.surface.integral(&eta) / (2.0 * self.eq.ell);
        eta.iter_mut().for_each(|e| *e -= shift);
        Ok((SimulationState::new(self.mesh, eta)?, shift))
    }

    /// Nodal values of a cosine mode a·cos(kπ(x₁+ℓ)/(2ℓ)) on the surface nodes.
    pub fn mode_profile(&self, k: usize, amplitude: f64) -> Vec<f64> {
        let ell = self.eq.ell;
        let alpha = k as f64 * std::f64::consts::PI / (2.0 * ell);
        self.mesh
            .surface_x()
            .iter()
            .map(|x| amplitude * (alpha * (x + ell)).cos())
            .collect()
    }

    /// Solves the contact nonlinearity v = v₀ + H·Ŵ(v) by Newton's method on top of one
    /// factorization. Returns the solution, contact-line velocities, Ŵ and the iteration count.
    fn contact_newton(
        &self,
        sys: &AssembledSystem,
        fact: &Factorization,
        x0: Vec<f64>,
    ) -> Result<NewtonOutcome> {
        let response = &self.params.response;
        if response.is_linear() {
            let v = sys.contact_velocities(&x0);
            return Ok((x0, v, [0.0; 2], 0));
        }
        let kappa = kappa_of(response);
        let y = [
            fact.solve(&sys.contact_load(kappa, [1.0, 0.0]))?,
            fact.solve(&sys.contact_load(kappa, [0.0, 1.0]))?,
        ];
        let v0 = sys.contact_velocities(&x0);
        let h = [sys.contact_velocities(&y[0]), sys.contact_velocities(&y[1])];
        let mut v = v0;
        let mut trace = vec![v];
        let mut iterations = 0;
        loop {
            let wh = [response.w_hat(v[0])?, response.w_hat(v[1])?];
            let whp = [response.w_hat_prime(v[0])?, response.w_hat_prime(v[1])?];
            let g: Vec<f64> = (0..2)
                .map(|i| v[i] - v0[i] - h[0][i] * wh[0] - h[1][i] * wh[1])
                .collect();
            let jac: Vec<Vec<f64>> = (0..2)
                .map(|i| {
                    (0..2)
                        .map(|s| if i == s { 1.0 } else { 0.0 } - h[s][i] * whp[s])
                        .collect()
                })
                .collect();
            let dv = dense_solve(jac, g.iter().map(|x| -x).collect()).ok_or_else(|| {
                Error::NewtonDivergence {
                    trace: trace.clone(),
                }
            })?;
            v = [v[0] + dv[0], v[1] + dv[1]];
            trace.push(v);
            iterations += 1;
            let step = dv[0].abs().max(dv[1].abs());
            if !step.is_finite() {
                return Err(Error::NewtonDivergence { trace });
            }
            if step <= self.newton_tol * v[0].abs().max(v[1].abs()).max(1.0) {
                break;
            }
            if iterations >= self.max_newton {
                return Err(Error::NewtonDivergence { trace });
            }
        }
        let wh = [response.w_hat(v[0])?, response.w_hat(v[1])?];
        let mut x = x0;
        for s in 0..2 {
            for (xi, yi) in x.iter_mut().zip(&y[s]) {
                *xi += wh[s] * yi;
            }
        }
        Ok((x, v, wh, iterations))
    }

    /// One backward-Euler step of length `dt`.
    pub fn advance(
        &self,
        state: &SimulationState,
        dt: f64,
    ) -> Result<(SimulationState, StepRecord)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep(dt));
        }
        let fields = self.fields(&state.eta)?;
        let sys = assemble_system(
            self.mesh,
            self.eq,
            &fields,
            &self.surface,
            &state.eta,
            dt,
            self.params,
            None,
        )?;
        let fact = sys.factor_cached(&self.pattern)?;
        let x0 = fact.solve(&sys.rhs)?;
        let (x, v, w_hat, newton_iterations) = self.contact_newton(&sys, &fact, x0)?;
        let SaddleSolution { u, p, .. } = sys.unpack(&x);

        let mut eta_new: Vec<f64> = state
            .eta
            .iter()
            .zip(&self.mesh.surface_nodes)
            .zip(&fields.n_vec)
            .map(|((e, &node), n)| e + dt * (u[node][0] * n[0] + u[node][1] * n[1]))
            .collect();
        let mass_drift = self.surface.integral(&eta_new);
        let shift = mass_drift / (2.0 * self.eq.ell);
        eta_new.iter_mut().for_each(|e| *e -= shift);

        let mut history = state.history.clone();
        history.push_front(state.eta.clone());
        history.truncate(HISTORY_LEN);
        let time = state.time + dt;
        let record = StepRecord {
            time,
            dt,
            eta_old: state.eta.clone(),
            eta_new: eta_new.clone(),
            u: u.clone(),
            p: p.clone(),
            contact_velocities: v,
            w_hat,
            mass_drift,
            newton_iterations,
        };
        let next = SimulationState {
            version: CHECKPOINT_VERSION,
            time,
            step: state.step + 1,
            dt,
            eta: eta_new,
            history,
            u,
            p,
            contact_velocities: v,
        };
        Ok((next, record))
    }

    /// Runs `steps` steps, returning the final state and every step record.
    pub fn run(
        &self,
        state: SimulationState,
        dt: f64,
        steps: usize,
    ) -> Result<(SimulationState, Vec<StepRecord>)> {
        let mut state = state;
        let mut records = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (next, rec) = self.advance(&state, dt)?;
            records.push(rec);
            state = next;
        }
        Ok((state, records))
    }
}

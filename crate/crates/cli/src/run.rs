//! Subcommand execution and exit codes.

use crate::config::{ConfigError, ScenarioConfig};
use crate::output::{self, OutputError};
use contact_stokes::equilibrium::{
    build_equilibrium, equilibrium_residual, CConstant, EquilibriumSurface, PhysicalParams,
};
use contact_stokes::mesh::{build_mesh, Mesh};
use contact_stokes::norms::{build_report, corner_probe, ProbeScenario};
use contact_stokes::stepper::{Simulation, SimulationState, StepRecord};
use serde_json::json;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Equilibrium,
    Simulate,
    Audit,
    ProbeCorner,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub resume: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => EXIT_VALIDATION,
            RunError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<OutputError> for RunError {
    fn from(e: OutputError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<contact_stokes::Error> for RunError {
    fn from(e: contact_stokes::Error) -> Self {
        if e.is_solver_failure() {
            RunError::Solver(e.to_string())
        } else {
            RunError::Validation(e.to_string())
        }
    }
}

/// Runs a subcommand, reporting failures on stderr; returns the process exit code.
pub fn run(command: Command, opts: &RunOptions) -> i32 {
    match execute(command, opts) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, opts: &RunOptions) -> Result<(), RunError> {
    let cfg = ScenarioConfig::load(&opts.config)?;
    cfg.validate()?;
    let params = cfg.physical_params()?;
    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| RunError::Validation(format!("{}: {e}", opts.out_dir.display())))?;
    match command {
        Command::Equilibrium => equilibrium(&cfg, &params, &opts.out_dir),
        Command::Simulate | Command::Audit => evolve(command, &cfg, &params, opts),
        Command::ProbeCorner => probe(&cfg, &params, &opts.out_dir),
    }
}

fn equilibrium_json(eq: &EquilibriumSurface) -> serde_json::Value {
    let c = match eq.c_const {
        CConstant::Value { eps } => json!(1.0 + eps),
        _ => serde_json::Value::Null,
    };
    json!({ "c": c, "p0": eq.p0, "m_min": eq.m_min, "omega": eq.omega, "delta_omega": eq.delta_omega, "min_zeta0": eq.min_zeta0 })
}

fn equilibrium(cfg: &ScenarioConfig, params: &PhysicalParams, out: &Path) -> Result<(), RunError> {
    let eq = build_equilibrium(params)?;
    eq.write_profile_csv(params, &out.join(&cfg.diagnostics.profile))?;
    let res = equilibrium_residual(&eq, params)?;
    let summary = json!({
        "subcommand": "equilibrium",
        "equilibrium": equilibrium_json(&eq),
        "residuals": { "ode": res.ode_res, "boundary": res.bc_res, "mass": res.mass_res },
    });
    output::write_json(&summary, &out.join(&cfg.diagnostics.summary))?;
    Ok(())
}

/// Reads a two-column (x, eta) CSV and interpolates it linearly onto `xs`.
fn read_profile(path: &Path, xs: &[f64]) -> Result<Vec<f64>, RunError> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| RunError::Validation(format!("{name}: {e}")))?;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| RunError::Validation(format!("{name}: {e}")))?;
        match (
            rec.get(0).map(str::parse::<f64>),
            rec.get(1).map(str::parse::<f64>),
        ) {
            (Some(Ok(x)), Some(Ok(y))) => pts.push((x, y)),
            _ if i == 0 => continue,
            _ => {
                return Err(RunError::Validation(format!(
                    "{name}: row {} is not two numbers",
                    i + 1
                )))
            }
        }
    }
    if pts.len() < 2 || pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(RunError::Validation(format!(
            "{name}: need at least two rows with increasing x"
        )));
    }
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    xs.iter()
        .map(|&x| {
            if x < lo - 1e-12 || x > hi + 1e-12 {
                return Err(RunError::Validation(format!(
                    "{name}: profile covers [{lo}, {hi}] but surface needs x = {x}"
                )));
            }
            let j = pts.partition_point(|p| p.0 <= x).clamp(1, pts.len() - 1);
            let (a, b) = (pts[j - 1], pts[j]);
            Ok(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0))
        })
        .collect()
}

fn initial_profile(cfg: &ScenarioConfig, sim: &Simulation<'_>) -> Result<Vec<f64>, RunError> {
    if let Some(path) = &cfg.initial.profile {
        return read_profile(path, &sim.mesh.surface_x());
    }
    let mut eta = vec![0.0; sim.mesh.surface_nodes.len()];
    for m in &cfg.initial.modes {
        for (e, v) in eta.iter_mut().zip(sim.mode_profile(m.k, m.amplitude)) {
            *e += v;
        }
    }
    Ok(eta)
}

fn build_grid(cfg: &ScenarioConfig, eq: &EquilibriumSurface) -> Result<Mesh, RunError> {
    Ok(build_mesh(
        eq,
        cfg.mesh.n_surface,
        cfg.mesh.depth,
        cfg.mesh.grading,
    )?)
}

fn evolve(
    command: Command,
    cfg: &ScenarioConfig,
    params: &PhysicalParams,
    opts: &RunOptions,
) -> Result<(), RunError> {
    let out = &opts.out_dir;
    let eq = build_equilibrium(params)?;
    let mesh = build_grid(cfg, &eq)?;
    let mut sim = Simulation::new(params, &eq, &mesh);
    sim.newton_tol = cfg.stepping.newton_tol;
    let (mut state, correction) = match &opts.resume {
        Some(path) => {
            let state = SimulationState::load_checkpoint(path)?;
            if state.eta.len() != mesh.surface_nodes.len() || state.u.len() != mesh.n_nodes() {
                return Err(RunError::Validation(format!(
                    "{}: checkpoint does not match the configured mesh",
                    path.display()
                )));
            }
            (state, 0.0)
        }
        None => sim.initial_state(initial_profile(cfg, &sim)?)?,
    };
    if correction != 0.0 {
        eprintln!("note: initial profile shifted by {correction:.6e} to zero mean");
    }
    let dt = cfg.stepping.dt;
    let steps = ((cfg.stepping.t_end - state.time) / dt - 1e-9)
        .ceil()
        .max(0.0) as usize;
    let snapshot_every = (steps / 10).max(1);
    let ckpt_dir = out.join("checkpoints");
    if command == Command::Simulate && cfg.stepping.checkpoint_every > 0 {
        std::fs::create_dir_all(&ckpt_dir)
            .map_err(|e| RunError::Validation(format!("{}: {e}", ckpt_dir.display())))?;
    }
    let mut snapshots = vec![(state.time, state.eta.clone())];
    let mut records: Vec<StepRecord> = Vec::with_capacity(steps);
    for i in 1..=steps {
        let (next, rec) = sim.advance(&state, dt)?;
        records.push(rec);
        state = next;
        if i % snapshot_every == 0 || i == steps {
            snapshots.push((state.time, state.eta.clone()));
        }
        if command == Command::Simulate
            && cfg.stepping.checkpoint_every > 0
            && i % cfg.stepping.checkpoint_every == 0
        {
            state.save_checkpoint(&ckpt_dir.join(format!("step_{:06}.json", state.step)))?;
        }
    }
    let delta = cfg
        .diagnostics
        .delta
        .unwrap_or(0.5 * (1.0 + eq.delta_omega));
    let summary_common = json!({
        "steps": steps,
        "final_time": state.time,
        "zero_mean_correction": correction,
        "delta": delta,
        "equilibrium": equilibrium_json(&eq),
        "max_mass_drift": records.iter().map(|r| r.mass_drift.abs()).fold(0.0, f64::max),
    });
    let mut summary = summary_common.as_object().cloned().unwrap_or_default();
    match command {
        Command::Audit => {
            let audit = if records.is_empty() {
                Vec::new()
            } else {
                contact_stokes::audit::energy_audit(&sim, &records)?
            };
            output::write_audit_csv(&audit, &out.join(&cfg.diagnostics.audit))?;
            summary.insert("subcommand".into(), json!("audit"));
            summary.insert(
                "max_residual".into(),
                json!(audit.iter().map(|a| a.residual).fold(0.0, f64::max)),
            );
            summary.insert(
                "integrated_residual".into(),
                json!(audit.iter().map(|a| a.residual * a.dt).sum::<f64>()),
            );
        }
        _ => {
            state.save_checkpoint(&out.join("checkpoint_final.json"))?;
            let report = build_report(&sim, &records, delta, &cfg.diagnostics.deltas)?;
            output::export_csv(&report, &out.join(&cfg.diagnostics.report))?;
            output::write_surface_csv(
                &mesh.surface_x(),
                &snapshots,
                &out.join(&cfg.diagnostics.surface),
            )?;
            let to_str = |p: &PathBuf| p.to_string_lossy().into_owned();
            output::emit_plots(
                out,
                &to_str(&cfg.diagnostics.report),
                &to_str(&cfg.diagnostics.surface),
            )?;
            summary.insert("subcommand".into(), json!("simulate"));
            summary.insert(
                "decay".into(),
                report.decay.map_or(serde_json::Value::Null, |d| {
                    json!({ "lambda": d.lambda, "r_squared": d.r_squared, "samples": d.samples })
                }),
            );
            summary.insert(
                "integrated_residual".into(),
                json!(report.integrated_residual),
            );
            summary.insert(
                "weighted_u_w2".into(),
                json!(report
                    .weighted_table
                    .iter()
                    .map(|(d, n)| json!({ "delta": d, "norm": n }))
                    .collect::<Vec<_>>()),
            );
        }
    }
    output::write_json(
        &serde_json::Value::Object(summary),
        &out.join(&cfg.diagnostics.summary),
    )?;
    Ok(())
}

/// Ratio threshold separating bounded from growing norms.
pub const PROBE_THRESHOLD: f64 = 1.1;

fn probe(cfg: &ScenarioConfig, params: &PhysicalParams, out: &Path) -> Result<(), RunError> {
    let eq = build_equilibrium(params)?;
    let p = &cfg.probe;
    let scenario = ProbeScenario {
        params: params.clone(),
        depth: cfg.mesh.depth,
        n_surface: p.n_surface,
        grading: Some(p.grading),
        mode: p.mode,
        amplitude: p.amplitude,
        dt: p.dt,
        patch_radius: p.patch_fraction * eq.ell,
    };
    let deltas = p.deltas.clone().unwrap_or_else(|| {
        vec![
            (eq.delta_omega - 0.2).max(0.0),
            (eq.delta_omega + 0.2).min(0.99),
        ]
    });
    let rows = corner_probe(&scenario, &deltas, p.levels)?;
    output::write_probe_csv(&rows, &out.join(&cfg.diagnostics.probe))?;
    let last = p.levels - 1;
    let trend: Vec<serde_json::Value> = rows
        .iter()
        .filter(|r| r.level == last)
        .map(|r| json!({ "delta": r.delta, "final_ratio": r.ratio, "trend": if r.ratio <= PROBE_THRESHOLD { "bounded" } else { "growing" } }))
        .collect();
    let summary = json!({ "subcommand": "probe-corner", "equilibrium": equilibrium_json(&eq), "trend": trend });
    output::write_json(&summary, &out.join(&cfg.diagnostics.summary))?;
    Ok(())
}

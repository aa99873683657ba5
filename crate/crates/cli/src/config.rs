//! TOML scenario files.

use contact_stokes::equilibrium::PhysicalParams;
use contact_stokes::kernels::{ResponseFunction, TabulatedResponse};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub params: ParamsBlock,
    pub initial: InitialBlock,
    pub mesh: MeshBlock,
    pub stepping: SteppingBlock,
    pub diagnostics: DiagnosticsBlock,
    pub probe: ProbeBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsBlock {
    pub g: f64,
    pub sigma: f64,
    pub mu: f64,
    pub beta: f64,
    pub gamma_jump: f64,
    pub ell: f64,
    pub wall_height: f64,
    pub m_top: f64,
    pub response: ResponseBlock,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        let p = PhysicalParams::default();
        Self {
            g: p.g,
            sigma: p.sigma,
            mu: p.mu,
            beta: p.beta,
            gamma_jump: p.gamma_jump,
            ell: p.ell,
            wall_height: p.wall_height,
            m_top: p.m_top,
            response: ResponseBlock::Linear { kappa: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ResponseBlock {
    Linear {
        kappa: f64,
    },
    Sinh {
        a: f64,
        b: f64,
    },
    /// Two-column CSV of z, 𝒱(z); relative paths resolve against the config file.
    Tabulated {
        table: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: usize,
    pub amplitude: f64,
}

/// Initial surface perturbation: a sum of cosine modes or a CSV profile (x, eta).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialBlock {
    pub modes: Vec<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshBlock {
    pub n_surface: usize,
    pub depth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
}

impl Default for MeshBlock {
    fn default() -> Self {
        Self {
            n_surface: 24,
            depth: 0.5,
            grading: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteppingBlock {
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    /// Checkpoint every this many steps (0 keeps only the final state).
    pub checkpoint_every: usize,
}

impl Default for SteppingBlock {
    fn default() -> Self {
        Self {
            dt: 0.02,
            t_end: 10.0,
            newton_tol: 1e-10,
            checkpoint_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsBlock {
    /// Weight exponent for the functionals; defaults to (1 + δ_ω)/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Exponents of the weighted-norm table of the final velocity.
    pub deltas: Vec<f64>,
    pub report: PathBuf,
    pub audit: PathBuf,
    pub surface: PathBuf,
    pub profile: PathBuf,
    pub probe: PathBuf,
    pub summary: PathBuf,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        Self {
            delta: None,
            deltas: vec![0.25, 0.5, 0.75],
            report: "diagnostics.csv".into(),
            audit: "audit.csv".into(),
            surface: "surface.csv".into(),
            profile: "equilibrium.csv".into(),
            probe: "probe.csv".into(),
            summary: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeBlock {
    pub levels: usize,
    pub n_surface: usize,
    pub grading: f64,
    pub mode: usize,
    /// Relative to min ζ₀.
    pub amplitude: f64,
    pub dt: f64,
    /// Patch radius as a fraction of ℓ.
    pub patch_fraction: f64,
    /// Defaults to δ_ω ∓ 0.2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        Self {
            levels: 4,
            n_surface: 8,
            grading: 1.0,
            mode: 1,
            amplitude: 0.05,
            dt: 0.1,
            patch_fraction: 0.25,
            deltas: None,
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            ConfigError::Parse {
                path: origin.into(),
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })
    }

    /// Reads a config file; relative data paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: origin.clone(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text, &origin)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &cfg.initial.profile {
            cfg.initial.profile = Some(base.join(p));
        }
        if let ResponseBlock::Tabulated { table } = &cfg.params.response {
            cfg.params.response = ResponseBlock::Tabulated {
                table: base.join(table),
            };
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn physical_params(&self) -> Result<PhysicalParams, ConfigError> {
        let invalid = |message: String| ConfigError::Invalid {
            path: "[params.response]".into(),
            message,
        };
        let response = match &self.params.response {
            ResponseBlock::Linear { kappa } => ResponseFunction::linear(*kappa),
            ResponseBlock::Sinh { a, b } => ResponseFunction::sinh(*a, *b),
            ResponseBlock::Tabulated { table } => {
                TabulatedResponse::from_csv(table).map(ResponseFunction::Tabulated)
            }
        }
        .map_err(|e| invalid(e.to_string()))?;
        let p = &self.params;
        let params = PhysicalParams {
            g: p.g,
            sigma: p.sigma,
            mu: p.mu,
            beta: p.beta,
            gamma_jump: p.gamma_jump,
            ell: p.ell,
            wall_height: p.wall_height,
            m_top: p.m_top,
            response,
        };
        params.validate().map_err(|e| ConfigError::Invalid {
            path: "[params]".into(),
            message: e.to_string(),
        })?;
        Ok(params)
    }

    /// Range checks not covered by the physical parameters.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |section: &str, message: String| {
            Err(ConfigError::Invalid {
                path: section.into(),
                message,
            })
        };
        let s = &self.stepping;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return bad("[stepping]", format!("dt must be positive, got {}", s.dt));
        }
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
            return bad(
                "[stepping]",
                format!("t_end must be non-negative, got {}", s.t_end),
            );
        }
        if !(s.newton_tol > 0.0) {
            return bad(
                "[stepping]",
                format!("newton_tol must be positive, got {}", s.newton_tol),
            );
        }
        if !(self.mesh.depth >= 0.0) {
            return bad(
                "[mesh]",
                format!("depth must be non-negative, got {}", self.mesh.depth),
            );
        }
        if let Some(d) = self.diagnostics.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad(
                    "[diagnostics]",
                    format!("delta must lie in (0, 1), got {d}"),
                );
            }
        }
        if !self.initial.modes.is_empty() && self.initial.profile.is_some() {
            return bad("[initial]", "give either modes or profile, not both".into());
        }
        if self.probe.levels < 2 {
            return bad(
                "[probe]",
                format!("levels must be at least 2, got {}", self.probe.levels),
            );
        }
        Ok(())
    }

    /// Number of steps covering t_end.
    pub fn steps(&self) -> usize {
        (self.stepping.t_end / self.stepping.dt - 1e-9)
            .ceil()
            .max(0.0) as usize
    }
}

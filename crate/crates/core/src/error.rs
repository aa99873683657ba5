use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not converge (achieved error estimate {achieved:.3e})")]
    Quadrature { achieved: f64 },

    #[error("root bracket not found: {0}")]
    Bracket(String),

    #[error("argument {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("insufficient mass: m_top = {m_top} must exceed M_min = {m_min}")]
    InsufficientMass { m_top: f64, m_min: f64 },

    #[error("equilibrium spills: contact height {height} reaches wall height {wall}")]
    Spills { height: f64, wall: f64 },

    #[error("grid too coarse: {got} samples, need at least {need}")]
    GridTooCoarse { got: usize, need: usize },

    #[error("response function is not strictly increasing: {0}")]
    NonMonotoneResponse(String),

    #[error("kappa must be positive, got {0}")]
    NonPositiveKappa(f64),

    #[error("response evaluated out of range: {value} not in [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index} (area {area:.3e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("map degenerate: J = {j_min:.3e} at node {node}")]
    MapDegenerate { node: usize, j_min: f64 },

    #[error("left small-data regime: |J-1| = {j_dev:.3e}, |A| = {a_max:.3e}")]
    GeometryGate { j_dev: f64, a_max: f64 },

    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),

    #[error("inf-sup failure, refine mesh or change elements: {0}")]
    InfSup(String),

    #[error("Newton iteration diverged; contact velocity trace {trace:?}")]
    NewtonDivergence { trace: Vec<[f64; 2]> },

    #[error("insufficient history: have {have} steps, need {need}")]
    InsufficientHistory { have: usize, need: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Failures of the numerical solve itself, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::MapDegenerate { .. }
                | Error::GeometryGate { .. }
                | Error::InfSup(_)
                | Error::NewtonDivergence { .. }
                | Error::OutOfRange { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

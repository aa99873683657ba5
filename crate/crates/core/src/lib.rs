//! Quasi-stationary Stokes flow with a free capillary surface and moving contact points.
//!
//! The fluid fills a vessel of half-width ℓ up to an equilibrium surface ζ₀; small
//! perturbations η of the surface are evolved on the fixed equilibrium domain through
//! a flattening map, with Navier slip on the walls and a dynamic contact-point law.

pub mod assembly;
pub mod audit;
pub mod equilibrium;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod stepper;

pub use error::{Error, Result};

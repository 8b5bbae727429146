//! Solvers for the wave equation with rough, high-contrast diffusion
//! coefficients on structured 1D/2D meshes.
//!
//! Three solution paths are provided and can be compared against each other:
//!
//! * direct fine-scale finite elements ([`fem`] + [`timestep`]),
//! * classical periodic homogenization via cell problems ([`homogenize`]),
//! * the Localized Orthogonal Decomposition multiscale method ([`lod`]),
//!   built from quasi-interpolation operators ([`interpolation`]) and
//!   patch-local corrector problems.
//!
//! The [`experiments`] module drives convergence studies over coarse mesh
//! sizes and localization parameters and writes machine-readable CSV
//! reports.

pub mod coefficients;
pub mod experiments;
pub mod fem;
pub mod homogenize;
pub mod interpolation;
pub mod linalg;
pub mod lod;
pub mod mesh;
pub mod timestep;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("coefficient: {0}")]
    Coefficient(String),
    #[error("linear algebra: {0}")]
    Linalg(String),
    #[error("time stepping: {0}")]
    Timestep(String),
    #[error("homogenization: {0}")]
    Homogenize(String),
    #[error("config: {0}")]
    Config(String),
    #[error("experiment: {0}")]
    Experiment(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

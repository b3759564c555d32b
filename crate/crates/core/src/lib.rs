//! D-bar reconstruction for two-dimensional electrical impedance tomography,
//! with conformal maps transferring arbitrary simply connected domains (disks,
//! polygons, the upper half-plane) to a virtual unit-disk reconstruction
//! domain.
//!
//! The crate is organized around the measurement model of the
//! Neumann-to-Dirichlet map in a truncated Fourier basis:
//!
//! * [`conformal`] — Möbius and Schwarz–Christoffel maps between true domains
//!   and the unit disk, with derivatives and compositions.
//! * [`fourier_ops`] — the mean-free truncated Fourier basis, operator-matrix
//!   assembly, N-to-D / D-to-N conversion, and push-forward of measured data
//!   to the virtual disk.
//! * [`forward_sim`] — boundary-integral forward solvers for piecewise
//!   constant phantoms (disk, polygon, half-plane) and the point-electrode
//!   model.
//! * [`faddeev`] — the Faddeev Green's function through the complex
//!   exponential integral, and assembly of the `H_hat` boundary operator.
//! * [`dbar_core`] — the reconstruction engine: boundary integral equation,
//!   scattering transform with truncation, periodized Lippmann–Schwinger
//!   solver, conductivity recovery.
//! * [`pipeline`] — end-to-end workflows (virtual-domain reconstruction, ROI
//!   magnification, point-electrode convergence studies, half-plane sweeps).
//! * [`cli`] — command-line surface and file formats.

pub mod cli;
pub mod conformal;
pub mod dbar_core;
pub mod faddeev;
pub mod forward_sim;
pub mod fourier_ops;
pub mod pipeline;

pub use num_complex::Complex64;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("evaluation at a polygon corner: {0}")]
    CornerSingularity(String),
    #[error("Schwarz-Christoffel parameter problem failed: {0}")]
    ParameterProblemFailure(String),
    #[error("conformal map inversion failed: {0}")]
    InversionFailure(String),
    #[error("invalid composition: {0}")]
    InvalidComposition(String),
    #[error("basis index error: {0}")]
    IndexError(String),
    #[error("operator assembly failure: {0}")]
    AssemblyFailure(String),
    #[error("ill-conditioned inversion (estimated condition {cond:.3e} exceeds cap {cap:.3e})")]
    IllConditionedInversion { cond: f64, cap: f64 },
    #[error("transmission solve failure: {0}")]
    TransmissionSolveFailure(String),
    #[error("invalid current: {0}")]
    InvalidCurrent(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("singular argument: {0}")]
    SingularArgument(String),
    #[error("argument on the branch cut: {0}")]
    BranchCut(String),
    #[error("singular spectral parameter: {0}")]
    SingularParameter(String),
    #[error("automatic truncation failed: {0}")]
    AutoTruncationFailure(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid color scale: {0}")]
    InvalidScale(String),
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

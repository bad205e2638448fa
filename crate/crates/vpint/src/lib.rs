//! Space-time parallel kinetic plasma simulation for the 3D-3V
//! Vlasov-Poisson system.
//!
//! The crate provides two electrostatic field solvers over a periodic cube,
//! a particle-in-Fourier (PIF) solver that scatters charge directly onto a
//! truncated Fourier basis through nonuniform Fourier transforms, and a
//! classic particle-in-cell (PIC) solver that deposits charge on a uniform
//! mesh and solves Poisson with an FFT. Both drive a kick-drift-kick Boris
//! pusher. On top of the serial propagators sits a parareal engine that
//! partitions the time axis into subdomains, runs a cheap coarse propagator
//! serially and the expensive fine propagator in parallel, and iterates the
//! predictor-corrector update on particle positions and velocities until the
//! subdomains converge.
//!
//! Layout:
//! - [`state`]: particles, spectra, grids, run configuration.
//! - [`transforms`]: exact NUDFT, tolerance-controlled NUFFT, uniform FFT.
//! - [`shape`]: B-spline deposition weights and Fourier multipliers.
//! - [`pif`] / [`pic`]: the two field solvers.
//! - [`pusher`]: Boris / velocity-Verlet time step.
//! - [`init`]: reproducible sampling of the benchmark scenarios.
//! - [`parareal`]: time partition, correction step, multi-block driver.
//! - [`diagnostics`]: conserved quantities, error norms, slope fits.
//! - [`report`]: CSV emission for runs and sweeps.

pub mod diagnostics;
pub mod error;
pub mod init;
pub mod parareal;
pub mod pic;
pub mod pif;
pub mod propagate;
pub mod pusher;
pub mod report;
pub mod shape;
pub mod state;
pub mod transforms;

mod exec;

pub use error::{Error, Result};
pub use state::{
    Domain, ExternalFields, FieldSpectrum, GridField, PhaseSpaceState, PropagatorConfig, Scheme,
};

//! Forward and inverse solvers for the one-dimensional time-fractional
//! subdiffusion model with a single-endpoint boundary observation.

pub mod continuation;
pub mod error;
pub mod fem;
pub mod fem_cq;
pub mod gamma;
pub mod grid;
pub mod harness;
pub mod inversion;
pub mod mlf;
pub mod order_fit;
pub mod problem;
pub mod quadrature;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
pub use grid::{SpaceGrid, TimeGrid};
pub use problem::{Excitation, ProblemSetup, Profile};
pub use trace::Trace;

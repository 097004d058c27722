//! Simulation and finite-time stability theory for tick-random synchronous
//! p-bit annealing on Ising graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: instance loading (G-set text format), illustrative toy
//!   graphs, and the coupling matrix with its derived scalars.
//! - [`dynamics`]: the stochastic tick-random update, trajectories, and an
//!   exact Markov-chain oracle for very small systems.
//! - [`observables`]: one-step autocorrelation, energy second differences,
//!   cut values and simulation-side threshold detection.
//! - [`theory`]: mean-field map, Jacobians, Gaussian effective gain, spectral
//!   growth criterion, IPR mode selection and the critical synchrony solver.
//! - [`harness`]: seeded c-sweeps, theory-vs-simulation comparison, threshold
//!   sensitivity reports and CSV output.

pub mod dynamics;
pub mod error;
pub mod graph;
pub mod harness;
pub mod observables;
pub mod theory;

pub use dynamics::{SimParams, SpinState, Trajectory};
pub use error::{Error, ErrorClass, Result};
pub use graph::{CouplingMatrix, Graph, ToyKind, WeightType};
pub use observables::{ObservableReport, ThresholdEstimate};
pub use theory::{BoundaryCurve, ModeInfo, Threshold, TheoryParams, Variant};

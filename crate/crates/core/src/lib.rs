//! Quantum random walk model of human reliability ratings in human-AI
//! interaction.
//!
//! A ten-level cognitive state is evolved unitarily under one of three
//! Hamiltonians per trial (match, mismatch, no response), read out and
//! re-prepared around the reported rating at every block-end probe, and
//! fitted to observed rating traces by bounded global search.
//!
//! Module map:
//! - [`linalg`]: complex vectors, symmetric tridiagonal eigensolver, propagators
//! - [`hamiltonians`]: `H+`, `H-`, `H0` and the generic potential form
//! - [`state`]: Gaussian preparation, phase-preserving collapse, readout
//! - [`session`]: replay of a participant session
//! - [`fitter`]: MAE cost, differential evolution + simplex polish, std sweep
//! - [`synth`]: seeded synthetic protocol and rating generator
//! - [`markov`]: classical birth-death contrast model
//! - [`io`]: session/fit JSON and trajectory CSV

pub mod error;
pub mod fitter;
pub mod hamiltonians;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod session;
pub mod state;
pub mod synth;

pub use error::{Error, Result};
pub use fitter::{fit, mae_cost, sweep_collapse_std, Bounds, FitConfig, FitResult};
pub use hamiltonians::{build_generic, build_hamiltonian, ModelParams, TrialOutcome};
pub use linalg::{apply, eig_sym_tridiagonal, propagator, ComplexVector, Propagator, SymTridiagonal};
pub use session::{insilico, median_time_delta, predict_ratings, run_session, Block, Session, Trajectory, TrialRecord};
pub use state::{Readout, StateVector, LEVELS};

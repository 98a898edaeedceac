//! Numerical laboratory for catastrophic forgetting in two-task continual
//! linear regression where the second task is a random block-orthogonal
//! transformation of the first.
//!
//! The crate has three layers:
//!
//! * exact closed forms — [`theory`] evaluates the worst-case expected
//!   forgetting and its two lemma ingredients in exact rational arithmetic,
//!   and [`moments`] computes expectations of arbitrary monomials of
//!   Haar-orthogonal matrix entries via the recursive integral formula;
//! * simulation — [`rotation`], [`solver`] and [`continual`] run the
//!   two-task minimum-norm learning scheme end to end and estimate expected
//!   forgetting by Monte Carlo;
//! * front end — [`cli`] exposes parameter sweeps, a moment query tool and
//!   validation suites with reproducible CSV/JSON output.
//!
//! Every Monte Carlo routine derives one independent random stream per
//! trial from `(master seed, trial index)`, so results are reproducible
//! and independent of thread scheduling.

pub mod avgcase;
pub mod cli;
pub mod continual;
pub mod moments;
pub mod poly;
pub mod rational;
pub mod rng;
pub mod rotation;
pub mod solver;
pub mod theory;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

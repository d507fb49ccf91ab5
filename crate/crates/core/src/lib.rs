//! Identity testing of symmetric Markov chains from a single trajectory.
//!
//! Given a known symmetric transition matrix `P` and one observed sample path
//! from a chain with unknown matrix `Q`, decide whether `Q = P` or the two
//! chains are far apart in the spectral distance `Dist(P, Q) = 1 - rho(Sq(P, Q))`.
//! The trajectory length required does not grow with the hitting time of `P`:
//! the state space is first split into well-connected "high-information"
//! components via an LP-relaxation sparsest-cut procedure, and the chain test
//! reduces to an IID distribution identity test inside whichever component the
//! trajectory happens to cover.
//!
//! Module map:
//! - [`linalg`]: dense symmetric matrices, spectral operations, scalar functionals
//! - [`lp`]: dense simplex solver and the cut/component-constrained metric relaxations
//! - [`embed`]: Bourgain L1 embedding, cut decomposition, and the rounding step
//! - [`partition`]: component extraction and full state-space partitioning
//! - [`chain`]: trajectory simulation, observed chains, exact hitting times
//! - [`testing`]: the sample-generation reduction and the identity testers
//! - [`oracle`]: brute-force reference implementations for small state spaces
//! - [`acceptance`]: the end-to-end validation suite driven by `mcidtest bench`

pub mod acceptance;
pub mod chain;
pub mod config;
pub mod embed;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod partition;
pub mod rng;
pub mod testing;

mod error;

pub use error::{Error, Result};

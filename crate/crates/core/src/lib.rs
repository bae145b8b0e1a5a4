//! Differentiable low-order d-separation for constraint-based causal discovery.
//!
//! Conditional-independence p-values computed from data are turned into
//! differentiable losses over a probabilistic adjacency matrix, and a
//! gradient-informed discrete sampler proposes DAGs that are ranked by how
//! well their d-separation statements agree with the p-values.
//!
//! Module map:
//!
//! * [`graph`]: discrete graphs, exact d-separation, feedback-arc pruning
//! * [`logic`]: log-space t-norm / t-conorm
//! * [`tape`]: reverse-mode differentiation over a small closed op set
//! * [`diffsep`]: soft reachability and d-separation scores
//! * [`ci`]: Fisher-z and chi-square tests, p-value tables and their cache
//! * [`objective`]: the five training losses and the energy
//! * [`sampler`]: gradient projection, discrete Langevin proposals, the chain
//! * [`select`]: candidate scoring, top-K selection and evaluation metrics
//! * [`datagen`]: synthetic DAGs and binary Bayesian networks
//! * [`io`]: CSV / JSON readers and writers

pub mod ci;
pub mod datagen;
pub mod diffsep;
pub mod error;
pub mod graph;
pub mod io;
pub mod logic;
pub mod objective;
pub mod sampler;
pub mod select;
pub mod tape;

pub use error::{Error, Result};

//! Gibbs measures on sparse random factor graphs at desk scale.
//!
//! - [`cube`]: measures on `Ω^n`, regularity, homogeneous decompositions, states.
//! - [`model`]: typed factor-graph models, configuration-model sampling, exact
//!   partition functions.
//! - [`local`]: rooted templates, canonical keys, local distributions.
//! - [`bethe`]: marginal assignments, Bethe free energy, uniqueness and
//!   non-reconstruction diagnostics.
//! - [`moments`]: marginal sequences, restricted partition functions, the
//!   enhanced model and planted sampling.

pub mod alphabet;
pub mod bethe;
pub mod cube;
pub mod error;
pub mod info;
pub mod local;
pub mod model;
pub mod moments;
pub mod rng;

pub use alphabet::Alphabet;
pub use error::{Error, Result};

//! Bayesian clustering of high-dimensional Gaussian data under
//! Normal–Inverse-Wishart priors.
//!
//! The crate evaluates cluster marginal likelihoods in either the `p × p`
//! primal or the `n × n` dual form, decomposes the posterior merge ratio of
//! two clusters into its dimension-dependent terms, and runs a collapsed
//! Gibbs sampler for the Dirichlet-process mixture.

pub mod csvio;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod niw;
pub mod partition;
pub mod ratio;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
pub use niw::{naive_prior, robust_prior, ClusterView, NiwPrior, RobustPriorSpec};
pub use partition::{CrpPrior, Partition, PartitionPrior};

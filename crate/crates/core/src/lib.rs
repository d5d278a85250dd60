//! Graph inception diffusion networks for link prediction.
//!
//! Node inputs are projected into several feature spaces, each diffused a
//! few hops through its own normalized operator and mixed with learnable
//! hop weights; the branches are concatenated and scored by a Hadamard MLP.
//! The crate also ships walk-based augmentation, negative sampling,
//! classical heuristics and an OGB-style Hits@K evaluator.

pub mod augment;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod harness;
pub mod heuristics;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod synth;
pub mod transition;

pub use error::{Error, Result};
pub use graph::{build_csr, FeatureMatrix, Pair, SparseGraph};
pub use transition::{build_transition, TransitionKind, TransitionMatrix};

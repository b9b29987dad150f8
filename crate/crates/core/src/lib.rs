//! Graph Space Embedding kernels over feature-interaction networks.
//!
//! Samples become instance graphs over a shared interaction network
//! ([`graph`]), graphs are compared with the GSE kernel or random-walk
//! baselines ([`kernels`]), the GSE rate is tuned by maximizing Gram-matrix
//! variance ([`nu_opt`]), models are evaluated with a precomputed-kernel SVM
//! ([`learner`]), and individual predictions are explained with Even Descent
//! sampling and a weighted surrogate tree ([`explain`]).

pub mod error;
pub mod explain;
pub mod graph;
pub mod kernels;
pub mod learner;
pub mod nu_opt;
pub mod toolkit;

pub use error::{Error, ErrorClass, Result};

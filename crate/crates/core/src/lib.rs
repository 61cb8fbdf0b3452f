//! Combinatorial contextual bandits with Gaussian-process upper confidence
//! bounds.
//!
//! Each round a volatile set of base arms arrives, each described by a
//! context in `[0, 1]^D`. The policy scores every arm with
//! `mu(x) + sqrt(beta_t) * sigma(x)` from a GP posterior over all past
//! semi-bandit observations, hands the scores to a deterministic
//! approximation oracle, observes the outcomes of the chosen arms and
//! extends the posterior by that batch.

pub mod environments;
pub mod error;
pub mod gp;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod oracles;
pub mod parallel;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
pub use gp::{GpState, PosteriorSummary, SparseGpState};
pub use kernels::{gram_matrix, Context, KernelFamily, KernelSpec};

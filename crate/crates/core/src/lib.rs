//! Block-sparse recovery with block orthogonal least squares: data model,
//! coherence measures, closed-form recovery bounds and greedy solvers.
#![no_std]
extern crate alloc;

pub mod block_model;
pub mod bounds;
pub mod coherence;
pub mod error;
pub mod linalg;
pub mod recovery;

pub use block_model::{BlockMatrix, BlockSparseSignal, NoiseSpec, SignalDist};
pub use coherence::{coherence_profile, erc_gamma, CoherenceProfile, ErcValue};
pub use error::Error;
pub use linalg::Matrix;
pub use recovery::{recover, Algorithm, RecoveryResult, RuleKind, StopReason, StoppingRule};

//! Signature matrix design for binary-input synchronous overloaded CDMA.
//!
//! The channel is `Y = A·X + N` with `A` an `m × n` real matrix of unit-norm
//! signature columns, `X ∈ {±1}^n` uniform, and `N` white Gaussian noise.
//! The crate evaluates a matrix's sum capacity, ML bit error rate and
//! constellation criteria, optimizes matrices for any criterion with a
//! real-valued genetic algorithm, and builds WBE and orthogonal baselines.
//!
//! Inner loops (Monte-Carlo samples, BER blocks, GA populations, large pair
//! sums) run on rayon with the default `parallel` feature. Results are
//! bit-identical with the feature off or with any worker count.

pub mod baselines;
pub mod ber;
pub mod capacity;
pub mod cli;
pub mod criteria;
pub mod error;
pub mod exec;
pub mod ga;
pub mod io;
pub mod model;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{ChannelSpec, Constellation, InputVector, SignatureMatrix};

//! Sparse superposition codes over memoryless channels.
//!
//! Messages made of one-hot sections are encoded by Gaussian, Hadamard or
//! spatially coupled operators, sent through the AWGN, erasure, Z or
//! symmetric channel and decoded by generalized approximate message
//! passing. The [`se`] and [`potential`] modules compute the scalar
//! state-evolution and potential predictions for the same codes.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod gamp;
pub mod message;
pub mod operator;
pub mod potential;
pub mod quad;
pub mod rng;
pub mod se;
pub mod special;

pub use channel::{ChannelModel, ChannelOutput};
pub use error::{Error, Result};
pub use gamp::{decode, GampConfig};
pub use message::{CodeParams, SectionedMessage};
pub use operator::{CodingOperator, OperatorSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Constructive ReLU approximation of functions on low-complexity sets via
//! Johnson–Lindenstrauss embeddings.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complexity;
pub mod constructor;
pub mod domain;
pub mod error;
pub mod exec;
pub mod extension;
pub mod fmt;
pub mod harness;
pub mod jl;
pub mod models;
pub mod relu_ir;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Exec;

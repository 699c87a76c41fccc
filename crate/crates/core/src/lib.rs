//! Electromagnetic information theory for MIMO links in free space and in
//! clusters of cylindrical scatterers.
//!
//! The crate builds channel matrices from Green's functions, or from a
//! T-matrix multiple-scattering solver for parallel cylinders, decomposes
//! them into singular-value modes, derives information metrics and drives a
//! BPSK image-transmission simulation with mode-based power allocation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod greens;
pub mod imageio;
pub mod infomet;
pub mod link;
pub mod oracles;
pub mod scatter;
pub mod scenario;
pub mod specfun;
pub mod txsim;

pub use error::{Error, Result};

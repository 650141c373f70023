//! Harmonic analysis of Lévy's Brownian kernel on compact matrix groups.
//!
//! The Brownian kernel of a metric `d` with base point `x0` is
//! `K(x, y) = (d(x, x0) + d(y, x0) - d(x, y)) / 2`. It is a covariance exactly
//! when `d` is restricted negative definite. On SU(2), with the metric
//! induced by `-tr(XY)/2`, it is; on SO(n), n ≥ 3, no bi-invariant distance
//! is. This crate computes the character coefficients that decide the
//! question, builds finite certificates of failure on SO(n), and simulates
//! the Brownian field on SU(2).

pub mod error;
pub mod field_sim;
pub mod format;
pub mod group;
pub mod harmonic;
pub mod kernel_lab;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use rng::{RngStream, StreamId};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

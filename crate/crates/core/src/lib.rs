//! Two-dimensional hydraulic-fracture simulation: an ordinary state-based
//! peridynamic solid on a uniform grid, coupled to a bilinear finite-element
//! Biot flow model on the same nodes.
//!
//! The solid carries damage through irreversible bond breakage; damage in
//! turn classifies nodes into reservoir, transition and fracture domains whose
//! flow properties are blended from crack apertures measured on broken bonds.

// `!(x > 0.0)` is used on purpose throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli_io;
pub mod coupling;
pub mod discretization;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod solid;
pub mod solvers;

pub use discretization::Vec2;
pub use error::{Error, Result};

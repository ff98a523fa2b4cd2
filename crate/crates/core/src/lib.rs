//! Numerics for the bulk-edge correspondence of the rotating shallow-water
//! model with odd viscosity.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature evaluates loop samples on a rayon pool.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cylinder;
pub mod error;
pub mod fd;
pub mod flow;
pub mod halfline;
pub mod linalg;
pub mod model;
pub mod scatter;

mod par;

pub use cylinder::{BoundaryParam, CylinderPoint};
pub use error::{Error, Result};
pub use model::{BandIndex, BulkMomentum, ModelParams};

/// Complex double, the scalar type used throughout.
pub type C64 = num_complex::Complex64;

//! Tensor-product B-spline fields driven by a small coefficient network,
//! with analytical derivatives for physics-informed training and exact
//! imposition of initial and Dirichlet boundary conditions.
//!
//! The crate is `no_std` + `alloc`; the companion `dbsn-cli` crate carries
//! IO, configuration, and file formats.

#![cfg_attr(not(feature = "std"), no_std)]
#![cfg_attr(feature = "std", allow(unused_extern_crates))]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod model;
pub mod net;
pub mod oracles;
pub mod physics;
pub mod rng;
pub mod spline;
pub mod tensor;

pub use error::{Error, Result};

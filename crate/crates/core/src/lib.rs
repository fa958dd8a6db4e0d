//! Cusped spaces of relatively hyperbolic pairs, their Dehn filling quotients,
//! and flag-manifold automata for the representations that fill along with them.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod egf;
pub mod error;
pub mod filling;
pub mod flag;
pub mod graph;
pub mod group;

pub use error::{Error, Result};
pub use nalgebra;

pub(crate) type FxBuild = core::hash::BuildHasherDefault<rustc_hash::FxHasher>;

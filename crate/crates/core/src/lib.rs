//! Channel codes for multi-terminal networks with general message access
//! structures, built from constrained random number generators over
//! finite-field hash ensembles, together with the rate-region machinery
//! used to check them.

pub mod access;
pub mod bounds;
pub mod codec;
pub mod error;
pub mod field;
pub mod hash;
pub mod idset;
pub mod prob;
pub mod region;
pub mod streams;

pub use access::{AccessStructure, SortedFamily};
pub use error::{Error, Result};
pub use idset::IdSet;

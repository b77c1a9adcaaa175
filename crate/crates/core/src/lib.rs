//! Max-Sum message passing for packing vertex- and edge-disjoint Steiner trees.
pub mod error;
pub mod heuristics;
pub mod instance;
pub mod kernel;
pub mod oracle;
pub mod solver;
pub mod state;

pub use error::{Error, Result};

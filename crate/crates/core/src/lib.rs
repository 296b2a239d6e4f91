//! Numerical laboratory for densest K-subgraphs of weighted random graphs.

pub mod asymptotics;
pub mod bounds;
pub mod combinatorics;
pub mod disorder;
pub mod error;
pub mod harness;
pub mod lindeberg;
pub mod ogp;
pub mod rng;
pub mod solver;

pub use error::{LabError, Result};

//! Special Lagrangian 3-folds in C³ built from finite-dimensional
//! evolution equations, with validators for their defining invariants.

pub mod analysis;
pub mod cgeom;
pub mod cli;
pub mod error;
pub mod evodata;
pub mod families;
pub mod flow;
pub mod specfun;
pub mod symmetry;

pub use cgeom::{Complex3, C64};
pub use error::{Error, Result};

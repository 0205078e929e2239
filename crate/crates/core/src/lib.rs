//! Isogeometric discretization of the Reissner–Mindlin plate with
//! B-spline spaces whose rotations contain the gradients of deflections,
//! so the scheme stays locking-free as the thickness goes to zero.

pub mod assembly;
pub mod benchmarks;
pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod norms;
pub mod solver;
pub mod spaces;
pub mod splines;

pub use error::{Error, Result};

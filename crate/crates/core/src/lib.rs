//! Minkowski problem for torsional rigidity on convex polygons.

pub mod error;
pub mod fem;
pub mod io;
pub mod geometry;
pub mod measure;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};

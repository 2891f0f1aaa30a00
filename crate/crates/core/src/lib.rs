//! Discrete exterior calculus on simplicial manifolds with boundary, and the
//! deformation theory of special Lagrangians with Lagrangian boundary
//! conditions in flat Calabi-Yau models.

pub mod cli;
pub mod cohomology;
pub mod complex;
pub mod cy;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod hodge;
pub mod io;
pub mod metric;
pub mod moduli;

pub use error::{Error, Result};

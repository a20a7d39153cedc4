//! Quantitative isoperimetric functionals on planar sets bounded by
//! circular arcs: deficit, Fraenkel asymmetry, the quotient hierarchy, the
//! standard shape families, annular symmetrization and derivative-free
//! optimization over shapes.

pub mod error;
pub mod geom2d;
pub mod isoperimetry;
pub mod optimize;
pub mod quotients;
pub mod shapes;
pub mod symmetrize;

pub use error::{Error, Result};

//! Global minimization of binary shape energies
//! `sum (alpha - f) theta + TV_g(theta)` on a pixel grid.
//!
//! Two independent exact routes are provided:
//!
//! * [`rof`]: solve the weighted anisotropic ROF problem once by dual
//!   projection, then [`level_set::threshold`] its solution at any `alpha`;
//! * [`graph_cut`]: build an s-t cut problem for a given `alpha` and solve it
//!   by max-flow.
//!
//! [`acontrario`] picks a segmentation from a regularized field without
//! fixing `alpha`, and [`data_terms`] builds `f` and `g` from imagery.

pub mod acontrario;
pub mod data_terms;
pub mod energy;
pub mod error;
pub mod field;
pub mod graph_cut;
pub mod grid_ops;
pub mod io;
pub mod level_set;
pub mod rof;

pub use error::{Result, ShapeError};
pub use field::{BinaryMask, ScalarField, VectorField, WeightField};

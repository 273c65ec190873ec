//! Numerical real interpolation: K- and J-functionals for concrete Banach
//! pairs, Lions-Peetre and limiting interpolation norms, parameter lattices,
//! extrapolation functionals, Grand Lebesgue norms and Schatten/Matsaev
//! norms of matrices.
//!
//! Everything is computed on a dyadic-log grid (see [`grid::LogGrid`]) so
//! that the substitutions `t -> t^2` and `t -> sqrt(t)` are exact index
//! shifts.

pub mod error;
pub mod extrapolate;
pub mod grand;
pub mod grid;
pub mod interpnorm;
pub mod kfunctional;
pub mod lattice;
pub mod schatten;

pub use error::{Error, Result};

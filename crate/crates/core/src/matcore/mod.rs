//! Dense matrices, matrix polynomials and least squares.

mod lstsq;
mod mat;
mod matpoly;

pub use lstsq::{solve_least_squares, LeastSquares, DEFAULT_RANK_TOL};
pub use mat::Mat;
pub use matpoly::{Degree, MatPoly};

//! Scalar classical orthogonal polynomials and quadrature.

mod quadrature;
mod scalar;

pub use quadrature::{
    charlier_sum_rule, composite_legendre, gauss_rule, mapped_jacobi, BaseWeight, Quadrature, Support,
};
pub use scalar::{charlier, gegenbauer, hermite, laguerre, ScalarPoly};

//! Minimum-norm least squares with rank analysis.

use nalgebra::{DMatrix, DVector};

use super::mat::Mat;
use crate::error::{Error, Result};

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    /// Orthonormal basis of `{v : A v = 0}` under the rank threshold.
    pub nullspace: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Solves `min |A x - b|_2` with the minimum-norm solution.
///
/// Singular values at or below `rel_tol * sigma_max` are treated as zero.
/// An all-zero `A` gives rank 0, the zero solution and residual `|b|_2`.
pub fn solve_least_squares(a: &Mat, b: &[f64], rel_tol: f64) -> Result<LeastSquares> {
    let (m, k) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::Dimension(format!(
            "right-hand side has {} entries, expected {m}",
            b.len()
        )));
    }
    // Pad to at least square so the thin SVD exposes the full null space.
    let rows = m.max(k);
    let mut am = DMatrix::<f64>::zeros(rows, k);
    let mut bv = DVector::<f64>::zeros(rows);
    for i in 0..m {
        for j in 0..k {
            am[(i, j)] = a[(i, j)];
        }
        bv[i] = b[i];
    }
    let svd = am.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sigma.iter().fold(0.0_f64, |acc, s| acc.max(*s));
    let cutoff = rel_tol * smax;

    let mut x = DVector::<f64>::zeros(k);
    let mut rank = 0;
    let mut nullspace = Vec::new();
    for (i, s) in sigma.iter().enumerate() {
        let v = vt.row(i).transpose();
        if smax > 0.0 && *s > cutoff {
            rank += 1;
            let coef = u.column(i).dot(&bv) / s;
            x += v * coef;
        } else {
            nullspace.push(v.iter().copied().collect());
        }
    }
    let residual = &am * &x - &bv;
    Ok(LeastSquares {
        solution: x.iter().copied().collect(),
        nullspace,
        residual_norm: residual.norm(),
        rank,
        singular_values: sigma,
    })
}

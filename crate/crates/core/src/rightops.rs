//! Right-acting second-order operators on matrix polynomials.
//!
//! Coefficients always multiply from the right: `(F . D)(x) = F''(x) c2(x) +
//! F'(x) c1(x) + F(x) c0(x)`, or `sum_h F(x + h) g_h(x)` for shift operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{FamilyInstance, FamilyKind};
use crate::matcore::{Mat, MatPoly};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "snake_case")]
pub enum RightOp {
    Differential {
        c2: MatPoly,
        c1: MatPoly,
        c0: MatPoly,
    },
    /// Pairs `(h, g_h)` sorted by `h`.
    Difference {
        shifts: Vec<(i32, MatPoly)>,
    },
}

impl RightOp {
    pub fn size(&self) -> usize {
        match self {
            RightOp::Differential { c2, .. } => c2.size(),
            RightOp::Difference { shifts } => shifts.first().map_or(0, |(_, g)| g.size()),
        }
    }

    /// Largest coefficient entry, used to normalize residuals.
    pub fn scale(&self) -> f64 {
        match self {
            RightOp::Differential { c2, c1, c0 } => {
                c2.max_coeff_norm().max(c1.max_coeff_norm()).max(c0.max_coeff_norm())
            }
            RightOp::Difference { shifts } => shifts.iter().fold(0.0, |m, (_, g)| m.max(g.max_coeff_norm())),
        }
    }

    /// Coefficient of the shift `h` (zero if absent).
    pub fn shift_coeff(&self, h: i32) -> Option<&MatPoly> {
        match self {
            RightOp::Difference { shifts } => shifts.iter().find(|(k, _)| *k == h).map(|(_, g)| g),
            RightOp::Differential { .. } => None,
        }
    }
}

/// `F . op`.
pub fn apply(op: &RightOp, f: &MatPoly) -> Result<MatPoly> {
    if f.size() != op.size() {
        return Err(Error::Dimension(format!(
            "operator size {} vs polynomial size {}",
            op.size(),
            f.size()
        )));
    }
    match op {
        RightOp::Differential { c2, c1, c0 } => {
            let d1 = f.derivative();
            let d2 = d1.derivative();
            let out = d2.try_mul(c2)?.try_add(&d1.try_mul(c1)?)?.try_add(&f.try_mul(c0)?)?;
            Ok(out)
        }
        RightOp::Difference { shifts } => {
            let mut out = MatPoly::zero(f.size());
            for (h, g) in shifts {
                out = out.try_add(&f.shift(*h as f64).try_mul(g)?)?;
            }
            Ok(out)
        }
    }
}

/// `D = d^2 Phi^T + d Psi^T`, or for Charlier
/// `F . D = -(F(x+1) - 2F(x) + F(x-1)) Phi^T - (F(x) - F(x-1)) Psi^T`.
pub fn build_pearson_d(f: &FamilyInstance) -> Result<RightOp> {
    let p = f.pearson()?;
    let phi_t = p.phi().adjoint();
    let psi_t = p.psi().adjoint();
    if f.kind() == FamilyKind::Charlier {
        Ok(RightOp::Difference {
            shifts: vec![
                (-1, &phi_t.scale(-1.0) + &psi_t),
                (0, &phi_t.scale(2.0) - &psi_t),
                (1, phi_t.scale(-1.0)),
            ],
        })
    } else {
        Ok(RightOp::Differential {
            c2: phi_t,
            c1: psi_t,
            c0: MatPoly::zero(f.size()),
        })
    }
}

/// `D = -1/2 d^2 + d (x I - A) + J` for the free Hermite weight.
pub fn build_free_d(f: &FamilyInstance) -> Result<RightOp> {
    if f.kind() != FamilyKind::HermiteFree {
        return Err(Error::NotApplicable(format!("the free operator for {}", f.kind())));
    }
    let n = f.size();
    Ok(RightOp::Differential {
        c2: MatPoly::constant(Mat::identity(n).scale(-0.5)),
        c1: MatPoly::linear(Mat::identity(n), f.a_mat.scale(-1.0)),
        c0: MatPoly::constant(f.j_mat.clone()),
    })
}

/// The family's own second-order operator.
pub fn family_operator(f: &FamilyInstance) -> Result<RightOp> {
    if f.kind() == FamilyKind::HermiteFree {
        build_free_d(f)
    } else {
        build_pearson_d(f)
    }
}

/// `Lambda_n` with `P_n . D = Lambda_n P_n`.
pub fn eigenvalue_matrix(f: &FamilyInstance, n: usize) -> Result<Mat> {
    let nf = n as f64;
    if f.kind() == FamilyKind::HermiteFree {
        return Ok(&Mat::identity(f.size()).scale(nf) + &f.j_mat);
    }
    let p = f.pearson()?;
    let lam = &p.phi2.transpose().scale(nf * (nf - 1.0)) + &p.psi1.transpose().scale(nf);
    Ok(if f.kind() == FamilyKind::Charlier {
        lam.scale(-1.0)
    } else {
        lam
    })
}

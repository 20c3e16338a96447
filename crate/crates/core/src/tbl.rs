//! Commuting operator construction: the constant matrix `R`, the operator
//! `T = xD + D(x - 2 Omega) - x (Lambda_M + Lambda_(M+1)) + R`, and checks
//! that `T` commutes with time and band limiting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{build_family, FamilyInstance, FamilyKind, FamilySpec};
use crate::matcore::{solve_least_squares, Mat, MatPoly, DEFAULT_RANK_TOL};
use crate::mvop::{InnerProduct, MvopSeq};
use crate::rightops::{apply, eigenvalue_matrix, family_operator, RightOp};

/// 64-bit linear congruential generator (Knuth's MMIX constants).
///
/// `state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64)`;
/// doubles are taken from the top 53 bits.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Lcg { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Matrix polynomial with entries uniform in `[-1, 1]`.
    pub fn mat_poly(&mut self, size: usize, degree: usize) -> MatPoly {
        MatPoly::from_coeffs(
            size,
            (0..=degree)
                .map(|_| Mat::from_fn(size, size, |_, _| self.uniform(-1.0, 1.0)))
                .collect(),
        )
    }
}

/// Which coefficient of `M^2` to use in the closed forms.
///
/// `TwoMSquared` matches the `2 M^2` inside `Lambda_M + Lambda_(M+1)`;
/// `MSquared` satisfies the central identity only at `M = 0` for the
/// Laguerre, Gegenbauer and Charlier families and is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RFormula {
    #[default]
    TwoMSquared,
    MSquared,
}

/// `Lambda_M + Lambda_(M+1)`.
pub fn sigma(f: &FamilyInstance, m: usize) -> Result<Mat> {
    Ok(&eigenvalue_matrix(f, m)? + &eigenvalue_matrix(f, m + 1)?)
}

pub fn closed_form_r(f: &FamilyInstance, m: usize, formula: RFormula) -> Result<Mat> {
    let p = f.pearson()?;
    let mf = m as f64;
    let k = match formula {
        RFormula::TwoMSquared => 2.0 * mf * mf,
        RFormula::MSquared => mf * mf,
    };
    let odd = 2.0 * mf + 1.0;
    let psi0t = p.psi0.transpose();
    Ok(match f.kind() {
        FamilyKind::Hermite => psi0t.scale(-odd),
        FamilyKind::Laguerre => &p.phi1.transpose().scale(-k) - &psi0t.scale(odd),
        FamilyKind::Gegenbauer => psi0t.scale(-(k / (2.0 * f.nu() + f.size() as f64) + odd)),
        FamilyKind::Charlier => &(&p.phi1.transpose() - &p.psi1.transpose()).scale(k) + &psi0t.scale(odd),
        FamilyKind::HermiteFree => unreachable!("no Pearson data"),
    })
}

/// `(R - x S) Q - Q (R - x S)^T`, the polynomial part of the central identity.
pub fn central_defect(f: &FamilyInstance, r: &Mat, s: &Mat) -> MatPoly {
    let m = MatPoly::linear(s.scale(-1.0), r.clone());
    &(&m * &f.q_poly) - &(&f.q_poly * &m.adjoint())
}

/// Coefficient norm of the defect over `|Q| (|R| + |S|)`.
pub fn central_residual(f: &FamilyInstance, r: &Mat, s: &Mat) -> f64 {
    let num = central_defect(f, r, s).max_coeff_norm();
    if num == 0.0 {
        return 0.0;
    }
    num / (f.q_poly.max_coeff_norm() * (r.max_abs() + s.max_abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveTolerances {
    /// Relative residual below which the system is consistent.
    pub consistent: f64,
    /// Relative residual above which the system is inconsistent.
    pub inconsistent: f64,
    /// Relative singular-value cutoff.
    pub rank: f64,
}

impl Default for SolveTolerances {
    fn default() -> Self {
        SolveTolerances {
            consistent: 1e-8,
            inconsistent: 1e-3,
            rank: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Unique,
    AffineFamily,
    Inconsistent,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Unique => "unique",
            SolveStatus::AffineFamily => "affine_family",
            SolveStatus::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSolveReport {
    pub status: SolveStatus,
    pub particular: Option<Mat>,
    /// Orthonormal (in the Frobenius sense) basis of the homogeneous solutions.
    pub nullspace: Vec<Mat>,
    /// Relative least-squares residual of the scaled system.
    pub residual: f64,
    /// Equations before dropping duplicates and trivial rows (`<= 2N * N^2`).
    pub rows_total: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

impl RSolveReport {
    /// Frobenius distance from `r` to the affine solution set.
    pub fn distance_to(&self, r: &Mat) -> Option<f64> {
        let p = self.particular.as_ref()?;
        let mut d: Vec<f64> = (r - p).as_slice().to_vec();
        for v in &self.nullspace {
            let c: f64 = d.iter().zip(v.as_slice()).map(|(a, b)| a * b).sum();
            for (di, vi) in d.iter_mut().zip(v.as_slice()) {
                *di -= c * vi;
            }
        }
        Some(d.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Frobenius distance from `m` to the span of the null space, relative to `|m|`.
    pub fn nullspace_distance(&self, m: &Mat) -> f64 {
        let norm = m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        let probe = RSolveReport {
            particular: Some(Mat::zeros(m.rows(), m.cols())),
            ..self.clone()
        };
        probe.distance_to(m).map_or(f64::INFINITY, |d| d / norm)
    }

    pub fn nullspace_contains(&self, m: &Mat, tol: f64) -> bool {
        self.nullspace_distance(m) <= tol
    }
}

/// Relative size below which an equation is treated as cancellation noise.
const ROW_NOISE: f64 = 1e-12;

/// Equations `(R Q - Q R^T)_p = (S Q - Q S^T)_(p-1)` for every power `p` and
/// entry `i < j` (the defect is antisymmetric, so `i >= j` adds nothing),
/// each row scaled to unit max-norm. Rows far below the largest one come
/// from cancelled coefficients of `Q` and are dropped rather than inflated.
pub fn central_system(f: &FamilyInstance, s: &Mat) -> (Mat, Vec<f64>, usize) {
    let n = f.size();
    let q = &f.q_poly;
    let dq = q.degree().finite().unwrap_or(0);
    let rhs_poly = (&q.left_mul(s) - &q.right_mul(&s.transpose())).mul_xk(1);
    let rows_total = (dq + 2) * n * n;
    let mut raw: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for p in 0..dq + 2 {
        let qp = q.coeff(p);
        let rp = rhs_poly.coeff(p);
        for i in 0..n {
            for j in i + 1..n {
                let mut row = vec![0.0; n * n];
                for k in 0..n {
                    // R_ik Q_kj - Q_ik R_jk
                    row[i * n + k] += qp[(k, j)];
                    row[j * n + k] -= qp[(i, k)];
                }
                let rhs = rp[(i, j)];
                let scale = row.iter().fold(rhs.abs(), |m, v| m.max(v.abs()));
                raw.push((row, rhs, scale));
            }
        }
    }
    let biggest = raw.iter().fold(0.0f64, |m, r| m.max(r.2));
    let kept: Vec<_> = raw.into_iter().filter(|r| r.2 > ROW_NOISE * biggest).collect();
    let mut a = Mat::zeros(kept.len().max(1), n * n);
    let mut b = vec![0.0; kept.len().max(1)];
    for (r, (row, rhs, scale)) in kept.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = v / scale;
        }
        b[r] = rhs / scale;
    }
    (a, b, rows_total)
}

/// Solves the central identity for `R` given `S = Lambda_M + Lambda_(M+1)`.
///
/// Residuals between the two thresholds are an error, never a status.
pub fn solve_r(f: &FamilyInstance, s: &Mat, tol: &SolveTolerances) -> Result<RSolveReport> {
    let n = f.size();
    let (a, b, rows_total) = central_system(f, s);
    let ls = solve_least_squares(&a, &b, tol.rank)?;
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = if bnorm > 0.0 {
        ls.residual_norm / bnorm
    } else {
        ls.residual_norm
    };
    let to_mat = |v: &[f64]| Mat::from_row_major(n, n, v.to_vec()).expect("n^2 entries");
    let nullspace: Vec<Mat> = ls.nullspace.iter().map(|v| to_mat(v)).collect();
    let status = if residual > tol.inconsistent {
        SolveStatus::Inconsistent
    } else if residual < tol.consistent {
        if nullspace.is_empty() {
            SolveStatus::Unique
        } else {
            SolveStatus::AffineFamily
        }
    } else {
        return Err(Error::AmbiguousSolve { residual });
    };
    Ok(RSolveReport {
        status,
        particular: (status != SolveStatus::Inconsistent).then(|| to_mat(&ls.solution)),
        nullspace,
        residual,
        rows_total,
        rows: a.rows(),
        cols: n * n,
        rank: ls.rank,
    })
}

/// The free-Hermite solution for `N = 2`: `[[0, -r], [-r t2/t1, 0]]` with
/// `r = alpha1/alpha2`, i.e. `[[0, -1], [-t2/t1, 0]]` for equal alphas.
pub fn free_n2_solution(f: &FamilyInstance) -> Result<Mat> {
    if f.kind() != FamilyKind::HermiteFree || f.size() != 2 {
        return Err(Error::NotApplicable("the N = 2 closed form".into()));
    }
    let r = f.alpha[0] / f.alpha[1];
    Mat::from_rows(&[vec![0.0, -r], vec![-r * f.t[1] / f.t[0], 0.0]])
}

/// Places a nominal band limit inside the family's support: unchanged on
/// the line and on `(-1, 1)`, `2 (Omega + 1)` on the half line, and
/// `floor(4 (Omega + 1)) + 1/2` on the integers. Discrete limits must be
/// half-integers: the shift form of `T` couples `x` and `x + 1` through
/// `2x + 1 - 2 Omega`, which vanishes across the cut only there.
pub fn map_omega(kind: FamilyKind, omega: f64) -> f64 {
    match kind {
        FamilyKind::Hermite | FamilyKind::HermiteFree | FamilyKind::Gegenbauer => omega,
        FamilyKind::Laguerre => 2.0 * (omega + 1.0),
        FamilyKind::Charlier => (4.0 * (omega + 1.0)).floor() + 0.5,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TOperator {
    pub family: FamilySpec,
    pub m: usize,
    pub omega: f64,
    pub r: Mat,
    pub sigma: Mat,
    /// The family operator `D`.
    pub base: RightOp,
    pub op: RightOp,
}

/// Assembles `T` from `D`: with `F . D = F'' c2 + F' c1 + F c0`,
/// `T` has `c2' = (2x - 2 Omega) c2`, `c1' = (2x - 2 Omega) c1 + 2 c2`,
/// `c0' = (2x - 2 Omega) c0 + c1 - x S + R`; for shift operators
/// `g_h' = (2x + h - 2 Omega) g_h`, with `-x S + R` added at `h = 0`.
pub fn build_t(f: &FamilyInstance, m: usize, omega: f64, r: &Mat) -> Result<TOperator> {
    let n = f.size();
    let d = family_operator(f)?;
    let s = sigma(f, m)?;
    let lin = |h: f64| MatPoly::linear(Mat::identity(n).scale(2.0), Mat::identity(n).scale(h - 2.0 * omega));
    let order0 = MatPoly::linear(s.scale(-1.0), r.clone());
    let op = match &d {
        RightOp::Differential { c2, c1, c0 } => RightOp::Differential {
            c2: &lin(0.0) * c2,
            c1: &(&lin(0.0) * c1) + &c2.scale(2.0),
            c0: &(&(&lin(0.0) * c0) + c1) + &order0,
        },
        RightOp::Difference { shifts } => RightOp::Difference {
            shifts: shifts
                .iter()
                .map(|(h, g)| {
                    let mut gh = &lin(*h as f64) * g;
                    if *h == 0 {
                        gh = &gh + &order0;
                    }
                    (*h, gh)
                })
                .collect(),
        },
    };
    Ok(TOperator {
        family: f.spec.clone(),
        m,
        omega,
        r: r.clone(),
        sigma: s,
        base: d,
        op,
    })
}

impl TOperator {
    pub fn apply(&self, f: &MatPoly) -> Result<MatPoly> {
        apply(&self.op, f)
    }

    /// `x (F . D) + (x F) . D - 2 Omega (F . D) - x F S + F R`, term by term.
    pub fn apply_direct(&self, f: &MatPoly) -> Result<MatPoly> {
        let fd = apply(&self.base, f)?;
        let xfd = apply(&self.base, &f.mul_xk(1))?;
        let out = &(&(&fd.mul_xk(1) + &xfd) - &fd.scale(2.0 * self.omega))
            - &(&f.right_mul(&self.sigma).mul_xk(1) - &f.right_mul(&self.r));
        Ok(out)
    }

    /// Largest relative gap between `apply` and `apply_direct` on random inputs.
    pub fn self_check(&self, rng: &mut Lcg, trials: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let f = rng.mat_poly(self.op.size(), 4);
            let a = self.apply(&f)?;
            let b = self.apply_direct(&f)?;
            worst = worst.max((&a - &b).max_coeff_norm() / b.max_coeff_norm().max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCoupling {
    /// Normalized coupling between levels `M` and `M + 1`.
    pub at_m: f64,
    /// Same between `M + 1` and `M + 2`.
    pub reference: f64,
    /// Largest normalized block over levels `<= M + 2`.
    pub scale: f64,
}

/// Blocks `<P_i . T, P_j>` over `sqrt(|H_i| |H_j|)`.
pub fn check_time_commutation(seq: &MvopSeq, t: &TOperator) -> Result<TimeCoupling> {
    let m = t.m;
    if seq.n_max < m + 3 {
        return Err(Error::OutOfRange {
            requested: m + 3,
            available: seq.n_max,
        });
    }
    let ip = seq.inner_product();
    let top = m + 2;
    let images: Vec<MatPoly> = (0..=top).map(|i| t.apply(&seq.p[i])).collect::<Result<_>>()?;
    let block = |i: usize, j: usize| -> Result<f64> {
        let g = ip.inner(&images[i], &seq.p[j], None)?;
        Ok(g.max_abs() / (seq.h[i].max_abs() * seq.h[j].max_abs()).sqrt())
    };
    let mut scale: f64 = 0.0;
    for i in 0..=top {
        for j in 0..=top {
            scale = scale.max(block(i, j)?);
        }
    }
    let coupling = |n: usize| -> Result<f64> { Ok(block(n, n + 1)?.max(block(n + 1, n)?)) };
    Ok(TimeCoupling {
        at_m: coupling(m)?,
        reference: coupling(m + 1)?,
        scale,
    })
}

/// `max |<F . T, G>_Omega - <F, G . T>_Omega|` over random pairs of degree `<= 4`,
/// relative to the larger of the two sides.
pub fn check_band_symmetry(ip: &InnerProduct, t: &TOperator, omega: f64, trials: usize, rng: &mut Lcg) -> Result<f64> {
    let rule = ip.band_rule(omega)?;
    let n = t.op.size();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (f, g) = (rng.mat_poly(n, 4), rng.mat_poly(n, 4));
        let a = rule.integrate(&t.apply(&f)?, &g)?;
        let b = rule.integrate(&f, &t.apply(&g)?)?;
        let scale = a.max_abs().max(b.max_abs());
        if scale > 0.0 {
            worst = worst.max((&a - &b).max_abs() / scale);
        }
    }
    Ok(worst)
}

/// One free-Hermite parameter draw and its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub size: usize,
    /// `None` for the default parameters.
    pub draw: Option<usize>,
    pub alphas: Vec<f64>,
    pub ts: Vec<f64>,
    /// `unique`, `affine_family`, `inconsistent` or `ambiguous`.
    pub status: String,
    pub residual: f64,
    pub report: Option<RSolveReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub records: Vec<SweepRecord>,
    /// Every `N = 2` record is an affine family containing the identity.
    pub small_solvable: bool,
    /// Every `N > 2` record is inconsistent.
    pub large_inconsistent: bool,
    pub any_ambiguous: bool,
}

/// Solves the free-Hermite central identity for the default parameters and
/// `trials` draws per size with `alpha_j, t_j` uniform in `[1/4, 4]`.
///
/// Draws are generated sequentially from `seed` before solving in parallel,
/// so the output is independent of the thread count.
pub fn counterexample_sweep(sizes: &[usize], trials: usize, seed: u64, tol: &SolveTolerances) -> Result<SweepSummary> {
    if sizes.iter().any(|n| !(1..=8).contains(n)) {
        return Err(Error::InvalidParameter(format!(
            "sizes must lie in 1..=8, got {sizes:?}"
        )));
    }
    let mut rng = Lcg::new(seed);
    let mut jobs = Vec::new();
    for &n in sizes {
        jobs.push((n, None, vec![1.0; n], (1..=n).map(|j| j as f64).collect::<Vec<_>>()));
        for k in 0..trials {
            let alphas: Vec<f64> = (0..n).map(|_| rng.uniform(0.25, 4.0)).collect();
            let ts: Vec<f64> = (0..n).map(|_| rng.uniform(0.25, 4.0)).collect();
            jobs.push((n, Some(k), alphas, ts));
        }
    }
    let records: Vec<SweepRecord> = jobs
        .into_par_iter()
        .map(|(n, draw, alphas, ts)| -> Result<SweepRecord> {
            let f = build_family(&FamilySpec::hermite_free(n).with_free_params(alphas.clone(), ts.clone()))?;
            let s = sigma(&f, 0)?;
            let (status, residual, report) = match solve_r(&f, &s, tol) {
                Ok(r) => (r.status.as_str().to_string(), r.residual, Some(r)),
                Err(Error::AmbiguousSolve { residual }) => ("ambiguous".to_string(), residual, None),
                Err(e) => return Err(e),
            };
            Ok(SweepRecord {
                size: n,
                draw,
                alphas,
                ts,
                status,
                residual,
                report,
            })
        })
        .collect::<Result<_>>()?;
    let id = |n: usize| Mat::identity(n);
    let small_solvable = records.iter().filter(|r| r.size == 2).all(|r| {
        r.report
            .as_ref()
            .is_some_and(|rep| rep.status == SolveStatus::AffineFamily && rep.nullspace_contains(&id(2), 1e-8))
    });
    let large_inconsistent = records
        .iter()
        .filter(|r| r.size > 2)
        .all(|r| r.status == "inconsistent");
    let any_ambiguous = records.iter().any(|r| r.status == "ambiguous");
    Ok(SweepSummary {
        records,
        small_solvable,
        large_inconsistent,
        any_ambiguous,
    })
}

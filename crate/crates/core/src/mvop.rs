//! Matrix inner products `<F, G> = int F W G^T` and monic orthogonal polynomials.

use serde::Serialize;

use crate::classical::{
    charlier_sum_rule, composite_legendre, gauss_rule, mapped_jacobi, BaseWeight, Quadrature, Support,
};
use crate::error::{Error, Result};
use crate::families::{weight_eval, FamilyInstance, FamilySpec};
use crate::matcore::{Mat, MatPoly};
use crate::rightops::{apply, RightOp};

/// Condition-number guard on the squared norms.
pub const COND_GUARD: f64 = 1e12;

const BAND_PANELS: usize = 8;
const BAND_POINTS: usize = 40;

/// Nodes with matrix weights `W_i`, so `<F, G> = sum F(x_i) W_i G(x_i)^T`.
#[derive(Debug, Clone)]
pub struct MatrixRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<Mat>,
}

impl MatrixRule {
    fn from_scalar(q: &Quadrature, family: &FamilyInstance, include_scalar_weight: bool) -> Self {
        let weights = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| {
                let s = if include_scalar_weight {
                    w * family.scalar_weight_at(*x)
                } else {
                    *w
                };
                family.q_poly.eval(*x).scale(s)
            })
            .collect();
        MatrixRule {
            nodes: q.nodes.clone(),
            weights,
        }
    }

    fn extend(&mut self, other: MatrixRule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }

    pub fn integrate(&self, f: &MatPoly, g: &MatPoly) -> Result<Mat> {
        if f.size() != g.size() {
            return Err(Error::Dimension(format!("sizes {} and {} differ", f.size(), g.size())));
        }
        let n = f.size();
        let mut acc = Mat::zeros(n, n);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += &(&(&f.eval(*x) * w) * &g.eval(*x).transpose());
        }
        Ok(acc)
    }
}

/// Inner product of a family, with its full-support rule cached.
#[derive(Debug, Clone)]
pub struct InnerProduct {
    family: FamilyInstance,
    full: MatrixRule,
    /// Rightmost point that matters for band truncation on unbounded supports.
    right_cutoff: f64,
    left_cutoff: f64,
    n_nodes: usize,
}

/// Default node count `max(40, n_max + 2N + 5)`.
pub fn default_nodes(n_max: usize, size: usize) -> usize {
    40.max(n_max + 2 * size + 5)
}

impl InnerProduct {
    /// `n_nodes` Gauss nodes; for Charlier the summation is truncated so that
    /// polynomial integrands up to degree `2 n_nodes - 1` are summed to `1e-16`.
    pub fn new(family: &FamilyInstance, n_nodes: usize) -> Result<Self> {
        let nu = family.nu();
        let q = match family.scalar_weight {
            BaseWeight::Poisson { a } => charlier_sum_rule(a, 1e-16, n_nodes)?,
            base => gauss_rule(base, n_nodes)?,
        };
        let full = MatrixRule::from_scalar(&q, family, false);
        let last = *q.nodes.last().expect("nonempty rule");
        let (left_cutoff, right_cutoff) = match family.support {
            Support::FullLine => (-last - 2.0, last + 2.0),
            Support::HalfLine => (0.0, last + 2.0 * (nu + 2.0)),
            Support::Interval => (-1.0, 1.0),
            Support::NonNegativeIntegers => (0.0, last),
        };
        Ok(InnerProduct {
            family: family.clone(),
            full,
            right_cutoff,
            left_cutoff,
            n_nodes,
        })
    }

    pub fn family(&self) -> &FamilyInstance {
        &self.family
    }

    pub fn full_rule(&self) -> &MatrixRule {
        &self.full
    }

    /// Rule for `int_{x < omega} F W G^T`.
    pub fn band_rule(&self, omega: f64) -> Result<MatrixRule> {
        let f = &self.family;
        let lower = f.support.lower_end();
        if let Some(lo) = lower {
            if omega <= lo {
                return Err(Error::EmptyBand { omega });
            }
        }
        if omega >= self.right_cutoff {
            return Ok(self.full.clone());
        }
        if f.support == Support::NonNegativeIntegers {
            let keep = self.full.nodes.iter().take_while(|x| **x < omega).count();
            return Ok(MatrixRule {
                nodes: self.full.nodes[..keep].to_vec(),
                weights: self.full.weights[..keep].to_vec(),
            });
        }
        let lo = self.left_cutoff;
        if omega <= lo {
            return Ok(MatrixRule {
                nodes: Vec::new(),
                weights: Vec::new(),
            });
        }
        let h = (omega - lo) / BAND_PANELS as f64;
        let mut rule = MatrixRule {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        // the first panel carries any endpoint power exactly
        let first = match f.scalar_weight {
            BaseWeight::GenLaguerre { exponent } => {
                let q = mapped_jacobi(0.0, exponent, lo, lo + h, BAND_POINTS)?;
                Some(self.scaled(&q, |x| (-x).exp()))
            }
            BaseWeight::Jacobi { alpha, beta } => {
                let q = mapped_jacobi(0.0, beta, lo, lo + h, BAND_POINTS)?;
                Some(self.scaled(&q, |x| (1.0 - x).powf(alpha)))
            }
            _ => None,
        };
        let start = match first {
            Some(r) => {
                rule.extend(r);
                1
            }
            None => 0,
        };
        if start < BAND_PANELS {
            let q = composite_legendre(lo + h * start as f64, omega, BAND_PANELS - start, BAND_POINTS)?;
            rule.extend(MatrixRule::from_scalar(&q, f, true));
        }
        Ok(rule)
    }

    fn scaled(&self, q: &Quadrature, smooth: impl Fn(f64) -> f64) -> MatrixRule {
        let weights = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| self.family.q_poly.eval(*x).scale(w * smooth(*x)))
            .collect();
        MatrixRule {
            nodes: q.nodes.clone(),
            weights,
        }
    }

    /// `<F, G>`, restricted to `x < omega` when a band is given.
    pub fn inner(&self, f: &MatPoly, g: &MatPoly, band: Option<f64>) -> Result<Mat> {
        match band {
            None => self.full.integrate(f, g),
            Some(omega) => self.band_rule(omega)?.integrate(f, g),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }
}

/// One-shot inner product with the default rule.
pub fn inner(f: &FamilyInstance, a: &MatPoly, b: &MatPoly, band: Option<f64>) -> Result<Mat> {
    let deg = |p: &MatPoly| p.degree().finite().unwrap_or(0);
    let ip = InnerProduct::new(f, default_nodes(deg(a).max(deg(b)), f.size()))?;
    ip.inner(a, b, band)
}

/// Monic `P_0..P_n_max` and squared norms `H_n`.
#[derive(Debug, Clone, Serialize)]
pub struct MvopSeq {
    pub family: FamilySpec,
    pub n_max: usize,
    pub p: Vec<MatPoly>,
    pub h: Vec<Mat>,
    #[serde(skip)]
    ip: Option<InnerProduct>,
}

impl MvopSeq {
    pub fn inner_product(&self) -> &InnerProduct {
        self.ip.as_ref().expect("sequence built with an inner product")
    }

    pub fn h_inv(&self, n: usize) -> Result<Mat> {
        self.h[n].inverse()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("sequence serializes")
    }
}

/// Gram–Schmidt on `x P_(n-1)` against all earlier `P_k`, with one
/// re-orthogonalization sweep.
pub fn generate_mvop(f: &FamilyInstance, n_max: usize) -> Result<MvopSeq> {
    let ip = InnerProduct::new(f, default_nodes(n_max, f.size()))?;
    generate_with(ip, n_max)
}

pub fn generate_with(ip: InnerProduct, n_max: usize) -> Result<MvopSeq> {
    let n = ip.family().size();
    let mut p = vec![MatPoly::identity(n)];
    let mut h = vec![];
    let mut h_inv = vec![];
    let push_norm = |pn: &MatPoly, h: &mut Vec<Mat>, h_inv: &mut Vec<Mat>, k: usize| -> Result<()> {
        let hn = ip.inner(pn, pn, None)?;
        let hn = (&hn + &hn.transpose()).scale(0.5);
        let cond = hn.condition_number();
        if !(cond < COND_GUARD) {
            return Err(Error::IllConditioned { n: k, cond });
        }
        h_inv.push(hn.inverse()?);
        h.push(hn);
        Ok(())
    };
    push_norm(&p[0], &mut h, &mut h_inv, 0)?;
    for k in 1..=n_max {
        let mut next = p[k - 1].mul_xk(1);
        for _sweep in 0..2 {
            for j in 0..k {
                let c = &ip.inner(&next, &p[j], None)? * &h_inv[j];
                next = &next - &p[j].left_mul(&c);
            }
        }
        // keep the leading coefficient exactly I
        let mut coeffs = next.coeffs().to_vec();
        coeffs.truncate(k);
        coeffs.push(Mat::identity(n));
        let next = MatPoly::from_coeffs(n, coeffs);
        push_norm(&next, &mut h, &mut h_inv, k)?;
        p.push(next);
    }
    Ok(MvopSeq {
        family: ip.family().spec.clone(),
        n_max,
        p,
        h,
        ip: Some(ip),
    })
}

/// `sum_{n <= M} <F, P_n> H_n^{-1} P_n`.
pub fn time_limit(seq: &MvopSeq, f: &MatPoly, m: usize) -> Result<MatPoly> {
    if m > seq.n_max {
        return Err(Error::OutOfRange {
            requested: m,
            available: seq.n_max,
        });
    }
    let mut out = MatPoly::zero(f.size());
    for n in 0..=m {
        let c = &seq.inner_product().inner(f, &seq.p[n], None)? * &seq.h_inv(n)?;
        out = &out + &seq.p[n].left_mul(&c);
    }
    Ok(out)
}

/// Blocks `B[m][n] = <P_m . op, P_n> H_n^{-1}` for `m, n <= n_cap`.
pub fn basis_matrix_of(seq: &MvopSeq, op: &RightOp, n_cap: usize) -> Result<Vec<Vec<Mat>>> {
    if n_cap + 1 > seq.n_max {
        return Err(Error::OutOfRange {
            requested: n_cap + 1,
            available: seq.n_max,
        });
    }
    let ip = seq.inner_product();
    let mut rows = Vec::with_capacity(n_cap + 1);
    for m in 0..=n_cap {
        let pm_op = apply(op, &seq.p[m])?;
        let mut row = Vec::with_capacity(n_cap + 1);
        for n in 0..=n_cap {
            row.push(&ip.inner(&pm_op, &seq.p[n], None)? * &seq.h_inv(n)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `<a, b>` by brute force, independent of the Gauss rules: trapezoid on
/// `[-12, 12]` for the line, on `x = u^2` for the half line and on
/// `x = tanh(pi/2 sinh t)` for the interval (both tame the endpoint
/// powers), and a plain sum over `0..=200` on the integers.
pub fn brute_force_inner(f: &FamilyInstance, a: &MatPoly, b: &MatPoly, steps: usize) -> Result<Mat> {
    let n = f.size();
    let term = |x: f64, jac: f64| -> Result<Mat> {
        let w = weight_eval(f, x)?;
        Ok((&(&a.eval(x) * &w) * &b.eval(x).transpose()).scale(jac))
    };
    let trapezoid = |lo: f64, hi: f64, map: &dyn Fn(f64) -> (f64, f64)| -> Result<Mat> {
        let h = (hi - lo) / steps as f64;
        let mut acc = Mat::zeros(n, n);
        for k in 0..=steps {
            let (x, jac) = map(lo + h * k as f64);
            let edge = if k == 0 || k == steps { 0.5 } else { 1.0 };
            if jac != 0.0 {
                acc = &acc + &term(x, jac * edge * h)?;
            }
        }
        Ok(acc)
    };
    match f.support {
        Support::FullLine => trapezoid(-12.0, 12.0, &|x| (x, 1.0)),
        Support::HalfLine => trapezoid(0.0, 12.0, &|u| (u * u, 2.0 * u)),
        Support::Interval => trapezoid(-4.0, 4.0, &|t| {
            let s = std::f64::consts::FRAC_PI_2 * t.sinh();
            (s.tanh(), std::f64::consts::FRAC_PI_2 * t.cosh() / s.cosh().powi(2))
        }),
        Support::NonNegativeIntegers => {
            let mut acc = Mat::zeros(n, n);
            for x in 0..=200 {
                acc = &acc + &term(x as f64, 1.0)?;
            }
            Ok(acc)
        }
    }
}

/// Off-diagonal Gram blocks under two normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orthogonality {
    /// `max_{m != n} |<P_m, P_n>| / sqrt(|H_m| |H_n|)`.
    pub symmetric: f64,
    /// `max_{m != n} |<P_m, P_n>| / |H_n|`; dominated by rounding when the
    /// norms span many decades.
    pub one_sided: f64,
    pub worst_pair: (usize, usize),
}

pub fn orthogonality_residual(seq: &MvopSeq) -> Result<Orthogonality> {
    let ip = seq.inner_product();
    let mut out = Orthogonality {
        symmetric: 0.0,
        one_sided: 0.0,
        worst_pair: (0, 0),
    };
    for m in 0..=seq.n_max {
        for n in 0..=seq.n_max {
            if m != n {
                let g = ip.inner(&seq.p[m], &seq.p[n], None)?.max_abs();
                let sym = g / (seq.h[m].max_abs() * seq.h[n].max_abs()).sqrt();
                if sym > out.symmetric {
                    out.symmetric = sym;
                    out.worst_pair = (m, n);
                }
                out.one_sided = out.one_sided.max(g / seq.h[n].max_abs());
            }
        }
    }
    Ok(out)
}

/// `max_n |P_n . D - Lambda_n P_n| / |P_n|` (coefficientwise).
pub fn eigen_identity_residual(seq: &MvopSeq, d: &RightOp, lambdas: &[Mat]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (pn, lam) in seq.p.iter().zip(lambdas) {
        let r = &apply(d, pn)? - &pn.left_mul(lam);
        worst = worst.max(r.max_coeff_norm() / (pn.max_coeff_norm() * lam.max_abs().max(1.0)));
    }
    Ok(worst)
}

//! Scalar classical orthogonal polynomials as coefficient vectors.
//!
//! Conventions: physicists' Hermite (`H_1 = 2x`), standard Laguerre
//! `L_n^(a)` with leading coefficient `(-1)^n / n!`, standard Gegenbauer
//! `C_n^(nu)`, and Charlier `c_n^(a)(x) = 2F0(-n, -x; ; -1/a)`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPoly {
    coeffs: Vec<f64>,
}

impl ScalarPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        ScalarPoly { coeffs }
    }

    pub fn zero() -> Self {
        ScalarPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        ScalarPoly::new(vec![1.0])
    }

    /// `c0 + c1 x`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        ScalarPoly::new(vec![c0, c1])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn scale(&self, s: f64) -> Self {
        ScalarPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul_x(&self) -> Self {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let mut c = vec![0.0];
        c.extend_from_slice(&self.coeffs);
        ScalarPoly::new(c)
    }

    pub fn derivative(&self) -> Self {
        ScalarPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, c)| c * p as f64)
                .collect(),
        )
    }

    pub fn powi(&self, k: u32) -> Self {
        (0..k).fold(ScalarPoly::one(), |acc, _| &acc * self)
    }
}

impl Add for &ScalarPoly {
    type Output = ScalarPoly;
    fn add(self, rhs: &ScalarPoly) -> ScalarPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ScalarPoly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl Sub for &ScalarPoly {
    type Output = ScalarPoly;
    fn sub(self, rhs: &ScalarPoly) -> ScalarPoly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &ScalarPoly {
    type Output = ScalarPoly;
    fn mul(self, rhs: &ScalarPoly) -> ScalarPoly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return ScalarPoly::zero();
        }
        let mut c = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        ScalarPoly::new(c)
    }
}

/// Runs a three-term recurrence `p_{k+1} = (alpha_k + beta_k x) p_k - gamma_k p_{k-1}`.
fn three_term(n: usize, p1: ScalarPoly, step: impl Fn(usize) -> (f64, f64, f64)) -> ScalarPoly {
    if n == 0 {
        return ScalarPoly::one();
    }
    let mut prev = ScalarPoly::one();
    let mut cur = p1;
    for k in 1..n {
        let (alpha, beta, gamma) = step(k);
        let next = &(&cur.scale(alpha) + &cur.mul_x().scale(beta)) - &prev.scale(gamma);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn hermite(n: usize) -> ScalarPoly {
    three_term(n, ScalarPoly::linear(0.0, 2.0), |k| (0.0, 2.0, 2.0 * k as f64))
}

pub fn laguerre(n: usize, a: f64) -> Result<ScalarPoly> {
    if !(a > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Laguerre parameter must exceed -1, got {a}"
        )));
    }
    Ok(three_term(n, ScalarPoly::linear(1.0 + a, -1.0), |k| {
        let k1 = (k + 1) as f64;
        (((2 * k + 1) as f64 + a) / k1, -1.0 / k1, (k as f64 + a) / k1)
    }))
}

pub fn gegenbauer(n: usize, nu: f64) -> Result<ScalarPoly> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gegenbauer parameter must be positive, got {nu}"
        )));
    }
    Ok(three_term(n, ScalarPoly::linear(0.0, 2.0 * nu), |k| {
        let k1 = (k + 1) as f64;
        (0.0, 2.0 * (k as f64 + nu) / k1, (k as f64 + 2.0 * nu - 1.0) / k1)
    }))
}

pub fn charlier(n: usize, a: f64) -> Result<ScalarPoly> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Charlier parameter must be positive, got {a}"
        )));
    }
    // a c_{k+1} = (k + a - x) c_k - k c_{k-1}
    Ok(three_term(n, ScalarPoly::linear(1.0, -1.0 / a), |k| {
        ((k as f64 + a) / a, -1.0 / a, k as f64 / a)
    }))
}

//! Polynomials in one real variable with square matrix coefficients.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::mat::Mat;
use crate::error::{Error, Result};

/// Degree of a polynomial. The zero polynomial has degree `NegInfinity`,
/// which compares below every finite degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(usize),
}

impl Degree {
    pub fn finite(self) -> Option<usize> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

impl PartialOrd for Degree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Degree {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Degree::NegInfinity, Degree::NegInfinity) => Ordering::Equal,
            (Degree::NegInfinity, _) => Ordering::Less,
            (_, Degree::NegInfinity) => Ordering::Greater,
            (Degree::Finite(a), Degree::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => write!(f, "-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

/// `coeffs[p]` is the coefficient of `x^p`. Trailing exact zeros are
/// always trimmed, so the zero polynomial has no coefficients.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct MatPoly {
    size: usize,
    coeffs: Vec<Mat>,
}

impl MatPoly {
    pub fn zero(size: usize) -> Self {
        MatPoly {
            size,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(m: Mat) -> Self {
        assert!(m.is_square(), "matrix polynomial coefficients must be square");
        MatPoly::from_coeffs(m.rows(), vec![m])
    }

    pub fn identity(size: usize) -> Self {
        MatPoly::constant(Mat::identity(size))
    }

    /// `m * x^k`.
    pub fn monomial(m: Mat, k: usize) -> Self {
        let size = m.rows();
        let mut coeffs = vec![Mat::zeros(size, size); k];
        coeffs.push(m);
        MatPoly::from_coeffs(size, coeffs)
    }

    /// `x * a + b`.
    pub fn linear(a: Mat, b: Mat) -> Self {
        MatPoly::from_coeffs(a.rows(), vec![b, a])
    }

    pub fn from_coeffs(size: usize, coeffs: Vec<Mat>) -> Self {
        assert!(
            coeffs.iter().all(|c| c.rows() == size && c.cols() == size),
            "coefficient shape does not match polynomial size {size}"
        );
        let mut p = MatPoly { size, coeffs };
        p.trim();
        p
    }

    /// Builds a polynomial entrywise from scalar coefficient lists.
    pub fn from_entries(size: usize, mut entry: impl FnMut(usize, usize) -> Vec<f64>) -> Self {
        let mut coeffs: Vec<Mat> = Vec::new();
        for i in 0..size {
            for j in 0..size {
                for (p, c) in entry(i, j).into_iter().enumerate() {
                    while coeffs.len() <= p {
                        coeffs.push(Mat::zeros(size, size));
                    }
                    coeffs[p][(i, j)] = c;
                }
            }
        }
        MatPoly::from_coeffs(size, coeffs)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    /// Coefficient of `x^p`, zero past the degree.
    pub fn coeff(&self, p: usize) -> Mat {
        self.coeffs
            .get(p)
            .cloned()
            .unwrap_or_else(|| Mat::zeros(self.size, self.size))
    }

    pub fn degree(&self) -> Degree {
        match self.coeffs.len() {
            0 => Degree::NegInfinity,
            n => Degree::Finite(n - 1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> Mat {
        let mut acc = Mat::zeros(self.size, self.size);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(x);
            acc += c;
        }
        acc
    }

    /// Entry `(i, j)` as a scalar coefficient list.
    pub fn entry(&self, i: usize, j: usize) -> Vec<f64> {
        self.coeffs.iter().map(|c| c[(i, j)]).collect()
    }

    pub fn try_add(&self, other: &MatPoly) -> Result<MatPoly> {
        self.check_size(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|p| match (self.coeffs.get(p), other.coeffs.get(p)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        Ok(MatPoly::from_coeffs(self.size, coeffs))
    }

    pub fn try_sub(&self, other: &MatPoly) -> Result<MatPoly> {
        self.try_add(&other.scale(-1.0))
    }

    pub fn try_mul(&self, other: &MatPoly) -> Result<MatPoly> {
        self.check_size(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(MatPoly::zero(self.size));
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![Mat::zeros(self.size, self.size); n];
        for (p, a) in self.coeffs.iter().enumerate() {
            for (q, b) in other.coeffs.iter().enumerate() {
                coeffs[p + q] += &(a * b);
            }
        }
        Ok(MatPoly::from_coeffs(self.size, coeffs))
    }

    pub fn scale(&self, s: f64) -> MatPoly {
        MatPoly::from_coeffs(self.size, self.coeffs.iter().map(|c| c.scale(s)).collect())
    }

    /// `x^k * self`.
    pub fn mul_xk(&self, k: usize) -> MatPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![Mat::zeros(self.size, self.size); k];
        coeffs.extend(self.coeffs.iter().cloned());
        MatPoly::from_coeffs(self.size, coeffs)
    }

    /// `m * self(x)`.
    pub fn left_mul(&self, m: &Mat) -> MatPoly {
        MatPoly::from_coeffs(self.size, self.coeffs.iter().map(|c| m * c).collect())
    }

    /// `self(x) * m`.
    pub fn right_mul(&self, m: &Mat) -> MatPoly {
        MatPoly::from_coeffs(self.size, self.coeffs.iter().map(|c| c * m).collect())
    }

    /// Coefficientwise transpose.
    pub fn adjoint(&self) -> MatPoly {
        MatPoly::from_coeffs(self.size, self.coeffs.iter().map(Mat::transpose).collect())
    }

    pub fn derivative(&self) -> MatPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(p, c)| c.scale(p as f64))
            .collect();
        MatPoly::from_coeffs(self.size, coeffs)
    }

    /// `r(x) = self(x + h)`, re-expanded with binomial coefficients.
    pub fn shift(&self, h: f64) -> MatPoly {
        if h == 0.0 || self.is_zero() {
            return self.clone();
        }
        let n = self.coeffs.len();
        let mut coeffs = vec![Mat::zeros(self.size, self.size); n];
        for (p, c) in self.coeffs.iter().enumerate() {
            // (x + h)^p = sum_k C(p, k) h^(p-k) x^k
            let mut binom = 1.0;
            for (k, slot) in coeffs.iter_mut().enumerate().take(p + 1) {
                if k > 0 {
                    binom = binom * (p + 1 - k) as f64 / k as f64;
                }
                *slot += &c.scale(binom * h.powi((p - k) as i32));
            }
        }
        MatPoly::from_coeffs(self.size, coeffs)
    }

    /// Largest absolute entry over all coefficients; 0 for the zero polynomial.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    fn check_size(&self, other: &MatPoly) -> Result<()> {
        if self.size != other.size {
            return Err(Error::Dimension(format!(
                "matrix polynomial sizes {} and {} differ",
                self.size, other.size
            )));
        }
        Ok(())
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.max_abs() == 0.0) {
            self.coeffs.pop();
        }
    }
}

impl Add for &MatPoly {
    type Output = MatPoly;
    fn add(self, rhs: &MatPoly) -> MatPoly {
        self.try_add(rhs).expect("matrix polynomial add")
    }
}

impl Sub for &MatPoly {
    type Output = MatPoly;
    fn sub(self, rhs: &MatPoly) -> MatPoly {
        self.try_sub(rhs).expect("matrix polynomial subtract")
    }
}

impl Mul for &MatPoly {
    type Output = MatPoly;
    fn mul(self, rhs: &MatPoly) -> MatPoly {
        self.try_mul(rhs).expect("matrix polynomial multiply")
    }
}

impl Neg for &MatPoly {
    type Output = MatPoly;
    fn neg(self) -> MatPoly {
        self.scale(-1.0)
    }
}

impl fmt::Debug for MatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatPoly size {} degree {} {{", self.size, self.degree())?;
        for (p, c) in self.coeffs.iter().enumerate() {
            writeln!(f, "x^{p}: {c:?}")?;
        }
        write!(f, "}}")
    }
}

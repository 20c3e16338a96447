//! Gauss rules (Golub–Welsch) and discrete summation rules for the four
//! classical supports.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    FullLine,
    HalfLine,
    /// The open interval (-1, 1).
    Interval,
    NonNegativeIntegers,
}

impl Support {
    pub fn describe(self) -> &'static str {
        match self {
            Support::FullLine => "real line",
            Support::HalfLine => "half line [0, inf)",
            Support::Interval => "interval (-1, 1)",
            Support::NonNegativeIntegers => "nonnegative integers",
        }
    }

    pub fn lower_end(self) -> Option<f64> {
        match self {
            Support::FullLine => None,
            Support::HalfLine | Support::NonNegativeIntegers => Some(0.0),
            Support::Interval => Some(-1.0),
        }
    }
}

/// Scalar weight a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseWeight {
    /// `exp(-x^2)` on the real line.
    Gaussian,
    /// `x^exponent exp(-x)` on `[0, inf)`.
    GenLaguerre { exponent: f64 },
    /// `(1 - x)^alpha (1 + x)^beta` on `(-1, 1)`.
    Jacobi { alpha: f64, beta: f64 },
    /// `a^x / x!` on the nonnegative integers.
    Poisson { a: f64 },
}

impl BaseWeight {
    pub fn support(&self) -> Support {
        match self {
            BaseWeight::Gaussian => Support::FullLine,
            BaseWeight::GenLaguerre { .. } => Support::HalfLine,
            BaseWeight::Jacobi { .. } => Support::Interval,
            BaseWeight::Poisson { .. } => Support::NonNegativeIntegers,
        }
    }

    /// Value of the weight at `x` (zero outside the support).
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BaseWeight::Gaussian => (-x * x).exp(),
            BaseWeight::GenLaguerre { exponent } => {
                if x < 0.0 {
                    0.0
                } else {
                    x.powf(exponent) * (-x).exp()
                }
            }
            BaseWeight::Jacobi { alpha, beta } => {
                if x.abs() > 1.0 {
                    0.0
                } else {
                    (1.0 - x).powf(alpha) * (1.0 + x).powf(beta)
                }
            }
            BaseWeight::Poisson { a } => {
                if x < 0.0 || x.fract() != 0.0 {
                    0.0
                } else {
                    (x * a.ln() - ln_gamma(x + 1.0)).exp()
                }
            }
        }
    }

    /// Derivative of the weight at an interior point.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            BaseWeight::Gaussian => -2.0 * x * (-x * x).exp(),
            BaseWeight::GenLaguerre { exponent } => (exponent * x.powf(exponent - 1.0) - x.powf(exponent)) * (-x).exp(),
            BaseWeight::Jacobi { alpha, beta } => {
                let w = self.eval(x);
                w * (beta / (1.0 + x) - alpha / (1.0 - x))
            }
            BaseWeight::Poisson { .. } => f64::NAN,
        }
    }
}

/// Nodes and positive weights with `sum w_i f(x_i) ~ integral f w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub support: Support,
    pub base: BaseWeight,
    /// Highest polynomial degree the rule integrates exactly (up to rounding).
    pub exactness: usize,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Monic recurrence coefficients `(a_k, b_k^2)` for `k < n`, and the total mass.
fn recurrence(base: BaseWeight, n: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut diag = Vec::with_capacity(n);
    let mut off2 = Vec::with_capacity(n);
    let mass;
    match base {
        BaseWeight::Gaussian => {
            mass = std::f64::consts::PI.sqrt();
            for k in 0..n {
                diag.push(0.0);
                off2.push(k as f64 / 2.0);
            }
        }
        BaseWeight::GenLaguerre { exponent: a } => {
            if !(a > -1.0) {
                return Err(Error::InvalidParameter(format!("Laguerre exponent {a} must exceed -1")));
            }
            mass = gamma(a + 1.0);
            for k in 0..n {
                let k = k as f64;
                diag.push(2.0 * k + a + 1.0);
                off2.push(k * (k + a));
            }
        }
        BaseWeight::Jacobi { alpha: a, beta: b } => {
            if !(a > -1.0 && b > -1.0) {
                return Err(Error::InvalidParameter(format!(
                    "Jacobi exponents ({a}, {b}) must exceed -1"
                )));
            }
            mass = 2f64.powf(a + b + 1.0) * (ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp();
            for k in 0..n {
                let kf = k as f64;
                let s = 2.0 * kf + a + b;
                let d = if k == 0 {
                    (b - a) / (a + b + 2.0)
                } else {
                    (b * b - a * a) / (s * (s + 2.0))
                };
                diag.push(d);
                let o = match k {
                    0 => 0.0,
                    1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b)),
                    _ => 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0)),
                };
                off2.push(o);
            }
        }
        BaseWeight::Poisson { .. } => {
            return Err(Error::InvalidParameter(
                "use charlier_sum_rule for the Poisson weight".into(),
            ))
        }
    }
    Ok((diag, off2, mass))
}

/// Golub–Welsch rule with `n_nodes` nodes for `base`.
pub fn gauss_rule(base: BaseWeight, n_nodes: usize) -> Result<Quadrature> {
    if n_nodes == 0 {
        return Err(Error::InvalidParameter("a Gauss rule needs at least one node".into()));
    }
    let (mut d, off2, mass) = recurrence(base, n_nodes)?;
    // e[i] couples nodes i and i+1
    let mut e: Vec<f64> = (0..n_nodes)
        .map(|i| if i + 1 < n_nodes { off2[i + 1].sqrt() } else { 0.0 })
        .collect();
    let mut z = vec![0.0; n_nodes];
    z[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, &mut z)?;
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z).map(|(x, v)| (x, mass * v * v)).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(Quadrature {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        support: base.support(),
        base,
        exactness: 2 * n_nodes - 1,
    })
}

/// Gauss–Jacobi rule carried to `[lo, hi]`, integrating against
/// `(x - lo)^beta (hi - x)^alpha`.
pub fn mapped_jacobi(alpha: f64, beta: f64, lo: f64, hi: f64, n_nodes: usize) -> Result<Quadrature> {
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let mut q = gauss_rule(BaseWeight::Jacobi { alpha, beta }, n_nodes)?;
    let half = (hi - lo) / 2.0;
    let jac = half.powf(alpha + beta + 1.0);
    for x in &mut q.nodes {
        *x = lo + half * (1.0 + *x);
    }
    for w in &mut q.weights {
        *w *= jac;
    }
    Ok(q)
}

/// Composite Gauss–Legendre rule on `[lo, hi]` (unit weight).
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, per_panel: usize) -> Result<Quadrature> {
    let base = gauss_rule(BaseWeight::Jacobi { alpha: 0.0, beta: 0.0 }, per_panel)?;
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let a = lo + h * p as f64;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(a + h * (1.0 + x) / 2.0);
            weights.push(w * h / 2.0);
        }
    }
    Ok(Quadrature {
        nodes,
        weights,
        support: Support::FullLine,
        base: BaseWeight::Jacobi { alpha: 0.0, beta: 0.0 },
        exactness: base.exactness,
    })
}

/// Truncated summation over `0..=X` with weights `a^x / x!`.
///
/// `X` is the first point past the peak where the neglected tail of
/// `sum a^x x^(2 degree_cap) / x!` is below `tail_tol * e^a`.
pub fn charlier_sum_rule(a: f64, tail_tol: f64, degree_cap: usize) -> Result<Quadrature> {
    if !(a > 0.0 && tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need a > 0 and tail_tol > 0, got {a}, {tail_tol}"
        )));
    }
    let log_term = |x: usize| -> f64 {
        let xf = x as f64;
        let pow = if degree_cap == 0 || x == 0 {
            0.0
        } else {
            2.0 * degree_cap as f64 * xf.ln()
        };
        xf * a.ln() + pow - ln_gamma(xf + 1.0)
    };
    let log_budget = tail_tol.ln() + a;
    let mut x_max = 0usize;
    loop {
        let next = x_max + 1;
        let ratio = (log_term(next + 1) - log_term(next)).exp();
        // geometric bound on the tail starting at `next`
        if ratio < 0.5 && log_term(next) + (1.0 / (1.0 - ratio)).ln() < log_budget {
            break;
        }
        x_max = next;
    }
    let mut weights = Vec::with_capacity(x_max + 1);
    let mut w = 1.0;
    for x in 0..=x_max {
        if x > 0 {
            w *= a / x as f64;
        }
        weights.push(w);
    }
    Ok(Quadrature {
        nodes: (0..=x_max).map(|x| x as f64).collect(),
        weights,
        support: Support::NonNegativeIntegers,
        base: BaseWeight::Poisson { a },
        exactness: 2 * degree_cap,
    })
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
///
/// On return `d` holds eigenvalues and `z` the first components of the
/// corresponding normalized eigenvectors (pass `z = e_1`).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    let cap = 30 * n.max(1);
    let mut iterations = 0;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > cap {
                return Err(Error::NoConvergence(cap));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::scalar;

    /// Closed-form moments used as the oracle.
    fn moment(base: BaseWeight, p: usize) -> f64 {
        match base {
            BaseWeight::Gaussian => {
                if p % 2 == 1 {
                    0.0
                } else {
                    gamma((p as f64 + 1.0) / 2.0)
                }
            }
            BaseWeight::GenLaguerre { exponent } => gamma(exponent + p as f64 + 1.0),
            BaseWeight::Jacobi { alpha, beta } if alpha == beta => {
                if p % 2 == 1 {
                    0.0
                } else {
                    let m = (p / 2) as f64;
                    (ln_gamma(m + 0.5) + ln_gamma(alpha + 1.0) - ln_gamma(m + alpha + 1.5)).exp()
                }
            }
            _ => unimplemented!(),
        }
    }

    #[test]
    fn one_node_gauss_hermite() {
        let q = gauss_rule(BaseWeight::Gaussian, 1).unwrap();
        assert_eq!(q.nodes, vec![0.0]);
        assert!((q.weights[0] - std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hermite_total_mass() {
        for n in [2, 5, 17, 40, 80] {
            let q = gauss_rule(BaseWeight::Gaussian, n).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-13, "n={n}");
            assert!(q.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn generalized_laguerre_total_mass() {
        for exponent in [0.0, 0.5, 1.5, 3.0] {
            let q = gauss_rule(BaseWeight::GenLaguerre { exponent }, 40).unwrap();
            let s: f64 = q.weights.iter().sum();
            let expect = ln_gamma(exponent + 1.0).exp();
            assert!((s - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn monomial_moments_up_to_exactness() {
        let bases = [
            BaseWeight::Gaussian,
            BaseWeight::GenLaguerre { exponent: 1.5 },
            BaseWeight::GenLaguerre { exponent: 3.0 },
            BaseWeight::Jacobi { alpha: 0.0, beta: 0.0 },
            BaseWeight::Jacobi { alpha: 0.5, beta: 0.5 },
            BaseWeight::Jacobi { alpha: 1.5, beta: 1.5 },
        ];
        for base in bases {
            for n in [3, 8, 12] {
                let q = gauss_rule(base, n).unwrap();
                for p in 0..=2 * n - 1 {
                    let got = q.integrate(|x| x.powi(p as i32));
                    let expect = moment(base, p);
                    let scale = expect.abs().max(moment(base, p - p % 2));
                    assert!(
                        (got - expect).abs() < 1e-11 * scale,
                        "{base:?} n={n} p={p}: {got} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn scalar_families_orthogonal_under_their_rules() {
        let h = gauss_rule(BaseWeight::Gaussian, 20).unwrap();
        let l = gauss_rule(BaseWeight::GenLaguerre { exponent: 1.5 }, 20).unwrap();
        let g = gauss_rule(BaseWeight::Jacobi { alpha: 0.5, beta: 0.5 }, 20).unwrap();
        let c = charlier_sum_rule(1.5, 1e-16, 20).unwrap();
        let fams: Vec<(Box<dyn Fn(usize) -> scalar::ScalarPoly>, &Quadrature)> = vec![
            (Box::new(scalar::hermite), &h),
            (Box::new(|n| scalar::laguerre(n, 1.5).unwrap()), &l),
            (Box::new(|n| scalar::gegenbauer(n, 1.0).unwrap()), &g),
            (Box::new(|n| scalar::charlier(n, 1.5).unwrap()), &c),
        ];
        for (fam, q) in fams {
            for m in 0..=10 {
                for n in 0..=10 {
                    let (pm, pn) = (fam(m), fam(n));
                    let ip = q.integrate(|x| pm.eval(x) * pn.eval(x));
                    if m != n {
                        let scale = (q.integrate(|x| pn.eval(x).powi(2)) * q.integrate(|x| pm.eval(x).powi(2))).sqrt();
                        assert!(ip.abs() < 1e-10 * scale, "m={m} n={n}: {ip} vs {scale}");
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_log_derivative() {
        for x in [-2.3, -0.4, 0.0, 0.9, 1.7] {
            let w = BaseWeight::Gaussian;
            assert!((w.derivative(x) / w.eval(x) + 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn charlier_rule_moments() {
        for a in [0.5, 1.0, 3.0] {
            let q = charlier_sum_rule(a, 1e-16, 10).unwrap();
            let mass: f64 = q.weights.iter().sum();
            let first = q.integrate(|x| x);
            assert!((mass - a.exp()).abs() < 1e-15 * a.exp() * 4.0);
            assert!((first - a * a.exp()).abs() < 1e-15 * a.exp() * 8.0);
        }
    }

    #[test]
    fn charlier_rule_tail_is_below_tolerance() {
        let (a, tol, cap) = (1.0, 1e-16, 10);
        let q = charlier_sum_rule(a, tol, cap).unwrap();
        let x_max = *q.nodes.last().unwrap() as usize;
        assert!(x_max >= 20);
        // direct tail summation with an explicit term recurrence
        let mut tail = 0.0;
        let mut log_w = (1..=x_max).map(|k| (a / k as f64).ln()).sum::<f64>();
        for x in x_max + 1..x_max + 400 {
            log_w += (a / x as f64).ln();
            tail += (log_w + 2.0 * cap as f64 * (x as f64).ln()).exp();
        }
        assert!(tail < tol * a.exp(), "tail {tail}");
    }

    #[test]
    fn mapped_jacobi_matches_closed_form() {
        // integral_0^2 x^1.5 dx = 2^2.5 / 2.5
        let q = mapped_jacobi(0.0, 1.5, 0.0, 2.0, 6).unwrap();
        let got = q.integrate(|_| 1.0);
        assert!((got - 2f64.powf(2.5) / 2.5).abs() < 1e-13);
        let pl = composite_legendre(-1.0, 3.0, 8, 10).unwrap();
        assert!((pl.integrate(|x| x * x) - 28.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bad_parameters() {
        assert!(gauss_rule(BaseWeight::Gaussian, 0).is_err());
        assert!(gauss_rule(BaseWeight::GenLaguerre { exponent: -1.5 }, 4).is_err());
        assert!(gauss_rule(BaseWeight::Poisson { a: 1.0 }, 4).is_err());
        assert!(charlier_sum_rule(-1.0, 1e-16, 4).is_err());
    }
}

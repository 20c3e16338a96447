//! Matrix weight families `W(x) = L(x) T(x) L(x)^T` and their Pearson data.
//!
//! Every weight factors as a common scalar weight `w(x)` times a matrix
//! polynomial `Q(x) = L(x) diag(t_j p_j(x)) L(x)^T` of degree `2N - 2`:
//!
//! | kind         | `w(x)`               | `p_j(x)`        | support |
//! |--------------|----------------------|-----------------|---------|
//! | hermite      | `exp(-x^2)`          | `1`             | real line |
//! | laguerre     | `x^(nu+1) exp(-x)`   | `x^(j-1)`       | `[0, inf)` |
//! | gegenbauer   | `(1-x^2)^(nu-1/2)`   | `(1-x^2)^k`     | `(-1, 1)` |
//! | charlier     | `a^x / x!`           | `1`             | `0, 1, 2, ...` |
//! | hermite_free | `exp(-x^2)`          | `1`             | real line |
//!
//! For Charlier `L(x) = (I + A)^(x + nu)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::classical::{self, BaseWeight, ScalarPoly, Support};
use crate::error::{Error, Result};
use crate::matcore::{Mat, MatPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Hermite,
    Laguerre,
    Gegenbauer,
    Charlier,
    HermiteFree,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::Hermite,
        FamilyKind::Laguerre,
        FamilyKind::Gegenbauer,
        FamilyKind::Charlier,
        FamilyKind::HermiteFree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Hermite => "hermite",
            FamilyKind::Laguerre => "laguerre",
            FamilyKind::Gegenbauer => "gegenbauer",
            FamilyKind::Charlier => "charlier",
            FamilyKind::HermiteFree => "hermite_free",
        }
    }

    pub fn has_pearson(self) -> bool {
        self != FamilyKind::HermiteFree
    }

    pub fn is_discrete(self) -> bool {
        self == FamilyKind::Charlier
    }

    /// Parameter sets accepted by `FamilySpec::set`.
    pub fn parameter_sets(self) -> &'static [u8] {
        match self {
            FamilyKind::Hermite | FamilyKind::Laguerre => &[1, 2, 3],
            _ => &[1],
        }
    }

    pub fn support(self) -> Support {
        match self {
            FamilyKind::Hermite | FamilyKind::HermiteFree => Support::FullLine,
            FamilyKind::Laguerre => Support::HalfLine,
            FamilyKind::Gegenbauer => Support::Interval,
            FamilyKind::Charlier => Support::NonNegativeIntegers,
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hermite" => Ok(FamilyKind::Hermite),
            "laguerre" => Ok(FamilyKind::Laguerre),
            "gegenbauer" => Ok(FamilyKind::Gegenbauer),
            "charlier" => Ok(FamilyKind::Charlier),
            "hermite_free" | "free" => Ok(FamilyKind::HermiteFree),
            other => Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

/// Everything needed to build a family instance.
///
/// Fields that a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub size: usize,
    pub nu: f64,
    pub set: u8,
    pub lambda: f64,
    pub rho: f64,
    /// Additive constant `C` of the third Hermite/Laguerre parameter set.
    pub c_shift: f64,
    /// Charlier parameter.
    pub a: f64,
    /// Base Laguerre parameter in the entries of `L` (`ell_n^(lag_a + k)`).
    pub lag_a: f64,
    /// Explicit `alpha_j` (free Hermite only).
    pub alphas: Option<Vec<f64>>,
    /// Explicit `t_j` (free Hermite only).
    pub ts: Option<Vec<f64>>,
}

impl FamilySpec {
    fn base(kind: FamilyKind, size: usize, nu: f64) -> Self {
        FamilySpec {
            kind,
            size,
            nu,
            set: 1,
            lambda: 1.0,
            rho: 1.0,
            c_shift: 0.5,
            a: 1.0,
            lag_a: 0.0,
            alphas: None,
            ts: None,
        }
    }

    pub fn hermite(set: u8, size: usize, nu: f64) -> Self {
        FamilySpec {
            set,
            ..Self::base(FamilyKind::Hermite, size, nu)
        }
    }

    pub fn laguerre(set: u8, size: usize, nu: f64) -> Self {
        FamilySpec {
            set,
            ..Self::base(FamilyKind::Laguerre, size, nu)
        }
    }

    /// Size `2 ell + 1`; `two_ell` is `2 ell`.
    pub fn gegenbauer(two_ell: usize, nu: f64) -> Self {
        Self::base(FamilyKind::Gegenbauer, two_ell + 1, nu)
    }

    pub fn charlier(size: usize, nu: u32, a: f64) -> Self {
        FamilySpec {
            a,
            ..Self::base(FamilyKind::Charlier, size, nu as f64)
        }
    }

    /// Defaults `alpha_j = 1`, `t_j = j`.
    pub fn hermite_free(size: usize) -> Self {
        Self::base(FamilyKind::HermiteFree, size, 0.0)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_c_shift(mut self, c: f64) -> Self {
        self.c_shift = c;
        self
    }

    pub fn with_lag_a(mut self, lag_a: f64) -> Self {
        self.lag_a = lag_a;
        self
    }

    pub fn with_free_params(mut self, alphas: Vec<f64>, ts: Vec<f64>) -> Self {
        self.alphas = Some(alphas);
        self.ts = Some(ts);
        self
    }

    /// Same spec one step up in `nu`.
    pub fn bumped(&self) -> Self {
        FamilySpec {
            nu: self.nu + 1.0,
            ..self.clone()
        }
    }

    /// Short human label, e.g. `hermite[set 2, N=3, nu=1]`.
    pub fn label(&self) -> String {
        match self.kind {
            FamilyKind::Hermite | FamilyKind::Laguerre => {
                format!("{}[set {}, N={}, nu={}]", self.kind, self.set, self.size, self.nu)
            }
            FamilyKind::Gegenbauer => {
                format!(
                    "gegenbauer[ell={}, N={}, nu={}]",
                    (self.size - 1) as f64 / 2.0,
                    self.size,
                    self.nu
                )
            }
            FamilyKind::Charlier => {
                format!("charlier[N={}, nu={}, a={}]", self.size, self.nu, self.a)
            }
            FamilyKind::HermiteFree => format!("hermite_free[N={}]", self.size),
        }
    }
}

/// Coefficients of `Phi(x) = x^2 phi2 + x phi1 + phi0` and `Psi(x) = x psi1 + psi0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonCoeffs {
    pub phi2: Mat,
    pub phi1: Mat,
    pub phi0: Mat,
    pub psi1: Mat,
    pub psi0: Mat,
}

impl PearsonCoeffs {
    pub fn phi(&self) -> MatPoly {
        let n = self.phi0.rows();
        MatPoly::from_coeffs(n, vec![self.phi0.clone(), self.phi1.clone(), self.phi2.clone()])
    }

    pub fn psi(&self) -> MatPoly {
        MatPoly::linear(self.psi1.clone(), self.psi0.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyInstance {
    pub spec: FamilySpec,
    pub alpha: Vec<f64>,
    pub t: Vec<f64>,
    /// `d` and `c` of the Hermite/Laguerre parameter sets.
    pub d: Option<f64>,
    pub c: Option<f64>,
    /// Strictly lower triangular matrix `A` of the family.
    pub a_mat: Mat,
    /// Diagonal `J` (entries `1..N`, or `0..2 ell` for Gegenbauer).
    pub j_mat: Mat,
    pub support: Support,
    /// Common scalar factor `w(x)`.
    pub scalar_weight: BaseWeight,
    pub l_poly: MatPoly,
    /// Diagonal of `T(x) / w(x)`, entry `j` is `t_j p_j(x)`.
    pub t_poly: Vec<ScalarPoly>,
    pub q_poly: MatPoly,
    pub pearson: Option<PearsonCoeffs>,
}

impl FamilyInstance {
    pub fn kind(&self) -> FamilyKind {
        self.spec.kind
    }

    pub fn size(&self) -> usize {
        self.spec.size
    }

    pub fn nu(&self) -> f64 {
        self.spec.nu
    }

    pub fn pearson(&self) -> Result<&PearsonCoeffs> {
        self.pearson
            .as_ref()
            .ok_or_else(|| Error::NotApplicable(format!("Pearson data for {}", self.spec.kind)))
    }

    /// Scalar weight at `x` without support checks (zero off a discrete support).
    pub fn scalar_weight_at(&self, x: f64) -> f64 {
        self.scalar_weight.eval(x)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("family instance serializes")
    }
}

fn poch(x: f64, k: usize) -> f64 {
    (0..k).map(|i| x + i as f64).product()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

/// Builds the family described by `spec`.
pub fn build_family(spec: &FamilySpec) -> Result<FamilyInstance> {
    let n = spec.size;
    require(n >= 1, || "matrix size must be at least 1".into())?;
    require(spec.kind.parameter_sets().contains(&spec.set), || {
        format!("{} has no parameter set {}", spec.kind, spec.set)
    })?;
    match spec.kind {
        FamilyKind::Hermite => build_hermite(spec),
        FamilyKind::Laguerre => build_laguerre(spec),
        FamilyKind::Gegenbauer => build_gegenbauer(spec),
        FamilyKind::Charlier => build_charlier(spec),
        FamilyKind::HermiteFree => build_hermite_free(spec),
    }
}

fn check_positive(name: &str, v: &[f64]) -> Result<()> {
    require(v.iter().all(|x| x.is_finite() && *x > 0.0), || {
        format!("{name} must be positive, got {v:?}")
    })
}

/// `L_jk = (alpha_j / alpha_k) p(j, k)` below the diagonal.
fn lower_poly(n: usize, alpha: &[f64], mut p: impl FnMut(usize, usize) -> Result<ScalarPoly>) -> Result<MatPoly> {
    let mut entries = vec![Vec::new(); n * n];
    for i in 0..n {
        for k in 0..=i {
            entries[i * n + k] = p(i, k)?.scale(alpha[i] / alpha[k]).into_coeffs();
        }
    }
    Ok(MatPoly::from_entries(n, |i, j| std::mem::take(&mut entries[i * n + j])))
}

fn q_from_parts(l: &MatPoly, t_poly: &[ScalarPoly]) -> MatPoly {
    let n = l.size();
    let diag = MatPoly::from_entries(n, |i, j| {
        if i == j {
            t_poly[i].coeffs().to_vec()
        } else {
            Vec::new()
        }
    });
    &(l * &diag) * &l.adjoint()
}

fn hermite_like_a(alpha: &[f64]) -> (Mat, Mat) {
    let n = alpha.len();
    let mut a = Mat::zeros(n, n);
    let mut a_tilde = Mat::zeros(n, n);
    for k in 1..n {
        a[(k, k - 1)] = 2.0 * alpha[k] / alpha[k - 1];
        a_tilde[(k, k - 1)] = 2.0 * alpha[k - 1] / alpha[k];
    }
    (a, a_tilde)
}

fn hermite_l(alpha: &[f64]) -> Result<MatPoly> {
    lower_poly(alpha.len(), alpha, |i, k| {
        Ok(classical::hermite(i - k).scale(1.0 / factorial(i - k)))
    })
}

fn one_based_j(n: usize) -> Mat {
    Mat::from_diag(&(1..=n).map(|j| j as f64).collect::<Vec<_>>())
}

fn build_hermite(spec: &FamilySpec) -> Result<FamilyInstance> {
    let (n, nu) = (spec.size, spec.nu);
    require(nu > 0.0, || format!("nu must be positive, got {nu}"))?;
    let nf = n as f64;
    let ks = 1..=n;
    let (d, c, alpha, t): SetParams = match spec.set {
        1 => (
            1.0 / (nu + 1.0),
            nu / (nu + 1.0),
            ks.clone()
                .map(|k| (2f64.powi(1 - k as i32) * poch(nf - k as f64 + 1.0, k - 1)).sqrt())
                .collect(),
            ks.map(|k| poch(nu + 1.0, k - 1) / factorial(k - 1)).collect(),
        ),
        2 => {
            let lam = spec.lambda;
            require(lam > 0.0, || format!("lambda must be positive, got {lam}"))?;
            (
                lam,
                lam * nu,
                ks.clone()
                    .map(|k| 2f64.powi(1 - k as i32) * (factorial(k - 1) * poch(nf - k as f64 + 1.0, k - 1)).sqrt())
                    .collect(),
                ks.map(|k| 2f64.powi(-(k as i32)) * lam.powf(nu) * gamma(nu + k as f64))
                    .collect(),
            )
        }
        _ => {
            let (rho, cc) = (spec.rho, spec.c_shift);
            require(rho > 0.0 && cc > 0.0, || {
                format!("rho and C must be positive, got {rho}, {cc}")
            })?;
            let s = nu + 1.0 + cc / rho;
            (
                rho,
                cc + nu * rho,
                vec![1.0; n],
                ks.map(|k| {
                    2f64.powi(k as i32 - 1) * poch(s, k - 1) / (factorial(k - 1) * poch(nf - k as f64 + 1.0, k - 1))
                        * gamma(s)
                })
                .collect(),
            )
        }
    };
    check_positive("t", &t)?;
    let (a, a_tilde) = hermite_like_a(&alpha);
    let j = one_based_j(n);
    let id = Mat::identity(n);
    let at = a.transpose();
    let pearson = PearsonCoeffs {
        phi2: Mat::zeros(n, n),
        phi1: at.scale(-d),
        phi0: &(&j + &(&at * &at).scale(0.5)).scale(d) + &id.scale(c),
        psi1: (&(&j - &id.scale(nf + 1.0)).scale(d) - &id.scale(c)).scale(2.0),
        psi0: &(&at * &(&id.scale(c) + &(&id.scale(nf + 1.0) - &j).scale(d)))
            + &(&(&a_tilde * &j) * &(&id.scale(nf) - &j)).scale(0.5 * d),
    };
    let l_poly = hermite_l(&alpha)?;
    let t_poly: Vec<ScalarPoly> = t.iter().map(|tj| ScalarPoly::new(vec![*tj])).collect();
    let q_poly = q_from_parts(&l_poly, &t_poly);
    Ok(FamilyInstance {
        spec: spec.clone(),
        alpha,
        t,
        d: Some(d),
        c: Some(c),
        a_mat: a,
        j_mat: j,
        support: Support::FullLine,
        scalar_weight: BaseWeight::Gaussian,
        l_poly,
        t_poly,
        q_poly,
        pearson: Some(pearson),
    })
}

fn build_hermite_free(spec: &FamilySpec) -> Result<FamilyInstance> {
    let n = spec.size;
    let alpha = spec.alphas.clone().unwrap_or_else(|| vec![1.0; n]);
    let t = spec.ts.clone().unwrap_or_else(|| (1..=n).map(|j| j as f64).collect());
    require(alpha.len() == n && t.len() == n, || {
        format!("need {n} alphas and {n} t values")
    })?;
    check_positive("alpha", &alpha)?;
    check_positive("t", &t)?;
    let (a, _) = hermite_like_a(&alpha);
    let l_poly = hermite_l(&alpha)?;
    let t_poly: Vec<ScalarPoly> = t.iter().map(|tj| ScalarPoly::new(vec![*tj])).collect();
    let q_poly = q_from_parts(&l_poly, &t_poly);
    Ok(FamilyInstance {
        spec: spec.clone(),
        alpha,
        t,
        d: None,
        c: None,
        a_mat: a,
        j_mat: one_based_j(n),
        support: Support::FullLine,
        scalar_weight: BaseWeight::Gaussian,
        l_poly,
        t_poly,
        q_poly,
        pearson: None,
    })
}

type SetParams = (f64, f64, Vec<f64>, Vec<f64>);

/// `(d, c, alpha, t)` of a Laguerre parameter set evaluated at `nu`.
fn laguerre_set(spec: &FamilySpec, nu: f64) -> Result<SetParams> {
    let n = spec.size;
    let nf = n as f64;
    let ks = 1..=n;
    Ok(match spec.set {
        1 => (
            1.0,
            nu,
            ks.clone().map(|k| poch(nf - k as f64 + 1.0, k).sqrt()).collect(),
            ks.map(|k| gamma(nu + 1.0) * (1..k).map(|s| 1.0 + nu / s as f64).product::<f64>())
                .collect(),
        ),
        2 => {
            let lam = spec.lambda;
            require(lam > 0.0, || format!("lambda must be positive, got {lam}"))?;
            (
                lam,
                lam * nu,
                ks.clone()
                    .map(|k| (factorial(k - 1) * poch(nf - k as f64 + 1.0, k - 1)).sqrt())
                    .collect(),
                ks.map(|k| lam.powf(nu) * gamma(nu + k as f64)).collect(),
            )
        }
        _ => {
            let (rho, cc) = (spec.rho, spec.c_shift);
            require(rho > 0.0 && cc > 0.0, || {
                format!("rho and C must be positive, got {rho}, {cc}")
            })?;
            let s = nu + 1.0 + cc / rho;
            (
                rho,
                cc + nu * rho,
                vec![1.0; n],
                ks.map(|k| {
                    poch(s, k - 1) / (factorial(k - 1) * poch(nf - k as f64 + 1.0, k - 1)) * rho.powf(nu) * gamma(s)
                })
                .collect(),
            )
        }
    })
}

fn build_laguerre(spec: &FamilySpec) -> Result<FamilyInstance> {
    let (n, nu) = (spec.size, spec.nu);
    require(nu > 0.0, || format!("nu must be positive, got {nu}"))?;
    let nf = n as f64;
    let (d, c, alpha, t) = laguerre_set(spec, nu)?;
    check_positive("t", &t)?;
    let t_next = laguerre_set(spec, nu + 1.0)?.3;
    let lag_a = spec.lag_a;
    require(lag_a > -2.0, || {
        format!("Laguerre base parameter must exceed -2, got {lag_a}")
    })?;
    let l_poly = lower_poly(n, &alpha, |i, k| classical::laguerre(i - k, lag_a + (k + 1) as f64))?;
    let mut a = Mat::zeros(n, n);
    for k in 1..n {
        a[(k, k - 1)] = -alpha[k] / alpha[k - 1];
    }
    let j = one_based_j(n);
    let id = Mat::identity(n);
    let at = a.transpose();
    let l0t = l_poly.eval(0.0).transpose();
    let l0t_inv = l0t.inverse()?;
    let conj = |m: &Mat| &(&l0t_inv * m) * &l0t;
    let delta_inv = Mat::from_diag(&t.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    let delta_next = Mat::from_diag(&t_next);
    let jn1 = &j + &id.scale(nu + 1.0);
    let pearson = PearsonCoeffs {
        phi2: conj(&at).scale(-d),
        phi1: &conj(&j).scale(d) + &id.scale(c),
        phi0: Mat::zeros(n, n),
        psi1: &conj(&(&j - &(&at * &jn1))).scale(d) - &id.scale(d * (nf + 1.0) + c),
        psi0: conj(&(&(&jn1 * &(&j.scale(d) + &id.scale(c))) + &(&(&delta_inv * &a) * &delta_next))),
    };
    let t_poly: Vec<ScalarPoly> = t
        .iter()
        .enumerate()
        .map(|(i, tj)| {
            let mut coeffs = vec![0.0; i + 1];
            coeffs[i] = *tj;
            ScalarPoly::new(coeffs)
        })
        .collect();
    let q_poly = q_from_parts(&l_poly, &t_poly);
    Ok(FamilyInstance {
        spec: spec.clone(),
        alpha,
        t,
        d: Some(d),
        c: Some(c),
        a_mat: a,
        j_mat: j,
        support: Support::HalfLine,
        scalar_weight: BaseWeight::GenLaguerre { exponent: nu + 1.0 },
        l_poly,
        t_poly,
        q_poly,
        pearson: Some(pearson),
    })
}

fn build_gegenbauer(spec: &FamilySpec) -> Result<FamilyInstance> {
    let (n, nu) = (spec.size, spec.nu);
    require(nu > 0.0, || format!("nu must be positive, got {nu}"))?;
    let ell = (n - 1) as f64 / 2.0;
    let l2 = 2.0 * ell;
    let t: Vec<f64> = (0..n)
        .map(|k| {
            let kf = k as f64;
            factorial(k) * poch(nu, k) / poch(nu + 0.5, k) * poch(2.0 * nu + l2, k) * (l2 + nu)
                / (poch(l2 - kf + 1.0, k) * poch(2.0 * nu + kf - 1.0, k))
        })
        .collect();
    check_positive("t", &t)?;
    let alpha = vec![1.0; n];
    // L_jk = j! / (k! (2 nu + 2k)_{j-k}) C_{j-k}^(nu + k)
    let l_poly = lower_poly(n, &alpha, |i, k| {
        let beta = factorial(i) / (factorial(k) * poch(2.0 * nu + 2.0 * k as f64, i - k));
        Ok(classical::gegenbauer(i - k, nu + k as f64)?.scale(beta))
    })?;
    let mut a = Mat::zeros(n, n);
    for k in 1..n {
        a[(k, k - 1)] = 1.0;
    }
    let j = Mat::from_diag(&(0..n).map(|k| k as f64).collect::<Vec<_>>());
    let id = Mat::identity(n);
    let at = a.transpose();
    // c / ell^2, finite at ell = 0
    let ch = (2.0 * nu + 1.0) * (l2 + nu + 1.0) / (nu * (2.0 * nu + l2 + 1.0) * (l2 + nu) * (ell + nu));
    let k1 = (&(&j + &id.scale(nu)) * &(&id.scale(l2 + nu) - &j)).scale(-(l2 + 2.0 * nu + 1.0));
    let psi1 = k1.scale(ch);
    let phi2 = psi1.scale(1.0 / (2.0 * nu + n as f64));
    let phi1 = (&(&(&(&id.scale(l2 + 1.0) - &j.scale(2.0)) * &(&j - &id.scale(l2 + 1.0))) * &a)
        + &(&(&id.scale(l2 - 1.0) - &j.scale(2.0)) * &(&at * &j)))
        .scale(ch / 2.0);
    let atj = &at * &j;
    let phi0 = (&(&(&(&id.scale(4.0 * (ell + nu).powi(2))
        + &(&(&(&id.scale(l2 + 2.0) - &j) * &(&id.scale(l2 + 1.0) - &j)) * &(&a * &a)))
        + &(&(&j * &j).scale(2.0) - &j.scale(2.0 * l2)))
        - &id.scale(l2))
        + &(&atj * &atj))
        .scale(ch / 4.0);
    let psi0 = (&(&(&a * &(&j - &id.scale(l2))) * &(&j + &id.scale(nu))) - &(&atj * &(&id.scale(l2 + nu) - &j)))
        .scale(ch * (l2 + 1.0 + 2.0 * nu) / -2.0);
    let one_minus_x2 = ScalarPoly::new(vec![1.0, 0.0, -1.0]);
    let t_poly: Vec<ScalarPoly> = t
        .iter()
        .enumerate()
        .map(|(k, tk)| one_minus_x2.powi(k as u32).scale(*tk))
        .collect();
    let q_poly = q_from_parts(&l_poly, &t_poly);
    Ok(FamilyInstance {
        spec: spec.clone(),
        alpha,
        t,
        d: None,
        c: None,
        a_mat: a,
        j_mat: j,
        support: Support::Interval,
        scalar_weight: BaseWeight::Jacobi {
            alpha: nu - 0.5,
            beta: nu - 0.5,
        },
        l_poly,
        t_poly,
        q_poly,
        pearson: Some(PearsonCoeffs {
            phi2,
            phi1,
            phi0,
            psi1,
            psi0,
        }),
    })
}

/// `binom(x + shift, m)` as a polynomial in `x`.
fn binomial_poly(shift: f64, m: usize) -> ScalarPoly {
    (0..m)
        .fold(ScalarPoly::one(), |acc, r| {
            &acc * &ScalarPoly::linear(shift - r as f64, 1.0)
        })
        .scale(1.0 / factorial(m))
}

/// `(I + A)^(x + shift) = sum_m binom(x + shift, m) A^m` for nilpotent `A`.
pub fn nilpotent_binomial_power(a: &Mat, shift: f64) -> Result<MatPoly> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix is not square",
            a.rows(),
            a.cols()
        )));
    }
    let nil = a.powi(n as u32).max_abs();
    if nil > 1e-12 * (1.0 + a.max_abs()).powi(n as i32) {
        return Err(Error::InvalidParameter("matrix is not nilpotent".into()));
    }
    let mut acc = MatPoly::zero(n);
    let mut am = Mat::identity(n);
    for m in 0..n {
        let b = binomial_poly(shift, m);
        let term = MatPoly::from_coeffs(n, b.coeffs().iter().map(|c| am.scale(*c)).collect());
        acc = &acc + &term;
        am = &am * a;
    }
    Ok(acc)
}

fn build_charlier(spec: &FamilySpec) -> Result<FamilyInstance> {
    let (n, nu, a) = (spec.size, spec.nu, spec.a);
    require(nu >= 0.0 && nu.fract() == 0.0, || {
        format!("Charlier nu must be a nonnegative integer, got {nu}")
    })?;
    require(a > 0.0, || format!("Charlier a must be positive, got {a}"))?;
    let nf = n as f64;
    let nu_i = nu as usize;
    let t_at = |v: usize| -> Vec<f64> { (1..=n).map(|k| (a / 2.0).powi(v as i32) * poch(k as f64, v)).collect() };
    let t = t_at(nu_i);
    let t_next = t_at(nu_i + 1);
    let mut am = Mat::zeros(n, n);
    let mut alpha = vec![1.0; n];
    for i in 1..n {
        am[(i, i - 1)] = ((nf - i as f64) / a).sqrt();
        alpha[i] = alpha[i - 1] * am[(i, i - 1)];
    }
    let id = Mat::identity(n);
    let j = one_based_j(n);
    let at = am.transpose();
    let ipat_inv = (&at + &id).inverse()?;
    let at_frac = &at * &ipat_inv;
    let phi2 = at_frac.scale(-0.5);
    let phi1 = (&(&(&j.scale(2.0) - &id.scale(nf + 1.0)) - &at.scale(a)) - &at_frac.scale(2.0 * nu + 1.0)).scale(0.5);
    let phi0 = &(&(&(&ipat_inv.powi(nu_i as u32) * &Mat::from_diag(&t.iter().map(|v| 1.0 / v).collect::<Vec<_>>()))
        * &(&am + &id))
        * &Mat::from_diag(&t_next))
        * &(&at + &id).powi(nu_i as u32 + 1);
    let psi1 = (&(&(&j - &id.scale(nf + 1.0 + nu)) - &at.scale(a)) - &at_frac.scale(nu + 1.0)).scale(0.5);
    let l_poly = nilpotent_binomial_power(&am, nu)?;
    let t_poly: Vec<ScalarPoly> = t.iter().map(|tj| ScalarPoly::new(vec![*tj])).collect();
    let q_poly = q_from_parts(&l_poly, &t_poly);
    Ok(FamilyInstance {
        spec: spec.clone(),
        alpha,
        t,
        d: None,
        c: None,
        a_mat: am,
        j_mat: j,
        support: Support::NonNegativeIntegers,
        scalar_weight: BaseWeight::Poisson { a },
        l_poly,
        t_poly,
        q_poly,
        pearson: Some(PearsonCoeffs {
            phi2,
            phi1,
            psi0: phi0.clone(),
            phi0,
            psi1,
        }),
    })
}

/// Polynomial part `Q(x)` of a Charlier weight.
pub fn charlier_weight_poly(f: &FamilyInstance) -> Result<MatPoly> {
    if f.kind() != FamilyKind::Charlier {
        return Err(Error::NotApplicable(format!(
            "Charlier weight polynomial for {}",
            f.kind()
        )));
    }
    Ok(f.q_poly.clone())
}

fn check_support(f: &FamilyInstance, x: f64) -> Result<()> {
    let ok = match f.support {
        Support::FullLine => x.is_finite(),
        Support::HalfLine => x >= 0.0,
        Support::Interval => x.abs() <= 1.0,
        Support::NonNegativeIntegers => x >= 0.0 && x.fract() == 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::OutsideSupport {
            x,
            support: f.support.describe(),
        })
    }
}

/// `W(x) = w(x) Q(x)`.
pub fn weight_eval(f: &FamilyInstance, x: f64) -> Result<Mat> {
    check_support(f, x)?;
    Ok(f.q_poly.eval(x).scale(f.scalar_weight_at(x)))
}

/// `W'(x) = w'(x) Q(x) + w(x) Q'(x)` for the continuous families.
pub fn weight_derivative(f: &FamilyInstance, x: f64) -> Result<Mat> {
    if f.kind().is_discrete() {
        return Err(Error::NotApplicable("derivative of a discrete weight".into()));
    }
    check_support(f, x)?;
    let q = f.q_poly.eval(x);
    let dq = f.q_poly.derivative().eval(x);
    Ok(&q.scale(f.scalar_weight.derivative(x)) + &dq.scale(f.scalar_weight_at(x)))
}

/// `L(x) T(x) L(x)^T` assembled from the separate factors.
pub fn weight_from_factors(f: &FamilyInstance, x: f64) -> Result<Mat> {
    check_support(f, x)?;
    let l = f.l_poly.eval(x);
    let w = f.scalar_weight_at(x);
    let t = Mat::from_diag(&f.t_poly.iter().map(|p| w * p.eval(x)).collect::<Vec<_>>());
    Ok(&(&l * &t) * &l.transpose())
}

/// Points at which identities are checked: `2 (2N + 3)` Chebyshev points
/// inside the support (`[-3, 3]` on the line, `(0, 8)` on the half line),
/// or the integers `0..=2N + 6`.
pub fn sample_points(f: &FamilyInstance) -> Vec<f64> {
    let n = f.size();
    let (lo, hi) = match f.support {
        Support::NonNegativeIntegers => return (0..=2 * n + 6).map(|x| x as f64).collect(),
        Support::FullLine => (-3.0, 3.0),
        Support::HalfLine => (0.0, 8.0),
        Support::Interval => (-1.0, 1.0),
    };
    let m = 2 * (2 * n + 3);
    (0..m)
        .map(|i| {
            let c = (std::f64::consts::PI * (i as f64 + 0.5) / m as f64).cos();
            lo + (hi - lo) * (1.0 - c) / 2.0
        })
        .collect()
}

/// Relative residuals of the two Pearson identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearsonResiduals {
    pub phi: f64,
    pub psi: f64,
}

/// `W^(nu+1) = W^(nu) Phi` and `(W^(nu+1))' = W^(nu) Psi` (Charlier: backward
/// difference in place of the derivative), normalized by `|W^(nu+1)(x)|`.
pub fn pearson_residuals(f: &FamilyInstance) -> Result<PearsonResiduals> {
    let p = f.pearson()?;
    let next = build_family(&f.spec.bumped())?;
    let (phi, psi) = (p.phi(), p.psi());
    let mut out = PearsonResiduals { phi: 0.0, psi: 0.0 };
    for x in sample_points(f) {
        let w = weight_eval(f, x)?;
        let w1 = weight_eval(&next, x)?;
        let scale = w1.max_abs();
        let lhs_psi = if f.kind().is_discrete() {
            // W(x - 1) vanishes at x = 0 since 1/(-1)! = 0
            let prev = if x >= 1.0 {
                weight_eval(&next, x - 1.0)?
            } else {
                Mat::zeros(f.size(), f.size())
            };
            &w1 - &prev
        } else {
            weight_derivative(&next, x)?
        };
        out.phi = out.phi.max((&w1 - &(&w * &phi.eval(x))).max_abs() / scale);
        out.psi = out.psi.max((&lhs_psi - &(&w * &psi.eval(x))).max_abs() / scale);
    }
    Ok(out)
}

/// Largest normalized `|W Phi - Phi^T W|` and `|W Psi - Psi^T W|` over the samples.
pub fn switching_residual(f: &FamilyInstance) -> Result<f64> {
    let p = f.pearson()?;
    let (phi, psi) = (p.phi(), p.psi());
    let mut worst: f64 = 0.0;
    for x in sample_points(f) {
        let w = weight_eval(f, x)?;
        for m in [phi.eval(x), psi.eval(x)] {
            let r = (&(&w * &m) - &(&m.transpose() * &w)).max_abs();
            let scale = w.max_abs() * m.max_abs();
            worst = worst.max(if scale > 0.0 { r / scale } else { r });
        }
    }
    Ok(worst)
}

/// The verification grid: Hermite and Laguerre sets 1-3 with `N <= 5`,
/// Gegenbauer `N in {1, 3, 5}`, all with `nu in {1/2, 1, 2}`; Charlier
/// `N <= 5`, `nu in {0, 1, 2}`, `a in {1/2, 1, 3}`. Extra parameters take the
/// defaults of `FamilySpec` (`lambda = 1`, `rho = 1`, `C = 1/2`, `lag_a = 0`).
pub fn verification_grid() -> Vec<FamilySpec> {
    let mut v = Vec::new();
    for set in [1, 2, 3] {
        for n in 1..=5 {
            for nu in [0.5, 1.0, 2.0] {
                v.push(FamilySpec::hermite(set, n, nu));
            }
        }
    }
    for set in [1, 2, 3] {
        for n in 1..=5 {
            for nu in [0.5, 1.0, 2.0] {
                v.push(FamilySpec::laguerre(set, n, nu));
            }
        }
    }
    for two_ell in [0, 2, 4] {
        for nu in [0.5, 1.0, 2.0] {
            v.push(FamilySpec::gegenbauer(two_ell, nu));
        }
    }
    for n in 1..=5 {
        for nu in [0, 1, 2] {
            for a in [0.5, 1.0, 3.0] {
                v.push(FamilySpec::charlier(n, nu, a));
            }
        }
    }
    v
}

/// One line per family and parameter set, for listings.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub family: &'static str,
    pub set: Option<u8>,
    pub support: &'static str,
    pub parameters: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    let mut v = Vec::new();
    for set in [1u8, 2, 3] {
        let parameters = match set {
            1 => "size, nu",
            2 => "size, nu, lambda",
            _ => "size, nu, rho, C",
        };
        v.push(CatalogEntry {
            family: "hermite",
            set: Some(set),
            support: Support::FullLine.describe(),
            parameters,
        });
    }
    for set in [1u8, 2, 3] {
        let parameters = match set {
            1 => "size, nu, lag_a",
            2 => "size, nu, lambda, lag_a",
            _ => "size, nu, rho, C, lag_a",
        };
        v.push(CatalogEntry {
            family: "laguerre",
            set: Some(set),
            support: Support::HalfLine.describe(),
            parameters,
        });
    }
    v.push(CatalogEntry {
        family: "gegenbauer",
        set: None,
        support: Support::Interval.describe(),
        parameters: "ell (size 2 ell + 1), nu",
    });
    v.push(CatalogEntry {
        family: "charlier",
        set: None,
        support: Support::NonNegativeIntegers.describe(),
        parameters: "size, integer nu, a",
    });
    v.push(CatalogEntry {
        family: "hermite_free",
        set: None,
        support: Support::FullLine.describe(),
        parameters: "size, alpha_j, t_j (no Pearson data)",
    });
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn hermite_set1_hand_values() {
        let f = build_family(&FamilySpec::hermite(1, 2, 1.0)).unwrap();
        assert_eq!((f.d, f.c), (Some(0.5), Some(0.5)));
        assert!((f.alpha[0] - 1.0).abs() < 1e-15 && (f.alpha[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.t, vec![1.0, 2.0]);
        assert!(close(&f.pearson.unwrap().psi1, &Mat::from_diag(&[-3.0, -2.0]), 1e-15));
    }

    #[test]
    fn hermite_scalar_collapse() {
        for nu in [0.5, 1.0, 2.0] {
            let f = build_family(&FamilySpec::hermite(1, 1, nu)).unwrap();
            let p = f.pearson().unwrap();
            assert!(close(&p.phi().eval(0.3), &Mat::identity(1), 1e-15));
            assert!((p.psi1[(0, 0)] + 2.0).abs() < 1e-15 && p.psi0[(0, 0)].abs() < 1e-15);
        }
    }

    #[test]
    fn free_weight_at_origin() {
        let f = build_family(&FamilySpec::hermite_free(2).with_free_params(vec![1.0, 1.0], vec![1.5, 4.0])).unwrap();
        assert!(close(
            &weight_eval(&f, 0.0).unwrap(),
            &Mat::from_diag(&[1.5, 4.0]),
            1e-15
        ));
        assert!(f.pearson().is_err());
        assert!(pearson_residuals(&f).is_err());
    }

    #[test]
    fn charlier_binomial_power() {
        let a = Mat::from_rows(&[vec![0.0, 0.0], vec![0.7, 0.0]]).unwrap();
        let p = nilpotent_binomial_power(&a, 0.0).unwrap();
        assert_eq!(p, MatPoly::linear(a.clone(), Mat::identity(2)));
        assert_eq!(
            nilpotent_binomial_power(&Mat::zeros(1, 1), 2.0).unwrap(),
            MatPoly::identity(1)
        );
        assert!(nilpotent_binomial_power(&Mat::identity(2), 0.0).is_err());
    }

    #[test]
    fn charlier_congruence() {
        // explicit L_jk = (-a)^(j-k) (alpha_j/alpha_k) c_{j-k}(x)/(j-k)!
        for a in [0.5, 1.0, 3.0] {
            let f = build_family(&FamilySpec::charlier(4, 0, a)).unwrap();
            let explicit = lower_poly(4, &f.alpha, |i, k| {
                Ok(classical::charlier(i - k, a)?.scale((-a).powi((i - k) as i32) / factorial(i - k)))
            })
            .unwrap();
            let l0 = explicit.eval(0.0);
            let step = &Mat::identity(4) + &f.a_mat;
            for x in 0..4 {
                let px = step.powi(x);
                let lx = explicit.eval(x as f64);
                assert!(close(&lx, &(&px * &l0), 1e-12 * lx.max_abs()));
                assert!(close(&lx, &(&l0 * &px), 1e-12 * lx.max_abs()));
            }
        }
    }

    #[test]
    fn outside_support() {
        let lag = build_family(&FamilySpec::laguerre(1, 2, 1.0)).unwrap();
        assert!(matches!(weight_eval(&lag, -0.1), Err(Error::OutsideSupport { .. })));
        let geg = build_family(&FamilySpec::gegenbauer(2, 1.0)).unwrap();
        assert!(weight_eval(&geg, 1.5).is_err());
        let ch = build_family(&FamilySpec::charlier(2, 1, 1.0)).unwrap();
        assert!(weight_eval(&ch, 0.5).is_err());
        assert!(weight_eval(&ch, 3.0).is_ok());
    }

    #[test]
    fn bad_specs() {
        assert!(build_family(&FamilySpec::hermite(4, 2, 1.0)).is_err());
        assert!(build_family(&FamilySpec::hermite(1, 0, 1.0)).is_err());
        assert!(build_family(&FamilySpec::hermite(2, 2, 1.0).with_lambda(-1.0)).is_err());
        assert!(build_family(&FamilySpec {
            nu: 0.5,
            ..FamilySpec::charlier(2, 0, 1.0)
        })
        .is_err());
        assert!(
            build_family(&FamilySpec::hermite_free(3).with_free_params(vec![1.0; 3], vec![1.0, -1.0, 1.0])).is_err()
        );
        assert!("hermite-free".parse::<FamilyKind>().is_ok());
        assert!("jacobi".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn pearson_small_cases() {
        let specs = [
            FamilySpec::hermite(1, 1, 1.0),
            FamilySpec::hermite(2, 3, 1.0).with_lambda(1.3),
            FamilySpec::laguerre(1, 3, 0.5),
            FamilySpec::gegenbauer(2, 1.0),
            FamilySpec::charlier(2, 0, 1.0),
        ];
        for s in specs {
            let f = build_family(&s).unwrap();
            let r = pearson_residuals(&f).unwrap();
            assert!(r.phi < 1e-12 && r.psi < 1e-12, "{}: {r:?}", s.label());
            assert!(switching_residual(&f).unwrap() < 1e-12);
        }
    }

    #[test]
    fn json_shape() {
        let f = build_family(&FamilySpec::gegenbauer(2, 1.0)).unwrap();
        let v = f.to_json();
        assert_eq!(v["spec"]["kind"], "gegenbauer");
        assert_eq!(v["pearson"]["phi0"].as_array().unwrap().len(), 3);
    }
}

//! Commands behind the `mvoptbl` binary, and the report they produce.
//!
//! Every command returns a [`Report`]: a list of checks, each carrying the
//! identity it tests, the residual found and the tolerance it was held to.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{
    build_family, catalog, pearson_residuals, switching_residual, verification_grid, FamilyInstance, FamilySpec,
};
use crate::matcore::{Mat, MatPoly};
use crate::mvop::{brute_force_inner, default_nodes, eigen_identity_residual, generate_with, orthogonality_residual};
use crate::mvop::{InnerProduct, MvopSeq};
use crate::rightops::{eigenvalue_matrix, family_operator};
use crate::tbl::{
    build_t, check_band_symmetry, check_time_commutation, closed_form_r, counterexample_sweep, central_residual,
    free_n2_solution, map_omega, sigma, solve_r, Lcg, RFormula, RSolveReport, SolveStatus, SolveTolerances,
    SweepSummary,
};

pub const SCHEMA: u32 = 1;

const TOL_EIGEN: f64 = 1e-8;
const TOL_ORTHO: f64 = 1e-9;
const TOL_SELF: f64 = 1e-11;
const TOL_COUPLING: f64 = 1e-8;
const TOL_REFERENCE: f64 = 1e-3;
const TOL_BAND: f64 = 1e-8;
const TOL_MEMBER: f64 = 1e-8;
const TOL_ORACLE: f64 = 1e-9;
const ORACLE_STEPS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyPearson,
    SolveR,
    BuildT,
    Counterexample,
    Regress,
    Families,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyPearson => "verify-pearson",
            Command::SolveR => "solve-r",
            Command::BuildT => "build-t",
            Command::Counterexample => "counterexample",
            Command::Regress => "regress",
            Command::Families => "families",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Pearson, switching and closed-form identities.
    pub identity: f64,
    pub consistent: f64,
    pub inconsistent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolveTolerances::default();
        Tolerances {
            identity: 1e-10,
            consistent: s.consistent,
            inconsistent: s.inconsistent,
        }
    }
}

impl Tolerances {
    pub fn solver(&self) -> SolveTolerances {
        SolveTolerances {
            consistent: self.consistent,
            inconsistent: self.inconsistent,
            ..SolveTolerances::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub family: Option<FamilySpec>,
    pub m: usize,
    pub omega: f64,
    pub formula: RFormula,
    /// Run the commutation checks in `build-t`.
    pub check: bool,
    pub tolerances: Tolerances,
    /// Quadrature nodes; `None` picks a size from the degree needed.
    pub nodes: Option<usize>,
    pub n_max: usize,
    pub seed: u64,
    pub trials: usize,
    pub sizes: Vec<usize>,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            family: None,
            m: 0,
            omega: 0.0,
            formula: RFormula::TwoMSquared,
            check: false,
            tolerances: Tolerances::default(),
            nodes: None,
            n_max: 8,
            seed: 7,
            trials: 5,
            sizes: vec![3, 4, 5, 6],
            format: Format::Text,
            out: None,
        }
    }

    pub fn with_family(mut self, spec: FamilySpec) -> Self {
        self.family = Some(spec);
        self
    }

    /// Checks every precondition up front; failures are usage errors.
    pub fn validate(&self) -> Result<()> {
        let usage = |msg: String| Err(Error::InvalidParameter(msg));
        let t = &self.tolerances;
        if !(t.identity > 0.0 && t.consistent > 0.0 && t.consistent < t.inconsistent) {
            return usage(format!(
                "tolerances must be positive with consistent < inconsistent, got {t:?}"
            ));
        }
        if self.nodes.is_some_and(|n| n < 2) {
            return usage("at least two quadrature nodes are needed".into());
        }
        match self.command {
            Command::VerifyPearson | Command::SolveR | Command::BuildT => {
                let Some(spec) = &self.family else {
                    return usage(format!("{} needs --family", self.command.name()));
                };
                if self.command == Command::VerifyPearson && !spec.kind.has_pearson() {
                    return Err(Error::NotApplicable(format!("Pearson data for {}", spec.kind)));
                }
                build_family(spec)?;
                if !self.omega.is_finite() {
                    return usage("omega must be finite".into());
                }
            }
            Command::Counterexample => {
                if self.trials == 0 {
                    return usage("trials must be at least 1".into());
                }
                if self.sizes.is_empty() || self.sizes.iter().any(|n| !(1..=8).contains(n)) {
                    return usage(format!("sizes must lie in 1..=8, got {:?}", self.sizes));
                }
            }
            Command::Regress | Command::Families => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when the value is below the tolerance.
    Below,
    /// Passes when the value is above it.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The identity being tested.
    pub anchor: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<String>,
}

impl Check {
    pub fn below(name: &str, anchor: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            max_residual: value,
            tolerance,
            bound: Bound::Below,
            pass: value < tolerance,
            worst_case: None,
        }
    }

    pub fn above(name: &str, anchor: &str, value: f64, tolerance: f64) -> Self {
        Check {
            bound: Bound::Above,
            pass: value > tolerance,
            ..Check::below(name, anchor, value, tolerance)
        }
    }

    pub fn at(mut self, case: impl Into<String>) -> Self {
        self.worst_case = Some(case.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub unix_seconds: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub pass: bool,
    /// Set when a conditioning or dead-zone guard fired.
    pub guard: Option<String>,
    pub checks: Vec<Check>,
    pub solves: Vec<RSolveReport>,
    pub summary: Vec<String>,
    pub details: serde_json::Value,
    /// The only field that differs between identical runs.
    pub timestamp: Timestamp,
}

impl Report {
    fn new(config: &RunConfig) -> Self {
        Report {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION").into(),
            command: config.command.name().into(),
            config: config.clone(),
            pass: true,
            guard: None,
            checks: Vec::new(),
            solves: Vec::new(),
            summary: Vec::new(),
            details: serde_json::Value::Null,
            timestamp: Timestamp {
                unix_seconds: 0,
                wall_time_s: 0.0,
            },
        }
    }

    fn finish(mut self, started: Instant) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass);
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.timestamp = Timestamp {
            unix_seconds: now,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        self
    }

    /// 0 pass, 2 failed check, 3 guard.
    pub fn exit_code(&self) -> i32 {
        if self.guard.is_some() {
            3
        } else if self.pass {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("mvoptbl {}", self.command);
        if let Some(f) = &self.config.family {
            out += &format!("  {}", f.label());
        }
        out.push('\n');
        for line in &self.summary {
            out += &format!("  {line}\n");
        }
        if !self.checks.is_empty() {
            let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0).max(5);
            out += &format!("  {:w$}  {:>9}  {:>11}\n", "check", "value", "tolerance");
            for c in &self.checks {
                let bound = if c.bound == Bound::Below { "<" } else { ">" };
                out += &format!(
                    "  {:w$}  {:>9.2e}  {} {:>9.2e}  {}",
                    c.name,
                    c.max_residual,
                    bound,
                    c.tolerance,
                    if c.pass { "PASS" } else { "FAIL" }
                );
                if let Some(case) = &c.worst_case {
                    out += &format!("  ({case})");
                }
                out.push('\n');
            }
        }
        if let Some(g) = &self.guard {
            out += &format!("  guard: {g}\n");
        }
        out += &format!(
            "overall: {}\n",
            if self.pass && self.guard.is_none() {
                "PASS"
            } else {
                "FAIL"
            }
        );
        out
    }
}

/// 1 for usage and precondition errors, 3 for numerical guards.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::NotApplicable(_)
        | Error::OutsideSupport { .. }
        | Error::EmptyBand { .. } => 1,
        _ => 3,
    }
}

pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let started = Instant::now();
    let mut report = Report::new(config);
    match config.command {
        Command::VerifyPearson => verify_pearson(config, &mut report)?,
        Command::SolveR => cmd_solve_r(config, &mut report)?,
        Command::BuildT => cmd_build_t(config, &mut report)?,
        Command::Counterexample => cmd_counterexample(config, &mut report)?,
        Command::Regress => regress(config, &mut report)?,
        Command::Families => {
            let cat = catalog();
            for e in &cat {
                let set = e.set.map_or(String::new(), |s| format!(" set {s}"));
                report
                    .summary
                    .push(format!("{}{set}: {} ({})", e.family, e.support, e.parameters));
            }
            report.details = serde_json::to_value(cat).expect("catalog serializes");
        }
    }
    Ok(report.finish(started))
}

const A_PHI: &str = "W^(nu+1) = W^(nu) Phi";
const A_PSI: &str = "(W^(nu+1))' = W^(nu) Psi";
const A_PSI_DISCRETE: &str = "W^(nu+1)(x) - W^(nu+1)(x-1) = W^(nu) Psi";
const A_SWITCH: &str = "W Phi = Phi^* W, W Psi = Psi^* W";
const A_EIGEN: &str = "P_n . D = Lambda_n P_n";
const A_ORTHO: &str = "<P_m, P_n> = 0 for m != n";
const A_HPD: &str = "H_n = <P_n, P_n> positive definite";
const A_ORACLE: &str = "<F, G> by Gauss rule = <F, G> by trapezoid";
const A_CENTRAL: &str = "(R - x S) W = W (R - x S)^*, S = Lambda_M + Lambda_(M+1)";
const A_T: &str = "T = xD + D(x - 2 Omega) - x S + R";
const A_TIME: &str = "<P_M . T, P_(M+1)> = 0";
const A_TIME_REF: &str = "<P_(M+1) . T, P_(M+2)> != 0";
const A_BAND: &str = "<F . T, G>_Omega = <F, G . T>_Omega";

fn family(config: &RunConfig) -> Result<FamilyInstance> {
    build_family(config.family.as_ref().expect("validated"))
}

fn sequence(f: &FamilyInstance, n_max: usize, nodes: Option<usize>) -> Result<MvopSeq> {
    let ip = InnerProduct::new(f, nodes.unwrap_or_else(|| default_nodes(n_max, f.size())))?;
    generate_with(ip, n_max)
}

fn lambdas(f: &FamilyInstance, n_max: usize) -> Result<Vec<Mat>> {
    (0..=n_max).map(|n| eigenvalue_matrix(f, n)).collect()
}

/// Smallest `lambda_min / lambda_max` over the squared norms.
fn h_definiteness(seq: &MvopSeq) -> f64 {
    seq.h
        .iter()
        .map(|h| {
            let ev = h.symmetric_eigenvalues();
            let (lo, hi) = ev
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(l, u), v| (l.min(*v), u.max(v.abs())));
            lo / hi
        })
        .fold(f64::INFINITY, f64::min)
}

fn verify_pearson(config: &RunConfig, report: &mut Report) -> Result<()> {
    let f = family(config)?;
    let tol = config.tolerances.identity;
    let pr = pearson_residuals(&f)?;
    let psi_anchor = if f.kind().is_discrete() { A_PSI_DISCRETE } else { A_PSI };
    report.checks.push(Check::below("pearson phi", A_PHI, pr.phi, tol));
    report.checks.push(Check::below("pearson psi", psi_anchor, pr.psi, tol));
    report
        .checks
        .push(Check::below("switching", A_SWITCH, switching_residual(&f)?, tol));
    let seq = sequence(&f, config.n_max, config.nodes)?;
    let eig = eigen_identity_residual(&seq, &family_operator(&f)?, &lambdas(&f, config.n_max)?)?;
    report
        .checks
        .push(Check::below("eigenvalue identity", A_EIGEN, eig, TOL_EIGEN));
    let ortho = orthogonality_residual(&seq)?;
    report.checks.push(
        Check::below("orthogonality", A_ORTHO, ortho.symmetric, TOL_ORTHO)
            .at(format!("(m, n) = {:?}", ortho.worst_pair)),
    );
    report
        .checks
        .push(Check::above("H positive definite", A_HPD, h_definiteness(&seq), 0.0));
    report.summary.push(format!(
        "n_max = {}, one-sided orthogonality ratio {:.2e}",
        config.n_max, ortho.one_sided
    ));
    Ok(())
}

fn cmd_solve_r(config: &RunConfig, report: &mut Report) -> Result<()> {
    let f = family(config)?;
    let s = sigma(&f, config.m)?;
    let rep = solve_r(&f, &s, &config.tolerances.solver())?;
    report.summary.push(format!(
        "status {}, residual {:.2e}, system {}x{} (rank {}), null space dimension {}",
        rep.status.as_str(),
        rep.residual,
        rep.rows,
        rep.cols,
        rep.rank,
        rep.nullspace.len()
    ));
    if let Some(p) = &rep.particular {
        report.checks.push(Check::below(
            "particular solution",
            A_CENTRAL,
            central_residual(&f, p, &s),
            config.tolerances.consistent,
        ));
    }
    if f.kind().has_pearson() {
        let closed = closed_form_r(&f, config.m, config.formula)?;
        report.checks.push(Check::below(
            "closed form",
            A_CENTRAL,
            central_residual(&f, &closed, &s),
            config.tolerances.identity,
        ));
        let d = rep
            .distance_to(&closed)
            .map_or(f64::INFINITY, |d| d / closed.max_abs().max(1.0));
        report
            .checks
            .push(Check::below("closed form in solution set", A_CENTRAL, d, TOL_MEMBER));
    } else if f.size() == 2 {
        let expected = free_n2_solution(&f)?;
        let d = rep
            .distance_to(&expected)
            .map_or(f64::INFINITY, |d| d / expected.max_abs());
        report.checks.push(Check::below(
            "N = 2 closed form modulo null space",
            A_CENTRAL,
            d,
            TOL_MEMBER,
        ));
        report.checks.push(Check::below(
            "identity in null space",
            A_CENTRAL,
            rep.nullspace_distance(&Mat::identity(2)),
            TOL_MEMBER,
        ));
    }
    report.solves.push(rep);
    Ok(())
}

/// `R` for building `T`: the closed form, or a solution of the identity.
fn operator_r(f: &FamilyInstance, config: &RunConfig) -> Result<Mat> {
    if f.kind().has_pearson() {
        return closed_form_r(f, config.m, config.formula);
    }
    if f.size() == 2 {
        return free_n2_solution(f);
    }
    let rep = solve_r(f, &sigma(f, config.m)?, &config.tolerances.solver())?;
    match (rep.status, rep.particular) {
        (SolveStatus::Inconsistent, _) | (_, None) => Err(Error::NotApplicable(format!(
            "a commuting operator for hermite_free N = {} (no R exists, residual {:.2e})",
            f.size(),
            rep.residual
        ))),
        (_, Some(p)) => Ok(p),
    }
}

fn cmd_build_t(config: &RunConfig, report: &mut Report) -> Result<()> {
    let f = family(config)?;
    let r = operator_r(&f, config)?;
    let t = build_t(&f, config.m, config.omega, &r)?;
    let mut rng = Lcg::new(config.seed);
    report.checks.push(Check::below(
        "assembled vs direct",
        A_T,
        t.self_check(&mut rng, 10)?,
        TOL_SELF,
    ));
    if config.check {
        let seq = sequence(&f, config.n_max.max(config.m + 3), config.nodes)?;
        let c = check_time_commutation(&seq, &t)?;
        report.checks.push(Check::below(
            "time coupling at M",
            A_TIME,
            c.at_m / c.scale,
            TOL_COUPLING,
        ));
        report.checks.push(Check::above(
            "reference coupling",
            A_TIME_REF,
            c.reference / c.scale,
            TOL_REFERENCE,
        ));
        let band = check_band_symmetry(seq.inner_product(), &t, config.omega, config.trials.max(1), &mut rng)?;
        report
            .checks
            .push(Check::below("band symmetry", A_BAND, band, TOL_BAND));
    }
    report
        .summary
        .push(format!("M = {}, Omega = {}", config.m, config.omega));
    report.details = serde_json::to_value(&t).expect("operator serializes");
    Ok(())
}

fn sweep_checks(sweep: &SweepSummary, tol: &Tolerances, sizes: &[usize], report: &mut Report) {
    for &n in sizes {
        let recs: Vec<_> = sweep.records.iter().filter(|r| r.size == n).collect();
        let label = format!("N = {n}");
        match n {
            1 | 2 => {
                let worst = recs.iter().fold(0.0f64, |m, r| m.max(r.residual));
                report.checks.push(Check::below(
                    &format!("{label} consistent"),
                    A_CENTRAL,
                    worst,
                    tol.consistent,
                ));
            }
            _ => {
                let least = recs.iter().fold(f64::INFINITY, |m, r| m.min(r.residual));
                let all = recs.iter().all(|r| r.status == "inconsistent");
                let mut c = Check::above(&format!("{label} inconsistent"), A_CENTRAL, least, tol.inconsistent);
                c.pass &= all;
                report.checks.push(c);
            }
        }
        if n == 2 {
            let (mut ident, mut closed) = (0.0f64, 0.0f64);
            for r in &recs {
                let Some(rep) = &r.report else {
                    ident = f64::INFINITY;
                    continue;
                };
                ident = ident.max(rep.nullspace_distance(&Mat::identity(2)));
                let spec = FamilySpec::hermite_free(2).with_free_params(r.alphas.clone(), r.ts.clone());
                let expected = build_family(&spec).and_then(|f| free_n2_solution(&f));
                closed = closed.max(match expected {
                    Ok(e) => rep.distance_to(&e).map_or(f64::INFINITY, |d| d / e.max_abs()),
                    Err(_) => f64::INFINITY,
                });
            }
            report
                .checks
                .push(Check::below("N = 2 identity in null space", A_CENTRAL, ident, TOL_MEMBER));
            report.checks.push(Check::below(
                "N = 2 closed form modulo null space",
                A_CENTRAL,
                closed,
                TOL_MEMBER,
            ));
        }
    }
    if sweep.any_ambiguous {
        report.guard = Some("a solve fell between the consistency thresholds".into());
    }
}

fn cmd_counterexample(config: &RunConfig, report: &mut Report) -> Result<()> {
    let tol = config.tolerances;
    let sweep = counterexample_sweep(&config.sizes, config.trials, config.seed, &tol.solver())?;
    sweep_checks(&sweep, &tol, &config.sizes, report);
    for &n in &config.sizes {
        let recs: Vec<_> = sweep.records.iter().filter(|r| r.size == n).collect();
        let statuses: Vec<&str> = recs.iter().map(|r| r.status.as_str()).collect();
        report.summary.push(format!("N = {n}: {}", statuses.join(", ")));
    }
    report.details = serde_json::to_value(&sweep.records).expect("records serialize");
    Ok(())
}

/// Per-instance numbers gathered by `regress`.
#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub label: String,
    pub pearson: f64,
    pub switching: f64,
    pub eigen: f64,
    pub orthogonality: f64,
    pub orthogonality_one_sided: f64,
    pub h_definiteness: f64,
    pub central: f64,
    pub central_m_squared: f64,
    pub membership: f64,
    pub self_check: f64,
    pub coupling: f64,
    pub reference: f64,
    pub band: f64,
}

/// Runs every grid check on one instance.
pub fn grid_instance(spec: &FamilySpec, n_max: usize, rng: &mut Lcg, tol: &Tolerances) -> Result<GridResult> {
    let f = build_family(spec)?;
    let pr = pearson_residuals(&f)?;
    let seq = sequence(&f, n_max, None)?;
    let ortho = orthogonality_residual(&seq)?;
    let mut out = GridResult {
        label: spec.label(),
        pearson: pr.phi.max(pr.psi),
        switching: switching_residual(&f)?,
        eigen: eigen_identity_residual(&seq, &family_operator(&f)?, &lambdas(&f, n_max)?)?,
        orthogonality: ortho.symmetric,
        orthogonality_one_sided: ortho.one_sided,
        h_definiteness: h_definiteness(&seq),
        central: 0.0,
        central_m_squared: 0.0,
        membership: 0.0,
        self_check: 0.0,
        coupling: 0.0,
        reference: f64::INFINITY,
        band: 0.0,
    };
    for m in 0..=4 {
        let s = sigma(&f, m)?;
        let r = closed_form_r(&f, m, RFormula::TwoMSquared)?;
        out.central = out.central.max(central_residual(&f, &r, &s));
        out.central_m_squared = out
            .central_m_squared
            .max(central_residual(&f, &closed_form_r(&f, m, RFormula::MSquared)?, &s));
        if m > 2 {
            continue;
        }
        let rep = solve_r(&f, &s, &tol.solver())?;
        out.membership = out
            .membership
            .max(rep.distance_to(&r).map_or(f64::INFINITY, |d| d / r.max_abs().max(1.0)));
        for nominal in [-0.5, 0.3, 1.0] {
            let omega = map_omega(f.kind(), nominal);
            let t = build_t(&f, m, omega, &r)?;
            out.self_check = out.self_check.max(t.self_check(rng, 3)?);
            let c = check_time_commutation(&seq, &t)?;
            out.coupling = out.coupling.max(c.at_m / c.scale);
            out.reference = out.reference.min(c.reference / c.scale);
            out.band = out
                .band
                .max(check_band_symmetry(seq.inner_product(), &t, omega, 3, rng)?);
        }
    }
    Ok(out)
}

/// Instances for the brute-force inner-product comparison.
pub fn oracle_instances() -> Vec<FamilySpec> {
    vec![
        FamilySpec::hermite_free(2).with_free_params(vec![1.0, 1.0], vec![1.0, 2.0]),
        FamilySpec::hermite(3, 3, 2.0),
        FamilySpec::laguerre(1, 3, 0.5),
        FamilySpec::gegenbauer(4, 0.5),
        FamilySpec::charlier(3, 1, 3.0),
    ]
}

/// Largest disagreement between the Gauss-rule and brute-force inner
/// products over `P_0..P_3` and a random pair of degree 3.
pub fn oracle_agreement(spec: &FamilySpec, rng: &mut Lcg) -> Result<f64> {
    let f = build_family(spec)?;
    let seq = sequence(&f, 3, None)?;
    let mut polys: Vec<MatPoly> = seq.p.clone();
    polys.push(rng.mat_poly(f.size(), 3));
    polys.push(rng.mat_poly(f.size(), 3));
    let mut worst: f64 = 0.0;
    for a in &polys {
        for b in &polys {
            let g = seq.inner_product().inner(a, b, None)?;
            let o = brute_force_inner(&f, a, b, ORACLE_STEPS)?;
            let scale = (a.max_coeff_norm() * b.max_coeff_norm()).max(f64::MIN_POSITIVE) * seq.h[0].max_abs();
            worst = worst.max((&g - &o).max_abs() / o.max_abs().max(scale));
        }
    }
    Ok(worst)
}

fn worst_by(results: &[GridResult], key: impl Fn(&GridResult) -> f64, larger: bool) -> (f64, String) {
    let mut best: Option<(f64, &str)> = None;
    for r in results {
        let v = key(r);
        let better = match best {
            None => true,
            Some((b, _)) => (larger && v > b) || (!larger && v < b) || v.is_nan(),
        };
        if better {
            best = Some((v, &r.label));
        }
    }
    best.map_or((0.0, String::new()), |(v, l)| (v, l.to_string()))
}

fn regress(config: &RunConfig, report: &mut Report) -> Result<()> {
    let tol = config.tolerances;
    let grid = verification_grid();
    let results: Vec<GridResult> = grid
        .par_iter()
        .enumerate()
        .map(|(i, spec)| grid_instance(spec, 8, &mut Lcg::new(config.seed.wrapping_add(i as u64)), &tol))
        .collect::<Result<_>>()?;
    let push =
        |report: &mut Report, name: &str, anchor: &str, key: &dyn Fn(&GridResult) -> f64, tolv: f64, above: bool| {
            let (v, at) = worst_by(&results, key, !above);
            let c = if above {
                Check::above(name, anchor, v, tolv)
            } else {
                Check::below(name, anchor, v, tolv)
            };
            report.checks.push(c.at(at));
        };
    push(report, "1 pearson", A_PHI, &|r| r.pearson, tol.identity, false);
    push(report, "1 switching", A_SWITCH, &|r| r.switching, tol.identity, false);
    push(report, "2 eigenvalue identity", A_EIGEN, &|r| r.eigen, TOL_EIGEN, false);
    push(report, "3 closed-form R", A_CENTRAL, &|r| r.central, tol.identity, false);
    push(
        report,
        "3 closed form in solution set",
        A_CENTRAL,
        &|r| r.membership,
        TOL_MEMBER,
        false,
    );
    push(report, "4 assembled T", A_T, &|r| r.self_check, TOL_SELF, false);
    push(
        report,
        "4 time coupling at M",
        A_TIME,
        &|r| r.coupling,
        TOL_COUPLING,
        false,
    );
    push(
        report,
        "4 reference coupling",
        A_TIME_REF,
        &|r| r.reference,
        TOL_REFERENCE,
        true,
    );
    push(report, "4 band symmetry", A_BAND, &|r| r.band, TOL_BAND, false);

    let free_two = FamilySpec::hermite_free(2);
    let mut sub = Report::new(&RunConfig::new(Command::SolveR).with_family(free_two));
    cmd_solve_r(&sub.config.clone(), &mut sub)?;
    for mut c in sub.checks {
        c.name = format!("5 {}", c.name);
        report.checks.push(c);
    }
    report.solves.extend(sub.solves);

    let sizes = [2, 3, 4, 5, 6];
    let sweep = counterexample_sweep(&sizes, config.trials.max(5), config.seed, &tol.solver())?;
    let mut sub = Report::new(config);
    sweep_checks(&sweep, &tol, &sizes, &mut sub);
    for mut c in sub.checks {
        c.name = format!("6 {}", c.name);
        report.checks.push(c);
    }
    report.guard = sub.guard;

    push(
        report,
        "7 orthogonality",
        A_ORTHO,
        &|r| r.orthogonality,
        TOL_ORTHO,
        false,
    );
    push(report, "7 H positive definite", A_HPD, &|r| r.h_definiteness, 0.0, true);
    let mut rng = Lcg::new(config.seed);
    let mut oracle = (0.0f64, String::new());
    for spec in oracle_instances() {
        let v = oracle_agreement(&spec, &mut rng)?;
        if v >= oracle.0 {
            oracle = (v, spec.label());
        }
    }
    report
        .checks
        .push(Check::below("7 trapezoid oracle", A_ORACLE, oracle.0, TOL_ORACLE).at(oracle.1));

    let (single, at) = worst_by(&results, |r| r.central_m_squared, true);
    report.summary.push(format!("{} grid instances", results.len()));
    report.summary.push(format!(
        "closed forms with M^2 in place of 2M^2: worst residual {single:.2e} ({at})"
    ));
    let (one_sided, at) = worst_by(&results, |r| r.orthogonality_one_sided, true);
    report.summary.push(format!(
        "orthogonality divided by |H_n| alone: worst {one_sided:.2e} ({at})"
    ));
    report.details = serde_json::to_value(&results).expect("grid results serialize");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors() {
        assert!(RunConfig::new(Command::SolveR).validate().is_err());
        let free = RunConfig::new(Command::VerifyPearson).with_family(FamilySpec::hermite_free(2));
        assert_eq!(error_exit_code(&run(&free).unwrap_err()), 1);
        let mut c = RunConfig::new(Command::Counterexample);
        c.sizes = vec![9];
        assert!(c.validate().is_err());
        c.sizes = vec![3];
        c.tolerances.consistent = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn verify_pearson_passes() {
        for spec in [FamilySpec::hermite(1, 3, 1.0), FamilySpec::charlier(2, 0, 1.0)] {
            let r = run(&RunConfig::new(Command::VerifyPearson).with_family(spec)).unwrap();
            assert!(r.pass, "{}", r.to_text());
            assert_eq!(r.exit_code(), 0);
        }
    }

    #[test]
    fn solve_r_free_two() {
        let r = run(&RunConfig::new(Command::SolveR).with_family(FamilySpec::hermite_free(2))).unwrap();
        assert!(r.pass, "{}", r.to_text());
        assert_eq!(r.solves[0].status, SolveStatus::AffineFamily);
        let r = run(&RunConfig::new(Command::SolveR).with_family(FamilySpec::hermite_free(3))).unwrap();
        assert_eq!(r.solves[0].status, SolveStatus::Inconsistent);
    }

    #[test]
    fn build_t_checks() {
        let mut c = RunConfig::new(Command::BuildT).with_family(FamilySpec::gegenbauer(2, 1.0));
        c.m = 2;
        c.omega = 0.3;
        c.check = true;
        let r = run(&c).unwrap();
        assert!(r.pass, "{}", r.to_text());
        let free = RunConfig::new(Command::BuildT).with_family(FamilySpec::hermite_free(3));
        assert_eq!(error_exit_code(&run(&free).unwrap_err()), 1);
    }

    #[test]
    fn report_round_trip() {
        let mut c = RunConfig::new(Command::Counterexample);
        c.sizes = vec![2, 3];
        c.trials = 2;
        let r = run(&c).unwrap();
        assert!(r.pass, "{}", r.to_text());
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.checks, r.checks);
        assert_eq!(back.schema, SCHEMA);
        assert!(r.to_text().contains("PASS"));
    }

    #[test]
    fn families_listing() {
        let r = run(&RunConfig::new(Command::Families)).unwrap();
        assert!(r.summary.iter().any(|l| l.starts_with("charlier")));
        assert!(r.checks.is_empty() && r.pass);
    }

    #[test]
    fn oracle_small() {
        let mut rng = Lcg::new(1);
        assert!(oracle_agreement(&FamilySpec::hermite(1, 2, 1.0), &mut rng).unwrap() < 1e-10);
    }
}

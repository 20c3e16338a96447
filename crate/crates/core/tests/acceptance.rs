//! Acceptance criteria 1-8, one line each. Library results are cross-checked
//! against oracles written independently here (finite differences, pointwise
//! weight evaluation, Simpson and trapezoid rules, a dense SVD).

use std::process::Command as Process;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use mvoptbl::families::{
    build_family, pearson_residuals, switching_residual, verification_grid, weight_eval, FamilyInstance, FamilyKind,
    FamilySpec,
};
use mvoptbl::matcore::{Mat, MatPoly};
use mvoptbl::mvop::{eigen_identity_residual, generate_mvop, orthogonality_residual, MvopSeq};
use mvoptbl::rightops::{eigenvalue_matrix, family_operator};
use mvoptbl::tbl::{
    build_t, check_band_symmetry, check_time_commutation, closed_form_r, counterexample_sweep, central_residual,
    free_n2_solution, map_omega, sigma, solve_r, Lcg, RFormula, SolveStatus, SolveTolerances, TOperator,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs(m: &Mat) -> f64 {
    m.max_abs()
}

fn sample_xs(f: &FamilyInstance) -> Vec<f64> {
    match f.kind() {
        FamilyKind::Hermite | FamilyKind::HermiteFree => vec![-2.3, -0.7, 0.15, 1.1, 2.6],
        FamilyKind::Laguerre => vec![0.4, 1.3, 2.9, 5.5, 8.2],
        FamilyKind::Gegenbauer => vec![-0.85, -0.3, 0.05, 0.45, 0.9],
        FamilyKind::Charlier => vec![0.0, 1.0, 2.0, 4.0, 7.0],
    }
}

/// Fourth-order central difference of `W(x)`.
fn fd_derivative(f: &FamilyInstance, x: f64) -> Mat {
    let h = 1e-3;
    let w = |t: f64| weight_eval(f, t).unwrap();
    let a = &(&w(x - 2.0 * h) - &w(x + 2.0 * h)) + &(&w(x + h) - &w(x - h)).scale(8.0);
    a.scale(1.0 / (12.0 * h))
}

/// Pearson equations checked pointwise with independently differenced weights.
fn pearson_oracle(f: &FamilyInstance) -> f64 {
    let g = build_family(&f.spec.bumped()).unwrap();
    let p = f.pearson().unwrap();
    let mut worst: f64 = 0.0;
    for x in sample_xs(f) {
        let w = weight_eval(f, x).unwrap();
        let lhs_phi = weight_eval(&g, x).unwrap();
        let rhs_phi = &w * &p.phi().eval(x);
        let lhs_psi = if f.kind() == FamilyKind::Charlier {
            let prev = if x >= 1.0 {
                weight_eval(&g, x - 1.0).unwrap()
            } else {
                Mat::zeros(f.size(), f.size())
            };
            &lhs_phi - &prev
        } else {
            fd_derivative(&g, x)
        };
        let rhs_psi = &w * &p.psi().eval(x);
        let scale = max_abs(&lhs_phi).max(max_abs(&rhs_psi)).max(f64::MIN_POSITIVE);
        worst = worst
            .max(max_abs(&(&lhs_phi - &rhs_phi)) / scale)
            .max(max_abs(&(&lhs_psi - &rhs_psi)) / scale);
    }
    worst
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut lib, mut oracle, mut at) = (0.0f64, 0.0f64, String::new());
    for spec in verification_grid() {
        let f = build_family(&spec).unwrap();
        let r = pearson_residuals(&f).unwrap();
        let v = r.phi.max(r.psi).max(switching_residual(&f).unwrap());
        if v > lib {
            lib = v;
            at = spec.label();
        }
        oracle = oracle.max(pearson_oracle(&f));
    }
    let t = start.elapsed();
    outcome(
        lib < 1e-10 && oracle < 1e-6 && t < Duration::from_secs(30),
        format!(
            "pearson/switching {lib:.2e} ({at}), pointwise oracle {oracle:.2e}, {:.1}s",
            t.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    for spec in verification_grid() {
        let f = build_family(&spec).unwrap();
        let seq = generate_mvop(&f, 8).unwrap();
        let lam: Vec<Mat> = (0..=8).map(|n| eigenvalue_matrix(&f, n).unwrap()).collect();
        let v = eigen_identity_residual(&seq, &family_operator(&f).unwrap(), &lam).unwrap();
        if v > worst.0 {
            worst = (v, spec.label());
        }
    }
    let t = start.elapsed();
    outcome(
        worst.0 < 1e-8 && t < Duration::from_secs(60),
        format!(
            "|P_n . D - Lambda_n P_n| {:.2e} ({}), n <= 8, {:.1}s",
            worst.0,
            worst.1,
            t.as_secs_f64()
        ),
    )
}

/// `(R - xS) W(x) - W(x) (R - xS)^T` at sample points.
fn central_pointwise(f: &FamilyInstance, r: &Mat, s: &Mat) -> f64 {
    let mut worst: f64 = 0.0;
    for x in sample_xs(f) {
        let w = weight_eval(f, x).unwrap();
        let a = r - &s.scale(x);
        let d = &(&a * &w) - &(&w * &a.transpose());
        worst = worst.max(max_abs(&d) / (max_abs(&w) * (max_abs(r) + x.abs() * max_abs(s)).max(1e-300)));
    }
    worst
}

fn criterion_3(m_squared_line: &mut String) -> Outcome {
    let (mut lib, mut oracle, mut m_squared, mut at) = (0.0f64, 0.0f64, 0.0f64, String::new());
    let mut m_squared_ok_at_zero = true;
    for spec in verification_grid() {
        let f = build_family(&spec).unwrap();
        for m in 0..=4 {
            let s = sigma(&f, m).unwrap();
            let r = closed_form_r(&f, m, RFormula::TwoMSquared).unwrap();
            let v = central_residual(&f, &r, &s);
            if v > lib {
                lib = v;
                at = format!("{} M={m}", spec.label());
            }
            oracle = oracle.max(central_pointwise(&f, &r, &s));
            let p = closed_form_r(&f, m, RFormula::MSquared).unwrap();
            let pv = central_residual(&f, &p, &s);
            m_squared = m_squared.max(pv);
            if m == 0 {
                m_squared_ok_at_zero &= pv < 1e-10;
            }
        }
    }
    *m_squared_line = format!(
        "criterion 3 with M^2 in place of 2M^2: {} worst residual {m_squared:.2e}; holds at M = 0: {m_squared_ok_at_zero}",
        if m_squared < 1e-10 { "PASS" } else { "FAIL" }
    );
    outcome(
        lib < 1e-10 && oracle < 1e-10,
        format!("closed-form R, M <= 4: {lib:.2e} ({at}), pointwise oracle {oracle:.2e}"),
    )
}

/// Composite Simpson on `[lo, hi]`.
fn simpson(lo: f64, hi: f64, panels: usize, g: impl Fn(f64) -> Mat) -> Mat {
    let h = (hi - lo) / (2 * panels) as f64;
    let mut acc = &g(lo) + &g(hi);
    for k in 1..2 * panels {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc = &acc + &g(lo + h * k as f64).scale(c);
    }
    acc.scale(h / 3.0)
}

/// `<F . T, G>_Omega - <F, G . T>_Omega` by Simpson on `[-12, Omega]`.
fn band_oracle(f: &FamilyInstance, t: &TOperator, omega: f64, rng: &mut Lcg) -> f64 {
    let n = f.size();
    let (a, b) = (rng.mat_poly(n, 3), rng.mat_poly(n, 3));
    let (at, bt) = (t.apply(&a).unwrap(), t.apply(&b).unwrap());
    let form = |p: &MatPoly, q: &MatPoly| {
        simpson(-12.0, omega, 4000, |x| {
            &(&p.eval(x) * &weight_eval(f, x).unwrap()) * &q.eval(x).transpose()
        })
    };
    let (l, r) = (form(&at, &b), form(&a, &bt));
    max_abs(&(&l - &r)) / max_abs(&l).max(max_abs(&r))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (mut coupling, mut reference, mut band) = (
        (0.0f64, String::new()),
        (f64::INFINITY, String::new()),
        (0.0f64, String::new()),
    );
    let mut rng = Lcg::new(11);
    for spec in verification_grid() {
        let f = build_family(&spec).unwrap();
        let seq = generate_mvop(&f, 5).unwrap();
        for m in 0..=2 {
            let r = closed_form_r(&f, m, RFormula::TwoMSquared).unwrap();
            for nominal in [-0.5, 0.3, 1.0] {
                let omega = map_omega(f.kind(), nominal);
                let t = build_t(&f, m, omega, &r).unwrap();
                let c = check_time_commutation(&seq, &t).unwrap();
                let label = || format!("{} M={m} Omega={omega}", spec.label());
                if c.at_m / c.scale > coupling.0 {
                    coupling = (c.at_m / c.scale, label());
                }
                if c.reference / c.scale < reference.0 {
                    reference = (c.reference / c.scale, label());
                }
                let b = check_band_symmetry(seq.inner_product(), &t, omega, 3, &mut rng).unwrap();
                if b > band.0 {
                    band = (b, label());
                }
            }
        }
    }
    // independent band integrals on smooth full-line weights
    let mut oracle: f64 = 0.0;
    let cases: Vec<(FamilySpec, usize, f64)> = vec![
        (FamilySpec::hermite(1, 1, 1.0), 0, 1.0),
        (FamilySpec::hermite(2, 3, 0.5), 1, 0.3),
        (FamilySpec::hermite(3, 2, 2.0), 2, -0.5),
        (FamilySpec::hermite_free(2), 1, 0.5),
    ];
    for (spec, m, omega) in cases {
        let f = build_family(&spec).unwrap();
        let r = if f.kind() == FamilyKind::HermiteFree {
            free_n2_solution(&f).unwrap()
        } else {
            closed_form_r(&f, m, RFormula::TwoMSquared).unwrap()
        };
        let t = build_t(&f, m, omega, &r).unwrap();
        oracle = oracle.max(band_oracle(&f, &t, omega, &mut rng));
    }
    let t = start.elapsed();
    outcome(
        coupling.0 < 1e-8 && reference.0 > 1e-3 && band.0 < 1e-8 && oracle < 1e-8 && t < Duration::from_secs(120),
        format!(
            "coupling {:.2e} ({}), reference {:.2e} ({}), band {:.2e} ({}), Simpson oracle {oracle:.2e}, {:.1}s",
            coupling.0,
            coupling.1,
            reference.0,
            reference.1,
            band.0,
            band.1,
            t.as_secs_f64()
        ),
    )
}

/// Relative least-squares residual of `R W - W R^T = x (S W - W S^T)` imposed
/// at many points, solved densely by SVD.
fn pointwise_solve(f: &FamilyInstance, s: &Mat) -> (f64, usize) {
    let n = f.size();
    let xs: Vec<f64> = (0..8 * n).map(|k| -2.5 + 5.0 * k as f64 / (8 * n - 1) as f64).collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for x in xs {
        let w = weight_eval(f, x).unwrap();
        let b = (&(s * &w) - &(&w * &s.transpose())).scale(x);
        for i in 0..n {
            for j in i + 1..n {
                let mut row = vec![0.0; n * n];
                for k in 0..n {
                    row[i * n + k] += w[(k, j)];
                    row[j * n + k] -= w[(i, k)];
                }
                let scale = row.iter().fold(b[(i, j)].abs(), |m, v| m.max(v.abs()));
                rows.push(row.iter().map(|v| v / scale).collect::<Vec<_>>());
                rhs.push(b[(i, j)] / scale);
            }
        }
    }
    let a = DMatrix::from_fn(rows.len(), n * n, |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    let x = svd.solve(&b, tol).unwrap();
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    ((&a * x - &b).norm() / b.norm().max(f64::MIN_POSITIVE), n * n - rank)
}

fn criterion_5() -> Outcome {
    let f = build_family(&FamilySpec::hermite_free(2)).unwrap();
    let s = sigma(&f, 0).unwrap();
    let rep = solve_r(&f, &s, &SolveTolerances::default()).unwrap();
    let expected = Mat::from_rows(&[vec![0.0, -1.0], vec![-f.t[1] / f.t[0], 0.0]]).unwrap();
    let dist = rep.distance_to(&expected).unwrap_or(f64::INFINITY);
    let ident = rep.nullspace_distance(&Mat::identity(2));
    let pointwise = central_pointwise(&f, &expected, &s);
    let (oracle_res, oracle_null) = pointwise_solve(&f, &s);
    outcome(
        rep.status == SolveStatus::AffineFamily
            && dist < 1e-8
            && ident < 1e-8
            && pointwise < 1e-12
            && oracle_res < 1e-10
            && oracle_null >= 1,
        format!(
            "status {}, null space dim {}, [[0,-1],[-t2/t1,0]] at distance {dist:.1e}, I at {ident:.1e}; \
             SVD oracle residual {oracle_res:.1e}, null dim {oracle_null}",
            rep.status.as_str(),
            rep.nullspace.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let sizes = [3, 4, 5, 6];
    let sweep = counterexample_sweep(&sizes, 5, 7, &SolveTolerances::default()).unwrap();
    let least = sweep.records.iter().fold(f64::INFINITY, |m, r| m.min(r.residual));
    let count = sweep.records.len();
    let per_size = sizes
        .iter()
        .all(|n| sweep.records.iter().filter(|r| r.size == *n).count() >= 6);
    let f3 = build_family(&FamilySpec::hermite_free(3)).unwrap();
    let (oracle, _) = pointwise_solve(&f3, &sigma(&f3, 0).unwrap());
    let t = start.elapsed();
    outcome(
        sweep.large_inconsistent
            && !sweep.any_ambiguous
            && per_size
            && least > 1e-3
            && oracle > 1e-3
            && t < Duration::from_secs(30),
        format!(
            "{count} solves, all inconsistent: {}, smallest residual {least:.2e}, dead zone hits: {}; \
             SVD oracle N=3 residual {oracle:.2e}, {:.2}s",
            sweep.large_inconsistent,
            sweep.any_ambiguous,
            t.as_secs_f64()
        ),
    )
}

/// Brute-force `<F, G>` written independently of the library's oracle.
fn brute_inner(f: &FamilyInstance, a: &MatPoly, b: &MatPoly) -> Mat {
    let n = f.size();
    let integrand = |x: f64, jac: f64| -> Mat {
        if jac == 0.0 {
            return Mat::zeros(n, n);
        }
        (&(&a.eval(x) * &weight_eval(f, x).unwrap()) * &b.eval(x).transpose()).scale(jac)
    };
    let trap = |lo: f64, hi: f64, steps: usize, map: &dyn Fn(f64) -> (f64, f64)| -> Mat {
        let h = (hi - lo) / steps as f64;
        let mut acc = Mat::zeros(n, n);
        for k in 0..=steps {
            let (x, jac) = map(lo + h * k as f64);
            let c = if k == 0 || k == steps { 0.5 * h } else { h };
            acc = &acc + &integrand(x, jac * c);
        }
        acc
    };
    match f.kind() {
        FamilyKind::Hermite | FamilyKind::HermiteFree => trap(-12.0, 12.0, 6000, &|x| (x, 1.0)),
        // x = v^2 removes the x^(nu+1) endpoint behaviour
        FamilyKind::Laguerre => trap(0.0, 13.0, 6000, &|v| (v * v, 2.0 * v)),
        // double-exponential map onto (-1, 1)
        FamilyKind::Gegenbauer => trap(-4.5, 4.5, 6000, &|s| {
            let u = std::f64::consts::FRAC_PI_2 * s.sinh();
            (u.tanh(), std::f64::consts::FRAC_PI_2 * s.cosh() / (u.cosh() * u.cosh()))
        }),
        FamilyKind::Charlier => (0..=250).fold(Mat::zeros(n, n), |acc, x| &acc + &integrand(x as f64, 1.0)),
    }
}

fn h_definite(seq: &MvopSeq) -> bool {
    seq.h.iter().all(|h| {
        let ev = h.symmetric_eigenvalues();
        h.is_symmetric(1e-12 * h.max_abs()) && ev.iter().all(|v| *v > 0.0)
    })
}

fn criterion_7(info: &mut String) -> Outcome {
    let (mut ortho, mut one_sided, mut definite) = ((0.0f64, String::new()), (0.0f64, String::new()), true);
    for spec in verification_grid() {
        let f = build_family(&spec).unwrap();
        let seq = generate_mvop(&f, 8).unwrap();
        let o = orthogonality_residual(&seq).unwrap();
        if o.symmetric > ortho.0 {
            ortho = (o.symmetric, spec.label());
        }
        if o.one_sided > one_sided.0 {
            one_sided = (o.one_sided, spec.label());
        }
        definite &= h_definite(&seq);
    }
    *info = format!(
        "criterion 7 (|<P_m,P_n>| / |H_n| without symmetrizing): {} worst {:.2e} ({})",
        if one_sided.0 < 1e-9 { "PASS" } else { "FAIL" },
        one_sided.0,
        one_sided.1
    );
    let mut rng = Lcg::new(5);
    let mut oracle = (0.0f64, String::new());
    let instances = [
        FamilySpec::hermite_free(2).with_free_params(vec![1.0, 1.0], vec![1.0, 2.0]),
        FamilySpec::hermite(1, 3, 1.0),
        FamilySpec::laguerre(2, 3, 0.5),
        FamilySpec::gegenbauer(2, 2.0),
        FamilySpec::charlier(3, 2, 1.0),
    ];
    for spec in instances {
        let f = build_family(&spec).unwrap();
        let seq = generate_mvop(&f, 2).unwrap();
        let ip = seq.inner_product();
        let n = f.size();
        let polys = [MatPoly::identity(n), rng.mat_poly(n, 2), rng.mat_poly(n, 3)];
        for a in &polys {
            for b in &polys {
                let g = ip.inner(a, b, None).unwrap();
                let o = brute_inner(&f, a, b);
                let v = max_abs(&(&g - &o)) / max_abs(&o);
                if v > oracle.0 {
                    oracle = (v, spec.label());
                }
            }
        }
    }
    outcome(
        ortho.0 < 1e-9 && definite && oracle.0 < 1e-9,
        format!(
            "orthogonality {:.2e} ({}), H_n positive definite: {definite}, brute force vs Gauss {:.2e} ({})",
            ortho.0, ortho.1, oracle.0, oracle.1
        ),
    )
}

/// Removes the `"timestamp": {...}` object from a pretty-m_squared_line report.
fn strip_timestamp(json: &str) -> String {
    let Some(start) = json.find("\"timestamp\"") else {
        return json.to_string();
    };
    let end = start + json[start..].find('}').expect("timestamp object closes") + 1;
    format!("{}{}", &json[..start], &json[end..])
}

fn criterion_8() -> Outcome {
    let run = |threads: &str| {
        let out = Process::new(env!("CARGO_BIN_EXE_mvoptbl"))
            .args(["regress", "--seed", "7", "--format", "json"])
            .env("MVOPTBL_THREADS", threads)
            .output()
            .expect("binary runs");
        (out.status.code(), String::from_utf8(out.stdout).unwrap())
    };
    let (c1, a) = run("4");
    let (c2, b) = run("1");
    let (sa, sb) = (strip_timestamp(&a), strip_timestamp(&b));
    outcome(
        sa == sb && a.contains("\"timestamp\"") && c1 == Some(0) && c2 == Some(0),
        format!(
            "two runs of regress --seed 7: identical modulo timestamp: {}, exit codes {c1:?} {c2:?}",
            sa == sb
        ),
    )
}

fn main() {
    let mut m_squared_line = String::new();
    let mut one_sided = String::new();
    let criteria: Vec<(u8, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(|| criterion_3(&mut m_squared_line))),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(|| criterion_7(&mut one_sided))),
        (8, Box::new(criterion_8)),
    ];
    let mut failed = Vec::new();
    for (k, run) in criteria {
        let o = run();
        println!("criterion {k}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(k);
        }
    }
    println!("{m_squared_line}");
    println!("{one_sided}");
    if failed.is_empty() {
        println!("acceptance: all 8 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}

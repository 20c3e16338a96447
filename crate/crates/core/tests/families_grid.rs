use mvoptbl::families::{
    build_family, pearson_residuals, switching_residual, verification_grid, weight_eval, weight_from_factors,
    FamilyKind, FamilySpec,
};
use mvoptbl::matcore::Degree;

#[test]
fn pearson_and_switching_on_grid() {
    let mut worst = (0.0f64, String::new());
    for spec in verification_grid() {
        let f = build_family(&spec).unwrap();
        let r = pearson_residuals(&f).unwrap();
        let s = switching_residual(&f).unwrap();
        let m = r.phi.max(r.psi).max(s);
        if m > worst.0 {
            worst = (m, spec.label());
        }
        assert!(m < 1e-10, "{}: {r:?} switching {s:e}", spec.label());
    }
    eprintln!("worst residual {:e} at {}", worst.0, worst.1);
}

#[test]
fn non_unit_extras_also_satisfy_pearson() {
    let specs = [
        FamilySpec::hermite(2, 4, 1.0).with_lambda(1.7),
        FamilySpec::laguerre(2, 4, 0.5).with_lambda(0.6),
        FamilySpec::laguerre(3, 4, 2.0).with_rho(0.7).with_c_shift(0.4),
        FamilySpec::laguerre(1, 3, 1.0).with_lag_a(1.5),
        FamilySpec::hermite(3, 4, 1.0).with_c_shift(1.25),
    ];
    for spec in specs {
        let f = build_family(&spec).unwrap();
        let r = pearson_residuals(&f).unwrap();
        assert!(r.phi.max(r.psi) < 1e-10, "{}: {r:?}", spec.label());
    }
}

#[test]
fn structural_invariants() {
    for n in 1..=6 {
        for nu in [0.5, 1.0, 2.0] {
            let mut specs = vec![];
            for set in [1, 2, 3] {
                specs.push(FamilySpec::hermite(set, n, nu));
                specs.push(FamilySpec::laguerre(set, n, nu));
            }
            specs.push(FamilySpec::gegenbauer(n - 1, nu));
            specs.push(FamilySpec::charlier(n, nu as u32, 1.0));
            specs.push(FamilySpec::hermite_free(n));
            for spec in specs {
                let f = build_family(&spec).unwrap();
                assert!(f.alpha.iter().chain(&f.t).all(|v| *v > 0.0));
                if f.kind() == FamilyKind::Gegenbauer {
                    // leading coefficients cancel for this family
                    assert!(f.q_poly.degree() <= Degree::Finite(2 * n - 2));
                } else {
                    assert_eq!(f.q_poly.degree(), Degree::Finite(2 * n - 2), "{}", spec.label());
                }
                for i in 0..n {
                    let e = f.l_poly.entry(i, i);
                    assert!(e[0] == 1.0 && e[1..].iter().all(|c| *c == 0.0), "unit diagonal");
                }
                if let Some(p) = &f.pearson {
                    let tol = 1e-12 * (1.0 + p.psi1.max_abs());
                    match f.kind() {
                        FamilyKind::Hermite => assert_eq!(p.phi2.max_abs(), 0.0),
                        FamilyKind::Laguerre => assert_eq!(p.phi0.max_abs(), 0.0),
                        FamilyKind::Charlier => assert!((&p.psi0 - &p.phi0).max_abs() == 0.0),
                        FamilyKind::Gegenbauer => {
                            let r = &p.phi2 - &p.psi1.scale(1.0 / (2.0 * nu + n as f64));
                            assert!(r.max_abs() < tol);
                        }
                        FamilyKind::HermiteFree => unreachable!(),
                    }
                }
            }
        }
    }
}

#[test]
fn weight_matches_factorization_and_is_positive() {
    let mut rng = mvoptbl::tbl::Lcg::new(3);
    for spec in verification_grid().into_iter().step_by(7) {
        let f = build_family(&spec).unwrap();
        for _ in 0..10 {
            let x = match f.kind() {
                FamilyKind::Hermite => rng.uniform(-3.0, 3.0),
                FamilyKind::Laguerre => rng.uniform(0.01, 8.0),
                FamilyKind::Gegenbauer => rng.uniform(-0.99, 0.99),
                _ => rng.uniform(0.0, 12.0).floor(),
            };
            let w = weight_eval(&f, x).unwrap();
            let parts = weight_from_factors(&f, x).unwrap();
            assert!((&w - &parts).max_abs() <= 1e-12 * w.max_abs());
            assert!((&w - &w.transpose()).max_abs() <= 1e-14 * w.max_abs());
            let ev = w.symmetric_eigenvalues();
            assert!(ev.iter().all(|e| *e > 0.0), "{}: {ev:?} at {x}", spec.label());
        }
    }
}

// Invariants over randomly drawn parameters.
use proptest::prelude::*;

use mvoptbl::families::{build_family, FamilySpec};
use mvoptbl::matcore::{Mat, MatPoly};
use mvoptbl::mvop::{generate_mvop, time_limit, InnerProduct};
use mvoptbl::rightops::{apply, family_operator};
use mvoptbl::tbl::{
    build_t, check_band_symmetry, closed_form_r, central_residual, central_system, free_n2_solution, sigma, solve_r, Lcg,
    RFormula, SolveStatus, SolveTolerances,
};

fn pearson_spec(kind: u8, set: u8, size: usize, nu: f64, a: f64) -> FamilySpec {
    match kind {
        0 => FamilySpec::hermite(set, size, nu),
        1 => FamilySpec::laguerre(set, size, nu),
        2 => FamilySpec::gegenbauer(2 * (size / 2), nu),
        _ => FamilySpec::charlier(size, nu.round() as u32, a),
    }
}

fn arb_pearson() -> impl Strategy<Value = FamilySpec> {
    (0u8..4, 1u8..=3, 1usize..=4, 0.5f64..3.0, 0.3f64..3.0).prop_map(|(k, s, n, nu, a)| pearson_spec(k, s, n, nu, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_solves_identity(spec in arb_pearson(), m in 0usize..6) {
        let f = build_family(&spec).unwrap();
        let r = closed_form_r(&f, m, RFormula::TwoMSquared).unwrap();
        prop_assert!(central_residual(&f, &r, &sigma(&f, m).unwrap()) < 1e-10);
    }

    #[test]
    fn solution_set_contains_closed_form(spec in arb_pearson(), m in 0usize..3) {
        let f = build_family(&spec).unwrap();
        let s = sigma(&f, m).unwrap();
        let rep = solve_r(&f, &s, &SolveTolerances::default()).unwrap();
        prop_assert!(rep.status != SolveStatus::Inconsistent);
        let r = closed_form_r(&f, m, RFormula::TwoMSquared).unwrap();
        prop_assert!(rep.distance_to(&r).unwrap() < 1e-8 * r.max_abs().max(1.0));
        // the identity always solves the homogeneous system
        prop_assert!(rep.nullspace_contains(&Mat::identity(f.size()), 1e-8));
        let n = f.size();
        prop_assert!(rep.rows_total <= 2 * n * n * n && rep.cols == n * n);
    }

    #[test]
    fn free_two_is_always_affine(al in prop::collection::vec(0.25f64..4.0, 2), ts in prop::collection::vec(0.25f64..4.0, 2)) {
        let f = build_family(&FamilySpec::hermite_free(2).with_free_params(al, ts)).unwrap();
        let s = sigma(&f, 0).unwrap();
        let rep = solve_r(&f, &s, &SolveTolerances::default()).unwrap();
        prop_assert_eq!(rep.status, SolveStatus::AffineFamily);
        let r = free_n2_solution(&f).unwrap();
        prop_assert!(central_residual(&f, &r, &s) < 1e-12);
        prop_assert!(rep.distance_to(&r).unwrap() < 1e-8 * r.max_abs());
    }

    #[test]
    fn assembled_t_matches_direct(spec in arb_pearson(), m in 0usize..4, omega in -1.0f64..3.0, seed in any::<u64>()) {
        let f = build_family(&spec).unwrap();
        let t = build_t(&f, m, omega, &closed_form_r(&f, m, RFormula::TwoMSquared).unwrap()).unwrap();
        prop_assert!(t.self_check(&mut Lcg::new(seed), 3).unwrap() < 1e-11);
        prop_assert!(t.apply(&MatPoly::zero(f.size())).unwrap().is_zero());
    }

    #[test]
    fn d_is_symmetric(spec in arb_pearson(), seed in any::<u64>()) {
        let f = build_family(&spec).unwrap();
        let d = family_operator(&f).unwrap();
        let ip = InnerProduct::new(&f, 40).unwrap();
        let mut rng = Lcg::new(seed);
        let (a, b) = (rng.mat_poly(f.size(), 3), rng.mat_poly(f.size(), 3));
        let l = ip.inner(&apply(&d, &a).unwrap(), &b, None).unwrap();
        let r = ip.inner(&a, &apply(&d, &b).unwrap(), None).unwrap();
        prop_assert!((&l - &r).max_abs() < 1e-8 * l.max_abs().max(r.max_abs()));
    }

    #[test]
    fn t_is_symmetric_on_full_support(spec in arb_pearson(), m in 0usize..3, omega in -1.0f64..2.0, seed in any::<u64>()) {
        let f = build_family(&spec).unwrap();
        let t = build_t(&f, m, omega, &closed_form_r(&f, m, RFormula::TwoMSquared).unwrap()).unwrap();
        let ip = InnerProduct::new(&f, 40).unwrap();
        let mut rng = Lcg::new(seed);
        let (a, b) = (rng.mat_poly(f.size(), 3), rng.mat_poly(f.size(), 3));
        let l = ip.inner(&t.apply(&a).unwrap(), &b, None).unwrap();
        let r = ip.inner(&a, &t.apply(&b).unwrap(), None).unwrap();
        prop_assert!((&l - &r).max_abs() < 1e-8 * l.max_abs().max(r.max_abs()));
    }

    #[test]
    fn hermite_band_symmetry_any_omega(set in 1u8..=3, n in 1usize..=3, m in 0usize..3, omega in -1.5f64..2.5, seed in any::<u64>()) {
        let f = build_family(&FamilySpec::hermite(set, n, 1.0)).unwrap();
        let t = build_t(&f, m, omega, &closed_form_r(&f, m, RFormula::TwoMSquared).unwrap()).unwrap();
        let ip = InnerProduct::new(&f, 40).unwrap();
        prop_assert!(check_band_symmetry(&ip, &t, omega, 2, &mut Lcg::new(seed)).unwrap() < 1e-8);
    }

    #[test]
    fn time_limit_is_a_projection(spec in arb_pearson(), k in 0usize..4, seed in any::<u64>()) {
        let f = build_family(&spec).unwrap();
        let seq = generate_mvop(&f, 5).unwrap();
        let g = Lcg::new(seed).mat_poly(f.size(), 5);
        let once = time_limit(&seq, &g, k).unwrap();
        let twice = time_limit(&seq, &once, k).unwrap();
        prop_assert!((&once - &twice).max_coeff_norm() < 1e-8 * once.max_coeff_norm().max(1.0));
    }

    #[test]
    fn system_rows_are_scaled(spec in arb_pearson(), m in 0usize..3) {
        let f = build_family(&spec).unwrap();
        let (a, b, _) = central_system(&f, &sigma(&f, m).unwrap());
        for r in 0..a.rows() {
            let row_max = (0..a.cols()).fold(b[r].abs(), |acc, c| acc.max(a[(r, c)].abs()));
            prop_assert!(row_max == 0.0 || (row_max - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lcg_uniform_in_range(seed in any::<u64>(), lo in -5.0f64..5.0, width in 0.1f64..10.0) {
        let mut a = Lcg::new(seed);
        let mut b = Lcg::new(seed);
        for _ in 0..50 {
            let v = a.uniform(lo, lo + width);
            prop_assert!(v >= lo && v < lo + width);
            prop_assert_eq!(v, b.uniform(lo, lo + width));
        }
    }
}

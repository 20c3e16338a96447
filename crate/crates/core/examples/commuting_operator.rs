// The operator T for a Laguerre-type weight: closed-form R, then the
// time- and band-limiting checks.
//
// $ cargo run --example commuting_operator
use mvoptbl::families::{build_family, FamilySpec};
use mvoptbl::mvop::generate_mvop;
use mvoptbl::tbl::{
    build_t, check_band_symmetry, check_time_commutation, closed_form_r, central_residual, sigma, Lcg, RFormula,
};

fn main() {
    let f = build_family(&FamilySpec::laguerre(2, 3, 1.0)).unwrap();
    let seq = generate_mvop(&f, 6).unwrap();
    let mut rng = Lcg::new(1);
    for m in 0..3 {
        let r = closed_form_r(&f, m, RFormula::TwoMSquared).unwrap();
        let s = sigma(&f, m).unwrap();
        let single = closed_form_r(&f, m, RFormula::MSquared).unwrap();
        let omega = 3.0;
        let t = build_t(&f, m, omega, &r).unwrap();
        let c = check_time_commutation(&seq, &t).unwrap();
        let band = check_band_symmetry(seq.inner_product(), &t, omega, 4, &mut rng).unwrap();
        println!(
            "M={m}: identity {:.1e} (M^2 variant {:.1e})  coupling {:.1e} vs {:.1e}  band {:.1e}",
            central_residual(&f, &r, &s),
            central_residual(&f, &single, &s),
            c.at_m / c.scale,
            c.reference / c.scale,
            band
        );
    }
}

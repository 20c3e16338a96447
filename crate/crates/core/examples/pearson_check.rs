// Pearson equations and symmetry of Phi, Psi for one instance of each family.
//
// $ cargo run --example pearson_check
use mvoptbl::families::{build_family, pearson_residuals, switching_residual, FamilySpec};

fn main() {
    let specs = [
        FamilySpec::hermite(1, 3, 1.0),
        FamilySpec::hermite(2, 3, 0.5).with_lambda(2.0),
        FamilySpec::laguerre(3, 4, 2.0),
        FamilySpec::gegenbauer(2, 1.0),
        FamilySpec::charlier(3, 1, 0.5),
    ];
    for spec in specs {
        let f = build_family(&spec).unwrap();
        let r = pearson_residuals(&f).unwrap();
        let s = switching_residual(&f).unwrap();
        println!(
            "{:<32} phi {:.1e}  psi {:.1e}  switching {:.1e}",
            spec.label(),
            r.phi,
            r.psi,
            s
        );
    }
    let p = build_family(&FamilySpec::laguerre(1, 2, 1.0)).unwrap();
    println!("\nlaguerre psi1:\n{:?}", p.pearson().unwrap().psi1);
}

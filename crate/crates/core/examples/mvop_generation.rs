// Monic matrix orthogonal polynomials by Gram-Schmidt against the Gauss rule.
use mvoptbl::families::{build_family, FamilySpec};
use mvoptbl::mvop::{eigen_identity_residual, generate_mvop, orthogonality_residual, time_limit};
use mvoptbl::rightops::{eigenvalue_matrix, family_operator};

fn main() {
    let f = build_family(&FamilySpec::gegenbauer(2, 1.0)).unwrap();
    let seq = generate_mvop(&f, 6).unwrap();
    println!("P_1 =\n{:?}", seq.p[1]);
    println!("H_2 =\n{:?}", seq.h[2]);

    let o = orthogonality_residual(&seq).unwrap();
    println!("orthogonality {:.1e} (worst pair {:?})", o.symmetric, o.worst_pair);

    let d = family_operator(&f).unwrap();
    let lam: Vec<_> = (0..=6).map(|n| eigenvalue_matrix(&f, n).unwrap()).collect();
    println!(
        "P_n . D = Lambda_n P_n up to {:.1e}",
        eigen_identity_residual(&seq, &d, &lam).unwrap()
    );

    // projecting P_5 onto span{P_0..P_3} gives zero
    let proj = time_limit(&seq, &seq.p[5], 3).unwrap();
    println!("|chi_T P_5| = {:.1e}", proj.max_coeff_norm());
}

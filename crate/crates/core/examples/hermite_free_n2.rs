// Free-parameter Hermite weight, N = 2: R exists and is unique up to
// multiples of the identity.
use mvoptbl::families::{build_family, FamilySpec};
use mvoptbl::matcore::Mat;
use mvoptbl::tbl::{build_t, check_band_symmetry, free_n2_solution, sigma, solve_r, Lcg, SolveTolerances};

fn main() {
    let f = build_family(&FamilySpec::hermite_free(2)).unwrap();
    let rep = solve_r(&f, &sigma(&f, 1).unwrap(), &SolveTolerances::default()).unwrap();
    println!("status {:?}, null space dimension {}", rep.status, rep.nullspace.len());
    let r = free_n2_solution(&f).unwrap();
    println!("R = {:?}", r.to_rows());
    println!("distance to solution set {:.1e}", rep.distance_to(&r).unwrap());
    println!(
        "R + 3I also solves: {:.1e}",
        rep.distance_to(&(&r + &Mat::identity(2).scale(3.0))).unwrap()
    );

    let t = build_t(&f, 1, 0.5, &r).unwrap();
    let ip = mvoptbl::mvop::InnerProduct::new(&f, 40).unwrap();
    let band = check_band_symmetry(&ip, &t, 0.5, 5, &mut Lcg::new(2)).unwrap();
    println!("band symmetry {band:.1e}");
}

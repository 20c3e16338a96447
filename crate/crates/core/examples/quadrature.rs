// Gauss rules from the three-term recurrences (Golub-Welsch).
use mvoptbl::classical::{charlier_sum_rule, gauss_rule, BaseWeight};

fn main() {
    let rules = [
        ("gaussian", BaseWeight::Gaussian),
        ("laguerre x^1.5", BaseWeight::GenLaguerre { exponent: 1.5 }),
        ("jacobi (1-x^2)^0.5", BaseWeight::Jacobi { alpha: 0.5, beta: 0.5 }),
    ];
    for (name, base) in rules {
        let q = gauss_rule(base, 20).unwrap();
        let mass = q.integrate(|_| 1.0);
        let second = q.integrate(|x| x * x);
        println!("{name:>20}: mass {mass:.15}  <x^2> {second:.15}");
    }
    // sqrt(pi), Gamma(2.5), pi/2 for the masses.

    let q = charlier_sum_rule(3.0, 1e-16, 40).unwrap();
    println!(
        "{:>20}: {} terms, mass {:.15} (e^3 = {:.15})",
        "poisson a=3",
        q.len(),
        q.integrate(|_| 1.0),
        3f64.exp()
    );
}

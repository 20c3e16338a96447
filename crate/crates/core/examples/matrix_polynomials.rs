// Matrix polynomials and the binomial power (I + A)^x of a nilpotent A.
use mvoptbl::families::nilpotent_binomial_power;
use mvoptbl::matcore::{Mat, MatPoly};

fn main() {
    let a = Mat::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.5, 2.0, 0.0]]).unwrap();
    let p = nilpotent_binomial_power(&a, 0.0).unwrap();
    println!("(I + A)^x has degree {:?}", p.degree());
    // at integer x it agrees with repeated multiplication
    let direct = (&Mat::identity(3) + &a).powi(4);
    println!("|P(4) - (I + A)^4| = {:.1e}", (&p.eval(4.0) - &direct).max_abs());

    let x = MatPoly::monomial(Mat::identity(3), 1);
    let q = &(&p * &x) + &p.adjoint();
    println!("deg(P x + P^T) = {:?}, value at 1:\n{:?}", q.degree(), q.eval(1.0));
}

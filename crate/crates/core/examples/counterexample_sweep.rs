// For N >= 3 the free Hermite weight admits no R: every draw is inconsistent.
//
// $ cargo run --release --example counterexample_sweep
use mvoptbl::tbl::{counterexample_sweep, SolveTolerances};

fn main() {
    let sweep = counterexample_sweep(&[2, 3, 4, 5, 6], 5, 7, &SolveTolerances::default()).unwrap();
    for r in &sweep.records {
        let draw = r.draw.map_or("default".to_string(), |d| format!("draw {d}"));
        println!("N={} {:<8} {:<14} residual {:.2e}", r.size, draw, r.status, r.residual);
    }
    println!(
        "N=2 solvable: {}, N>2 inconsistent: {}",
        sweep.small_solvable, sweep.large_inconsistent
    );
}

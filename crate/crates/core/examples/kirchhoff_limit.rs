//! Locking-freeness: errors stay put as the plate thins, and the discrete
//! Kirchhoff deviation scales like t^2.
//!
//! Usage: `cargo run --example kirchhoff_limit -- [level]`

use plate_iga::assembly::MaterialParams;
use plate_iga::benchmarks::{case1, solve_case};
use plate_iga::norms::{error_norms, kirchhoff_deviation};

fn main() -> plate_iga::Result<()> {
    let level: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let m = MaterialParams::default();
    let case = case1();
    println!("clamped square, p = 3, alpha = 2, {level} x {level} elements");
    println!("{:>8} {:>12} {:>12} {:>14} {:>12}", "t", "theta_H1", "w_H1", "|theta-grad w|", "/ t^2");
    for t in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        let sol = solve_case(&case, 3, 2, t, level, None, 1e-10, m)?;
        let exact = case.exact(t, &m).expect("closed form");
        let r = error_norms(&sol, &exact, None)?;
        let dev = kirchhoff_deviation(&sol, None)?;
        println!(
            "{t:>8.0e} {:>12.4e} {:>12.4e} {:>14.4e} {:>12.4e}",
            r.err_theta_h1,
            r.err_w_h1,
            dev,
            dev / (t * t)
        );
    }
    Ok(())
}

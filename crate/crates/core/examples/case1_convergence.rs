//! Convergence of the clamped square against its closed-form solution.
//!
//! Usage: `cargo run --example case1_convergence -- [p] [alpha] [t]`

use plate_iga::benchmarks::{case1, run_convergence_study, StudyParams};
use plate_iga::norms::least_squares_slope;

fn main() -> plate_iga::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let alpha: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(p - 1);
    let t: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);

    let params = StudyParams::new(p, alpha, t, vec![4, 8, 16, 32]);
    let res = run_convergence_study(&case1(), &params)?;
    println!("p = {p}, alpha = {alpha}, t = {t:e}");
    println!("{:>5} {:>10} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "level", "h", "n_dof", "theta_H1", "theta_L2", "w_H1", "w_L2", "t*shear");
    for row in &res.rows {
        let r = &row.report;
        println!(
            "{:>5} {:>10.4e} {:>7} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            row.level, r.h, r.n_dof, r.err_theta_h1, r.err_theta_l2, r.err_w_h1, r.err_w_l2,
            r.err_shear_scaled
        );
    }
    let fmt = |s: &[Option<f64>]| {
        s.iter()
            .map(|v| v.map_or("-".to_string(), |v| format!("{v:.3}")))
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("theta H1 slopes: {}", fmt(&res.slope_theta_h1));
    println!("w H1 slopes:     {}", fmt(&res.slope_w_h1));
    let hs = res.hs();
    if let Some(s) = least_squares_slope(&res.column(|r| r.err_theta_l2), &hs) {
        println!("theta L2 least-squares slope: {s:.3}");
    }
    Ok(())
}

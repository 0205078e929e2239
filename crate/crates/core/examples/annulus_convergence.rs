//! Convergence on the quarter annulus against a fine reference solution.
//!
//! Usage: `cargo run --release --example annulus_convergence -- [case] [t] [reference_level]`
//! with `case` one of `case2`, `case3-uniform`, `case3-adapted`.

use std::time::Instant;

use plate_iga::benchmarks::{
    reference_solution, run_convergence_study_against, CaseName, CaseSpec, StudyParams,
};

fn main() -> plate_iga::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name: CaseName = args.first().map_or("case2", String::as_str).parse()?;
    let t: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1e-2);
    let ref_level: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(128);

    let case = CaseSpec::from_name(name).with_reference_level(ref_level);
    let params = StudyParams::new(3, 2, t, vec![4, 8, 16, 32]);
    let start = Instant::now();
    let reference = reference_solution(&case, &params)?;
    println!(
        "{name}, t = {t:e}: reference with {} dofs in {:.1}s",
        reference.n_free,
        start.elapsed().as_secs_f64()
    );
    let res = run_convergence_study_against(&case, &params, &reference)?;
    println!("{:>5} {:>10} {:>7} {:>12} {:>12} {:>12}", "level", "h", "n_dof", "theta_H1", "w_H1", "t*shear");
    for row in &res.rows {
        let r = &row.report;
        println!(
            "{:>5} {:>10.4e} {:>7} {:>12.4e} {:>12.4e} {:>12.4e}",
            row.level, r.h, r.n_dof, r.err_theta_h1, r.err_w_h1, r.err_shear_scaled
        );
    }
    println!("theta H1 slopes: {:?}", res.slope_theta_h1);
    println!("w H1 slopes:     {:?}", res.slope_w_h1);
    println!("total {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}

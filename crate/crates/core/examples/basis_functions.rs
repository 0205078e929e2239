//! B-spline bases: evaluation, refinement and the derivative relation.
//!
//! Usage: `cargo run --example basis_functions -- [p] [r]`

use plate_iga::splines::KnotVector;

fn main() -> plate_iga::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let r: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);

    let kv = KnotVector::new(p, &[0.0, 0.2, 0.5, 1.0], r)?;
    println!("degree {p}, interior multiplicity {r}, regularity {}", kv.regularity());
    println!("knots {:?}", kv.knots());
    println!("dimension {}", kv.dim());

    println!("\n{:>6} {:>8} {:>8}  values of the active functions", "x", "sum", "d/dx sum");
    for k in 0..=10 {
        let x = k as f64 / 10.0;
        let ev = kv.eval_basis(x, 1)?;
        let sum: f64 = ev.row(0).iter().sum();
        let dsum: f64 = ev.row(1).iter().sum();
        let vals: Vec<String> = ev.row(0).iter().map(|v| format!("{v:.4}")).collect();
        println!("{x:>6.2} {sum:>8.5} {dsum:>8.1e}  [{}]", vals.join(" "));
    }

    // a spline is unchanged by knot insertion and degree elevation
    let coeffs: Vec<f64> = (0..kv.dim()).map(|i| (i as f64).sin()).collect();
    let (fine, t) = kv.insert_knots_with_matrix(&[0.35, 0.75])?;
    let fine_coeffs: Vec<f64> = (0..fine.dim())
        .map(|i| (0..kv.dim()).map(|j| t.read(i, j) * coeffs[j]).sum())
        .collect();
    let mut worst = 0.0f64;
    for k in 0..=100 {
        let x = k as f64 / 100.0;
        let a = kv.eval_spline(&coeffs, x, 0)?;
        let b = fine.eval_spline(&fine_coeffs, x, 0)?;
        worst = worst.max((a - b).abs());
    }
    println!("\nknot insertion: {} -> {} functions, max change {worst:.1e}", kv.dim(), fine.dim());
    let elevated = kv.degree_elevate(p + 1)?;
    println!(
        "degree elevation to {}: {} functions, contains the original space: {}",
        p + 1,
        elevated.dim(),
        kv.is_subspace_of(&elevated)
    );
    let d = kv.derivative_space()?;
    println!(
        "derivative space: degree {}, regularity {}, dimension {}",
        d.degree(),
        d.regularity(),
        d.dim()
    );
    Ok(())
}

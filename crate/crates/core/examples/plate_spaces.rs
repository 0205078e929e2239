//! Compatible deflection and rotation spaces, gradient inclusion and
//! boundary constraints.
//!
//! Usage: `cargo run --example plate_spaces -- [p] [alpha] [n]`

use plate_iga::spaces::{
    apply_boundary_conditions, gradient_coefficients, gradient_inclusion_residual,
    make_plate_spaces, BoundarySpec, ParametricMesh, SideKind,
};

fn main() -> plate_iga::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let alpha: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(p - 1);
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);

    let mesh = ParametricMesh::uniform(n, n)?;
    let s = make_plate_spaces(p, alpha, &mesh)?;
    println!("p = {p}, alpha = {alpha}, {n} x {n} elements");
    println!("  W      {:>3} x {:>3} = {}", s.w.n1(), s.w.n2(), s.w.ndof());
    println!("  Theta1 {:>3} x {:>3} = {}", s.theta1.n1(), s.theta1.n2(), s.theta1.ndof());
    println!("  Theta2 {:>3} x {:>3} = {}", s.theta2.n1(), s.theta2.n2(), s.theta2.ndof());

    // the gradient of any deflection is exactly a rotation field
    let w: Vec<f64> = (0..s.w.ndof()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let (t1, t2) = gradient_coefficients(&s, &w)?;
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let uhat = [k as f64 / 20.0, (k * 7 % 20) as f64 / 20.0];
        let (_, grad) = s.w.eval_field(&w, uhat)?;
        let a = s.theta1.eval_field(&t1, uhat)?.0;
        let b = s.theta2.eval_field(&t2, uhat)?.0;
        worst = worst.max((a - grad[0]).abs()).max((b - grad[1]).abs());
    }
    println!("grad w minus its rotation-space representation: {worst:.2e}");
    println!(
        "basis-level inclusion residual {:.2e}",
        gradient_inclusion_residual(&s.w, &s.theta1, &s.theta2)?
    );

    for (name, bc) in [
        ("clamped", BoundarySpec::uniform(SideKind::Clamped)?),
        ("hard support", BoundarySpec::uniform(SideKind::SimplySupportedHard)?),
        ("soft support", BoundarySpec::uniform(SideKind::SimplySupportedSoft)?),
        (
            "layer case",
            BoundarySpec::new(
                SideKind::SimplySupportedHard,
                SideKind::SimplySupportedHard,
                SideKind::SimplySupportedSoft,
                SideKind::Free,
            )?,
        ),
    ] {
        let c = apply_boundary_conditions(&s, &bc);
        println!(
            "{name:>12}: free w {:>4}, theta1 {:>4}, theta2 {:>4}, total {:>4}",
            c.n_free_w(),
            c.n_free_theta1(),
            c.n_free_theta2(),
            c.n_free()
        );
    }
    Ok(())
}

//! A user-defined plate driven through the batch interface: a JSON config
//! with a load expression and a control-net geometry file, then the
//! invariant suite on the same problem.
//!
//! Usage: `cargo run --example custom_problem -- [output_dir]`

use std::path::PathBuf;

use plate_iga::cli::{load_config, run, RunOutcome};
use plate_iga::geometry::GeometryMap;

fn main() -> plate_iga::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "custom_out".into()));
    std::fs::create_dir_all(&out)?;

    // a 2 x 1 rectangle, clamped on the short sides and free on the long ones
    let geometry = GeometryMap::rectangle(2.0, 1.0)?;
    std::fs::write(out.join("rectangle.net"), geometry.to_control_net())?;
    let config = r#"{
        "command": "convergence",
        "problem": {
            "name": "strip",
            "geometry": "rectangle.net",
            "bc": {"u0": "clamped", "u1": "clamped", "v0": "free", "v1": "free"},
            "load": "1e3 * exp(-((x - 1)^2 + (y - 0.5)^2) / 0.05)"
        },
        "p": 3,
        "t": 1e-2,
        "levels": [2, 4, 8],
        "reference_level": 32,
        "csv": "strip.csv"
    }"#;
    let path = out.join("strip.json");
    std::fs::write(&path, config)?;

    let mut cfg = load_config(&path)?;
    if let RunOutcome::Studied { csv, result } = run(&cfg, &out, 0)? {
        println!("{}", std::fs::read_to_string(&csv)?);
        println!("w H1 slopes {:?}", result.slope_w_h1);
    }

    cfg.command = plate_iga::cli::Command::Verify;
    cfg.level = 4;
    if let RunOutcome::Verified { checks } = run(&cfg, &out, 1)? {
        for c in checks {
            println!("{c}");
        }
    }
    Ok(())
}

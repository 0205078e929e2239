//! Batch driver behind the `plate-iga` binary: parse a configuration, run
//! a solve, convergence study or invariant suite, and write plain-text
//! artifacts.

pub mod config;
pub mod expr;
pub mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::benchmarks::{run_convergence_study, solve_case, StudyParams, StudyResult};
use crate::error::{Error, Result};
use crate::solver::DiscreteSolution;

pub use config::{load_config, parse_config, Command, RunConfig};
pub use expr::Expr;
pub use verify::{run_property_suite, Check, SuiteParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "plate-iga", version, about = "Isogeometric Reissner-Mindlin plate solver")]
pub struct CliArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for the CSV table and field dump.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Seed of the randomized verify checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Exit status for an error: 1 for invalid input, 2 for numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Parameter { .. }
        | Error::Expression(_)
        | Error::GeometryFile(_)
        | Error::Domain { .. }
        | Error::UnsupportedSpace(_)
        | Error::Io(_) => EXIT_VALIDATION,
        Error::Solver { .. }
        | Error::SingularMap { .. }
        | Error::Assembly { .. }
        | Error::Refinement(_) => EXIT_NUMERICAL,
    }
}

/// What a run produced.
#[derive(Clone, Debug, PartialEq)]
pub enum RunOutcome {
    Solved { field: PathBuf, n_dof: usize },
    Studied { csv: PathBuf, result: StudyResult },
    Verified { checks: Vec<Check> },
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        match self {
            RunOutcome::Verified { checks } => checks.iter().all(|c| c.passed),
            _ => true,
        }
    }
}

fn fmt_e(v: f64) -> String {
    format!("{v:.11e}")
}

/// The convergence table: one row per level, slopes against the previous
/// row (empty on the first row or where undefined).
pub fn convergence_csv(result: &StudyResult) -> String {
    let mut out = String::from(
        "level,h,n_dof,err_theta_h1,err_theta_l2,err_w_h1,err_w_l2,err_shear_t_weighted,slope_theta_h1,slope_w_h1\n",
    );
    for (k, row) in result.rows.iter().enumerate() {
        let r = &row.report;
        let slope = |s: &[Option<f64>]| {
            k.checked_sub(1)
                .and_then(|i| s.get(i).copied().flatten())
                .map(fmt_e)
                .unwrap_or_default()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.level,
            fmt_e(r.h),
            r.n_dof,
            fmt_e(r.err_theta_h1),
            fmt_e(r.err_theta_l2),
            fmt_e(r.err_w_h1),
            fmt_e(r.err_w_l2),
            fmt_e(r.err_shear_scaled),
            slope(&result.slope_theta_h1),
            slope(&result.slope_w_h1),
        );
    }
    out
}

/// Samples a solution on a uniform `nx x ny` parametric lattice. Header
/// `nx ny`, then rows `x y w theta1 theta2 gamma1 gamma2` with `u`
/// varying fastest.
pub fn field_dump(sol: &DiscreteSolution, nx: usize, ny: usize) -> Result<String> {
    let mut out = format!("{nx} {ny}\n");
    let shear = sol.recover_shear();
    for j in 0..ny {
        for i in 0..nx {
            let uhat = [i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64];
            let x = sol.geometry().evaluate(uhat)?.physical_point;
            let f = sol.eval(uhat)?;
            let g = shear.eval(uhat)?;
            let cols = [x[0], x[1], f.w, f.theta[0], f.theta[1], g[0], g[1]];
            let line: Vec<String> = cols.iter().map(|v| fmt_e(*v)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    Ok(out)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Executes a validated configuration.
pub fn run(config: &RunConfig, output: &Path, seed: u64) -> Result<RunOutcome> {
    let case = config.case_spec()?;
    match config.command {
        Command::Solve => {
            let sol = solve_case(
                &case,
                config.p,
                config.alpha,
                config.t,
                config.level,
                Some(config.q),
                config.tol,
                config.material,
            )?;
            let (nx, ny) = config.samples;
            let field = write_file(output, &config.field, &field_dump(&sol, nx, ny)?)?;
            Ok(RunOutcome::Solved {
                field,
                n_dof: sol.n_free,
            })
        }
        Command::Convergence => {
            let params = StudyParams {
                q: Some(config.q),
                error_q: Some(config.error_q),
                tol: config.tol,
                material: config.material,
                ..StudyParams::new(config.p, config.alpha, config.t, config.levels.clone())
            };
            let result = run_convergence_study(&case, &params)?;
            let csv = write_file(output, &config.csv, &convergence_csv(&result))?;
            Ok(RunOutcome::Studied { csv, result })
        }
        Command::Verify => {
            let params = SuiteParams {
                case,
                p: config.p,
                alpha: config.alpha,
                t: config.t,
                level: config.level,
                q: config.q,
                material: config.material,
                seed,
            };
            Ok(RunOutcome::Verified {
                checks: run_property_suite(&params)?,
            })
        }
    }
}

fn report(outcome: &RunOutcome) {
    match outcome {
        RunOutcome::Solved { field, n_dof } => {
            println!("solved {n_dof} unknowns; field written to {}", field.display());
        }
        RunOutcome::Studied { csv, result } => {
            for row in &result.rows {
                println!(
                    "level {:>4}  n_dof {:>7}  theta H1 {:.3e}  w H1 {:.3e}",
                    row.level, row.report.n_dof, row.report.err_theta_h1, row.report.err_w_h1
                );
            }
            println!("table written to {}", csv.display());
        }
        RunOutcome::Verified { checks } => {
            for c in checks {
                println!("{c}");
            }
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_VALIDATION;
        }
    };
    match pool.install(|| run(&config, &args.output, args.seed)) {
        Ok(outcome) => {
            report(&outcome);
            if outcome.succeeded() {
                EXIT_OK
            } else {
                eprintln!("error: invariant checks failed");
                EXIT_NUMERICAL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

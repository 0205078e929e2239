//! Acceptance criteria 1 to 9 and the L² note. Runs without the libtest
//! harness so each criterion prints exactly one PASS/FAIL line.

use std::process::ExitCode;
use std::time::Instant;

use plate_iga::assembly::MaterialParams;
use plate_iga::benchmarks::{
    case1, reference_solution, run_convergence_study, run_convergence_study_against, solve_case,
    strong_form_residual, CaseName, CaseSpec, StudyParams, StudyResult, DEFAULT_REFERENCE_LEVEL,
};
use plate_iga::cli::{run_property_suite, SuiteParams};
use plate_iga::geometry::GeometryMap;
use plate_iga::norms::{convergence_slope, error_norms, kirchhoff_deviation, least_squares_slope};
use plate_iga::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Result<Outcome> + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn within(v: Option<f64>, target: f64, band: f64) -> bool {
    v.is_some_and(|s| (s - target).abs() <= band)
}

fn fmt_slopes(s: &[Option<f64>]) -> String {
    let parts: Vec<String> = s
        .iter()
        .map(|v| v.map_or("-".to_string(), |x| format!("{x:.3}")))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn last_two(s: &[Option<f64>]) -> &[Option<f64>] {
    &s[s.len().saturating_sub(2)..]
}

fn case1_study(p: usize, alpha: usize) -> Result<StudyResult> {
    run_convergence_study(&case1(), &StudyParams::new(p, alpha, 1e-3, vec![4, 8, 16, 32]))
}

fn criterion_1(study: &StudyResult) -> Result<Outcome> {
    let hs = study.hs();
    let th = study.column(|r| r.err_theta_h1);
    let ls = least_squares_slope(&th, &hs);
    let th_tail = last_two(&study.slope_theta_h1);
    let w_tail = last_two(&study.slope_w_h1);
    let ok = ls.is_some_and(|s| s >= 1.8)
        && th_tail.iter().all(|s| within(*s, 2.0, 0.25))
        && w_tail.iter().all(|s| within(*s, 3.0, 0.25));
    outcome(
        ok,
        format!(
            "theta H1 LS slope {:.3}, last theta slopes {}, last w slopes {}",
            ls.unwrap_or(f64::NAN),
            fmt_slopes(th_tail),
            fmt_slopes(w_tail)
        ),
    )
}

/// Slopes over the rows whose error stays above roundoff.
fn slopes_above_roundoff(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>> {
    let keep: Vec<usize> = (0..errors.len()).filter(|&i| errors[i] >= 1e-12).collect();
    let e: Vec<f64> = keep.iter().map(|&i| errors[i]).collect();
    let h: Vec<f64> = keep.iter().map(|&i| hs[i]).collect();
    convergence_slope(&e, &h)
}

fn criterion_2() -> Result<Outcome> {
    let study = case1_study(4, 3)?;
    let hs = study.hs();
    let th = slopes_above_roundoff(&study.column(|r| r.err_theta_h1), &hs)?;
    let w = slopes_above_roundoff(&study.column(|r| r.err_w_h1), &hs)?;
    let ok = !th.is_empty()
        && !w.is_empty()
        && th.iter().all(|s| within(*s, 3.0, 0.3))
        && w.iter().all(|s| within(*s, 4.0, 0.3));
    outcome(ok, format!("theta H1 slopes {}, w H1 slopes {}", fmt_slopes(&th), fmt_slopes(&w)))
}

fn criterion_3() -> Result<Outcome> {
    let m = MaterialParams::default();
    let mut errs = Vec::new();
    for t in [1e-1, 1e-2, 1e-3, 1e-4] {
        let sol = solve_case(&case1(), 3, 2, t, 16, None, 1e-10, m)?;
        let exact = case1().exact(t, &m).expect("case 1 has a closed form");
        errs.push(error_norms(&sol, &exact, None)?.err_theta_h1);
    }
    let max = errs.iter().copied().fold(f64::MIN, f64::max);
    let min = errs.iter().copied().fold(f64::MAX, f64::min);
    let ratio = max / min;
    outcome(ratio <= 2.0, format!("theta H1 errors {}, max/min {ratio:.4}", fmt_values(&errs)))
}

fn criterion_4() -> Result<Outcome> {
    let case = CaseSpec::from_name(CaseName::Case2).with_reference_level(DEFAULT_REFERENCE_LEVEL);
    let mut ok = true;
    let mut detail = Vec::new();
    for t in [1e-2, 1e-3] {
        let study = run_convergence_study(&case, &StudyParams::new(3, 2, t, vec![4, 8, 16, 32]))?;
        let th = last_two(&study.slope_theta_h1);
        let w = last_two(&study.slope_w_h1);
        ok &= th.iter().all(|s| within(*s, 2.0, 0.3)) && w.iter().all(|s| within(*s, 3.0, 0.3));
        detail.push(format!(
            "t={t:e}: theta slopes {} (last {}), w slopes {} (last {})",
            fmt_slopes(&study.slope_theta_h1),
            fmt_slopes(th),
            fmt_slopes(&study.slope_w_h1),
            fmt_slopes(w)
        ));
    }
    outcome(ok, detail.join("; "))
}

/// Log-log interpolation of `errors` (sorted by increasing `n`) at `n0`.
fn interpolate_loglog(ns: &[f64], errors: &[f64], n0: f64) -> Option<f64> {
    (0..ns.len().saturating_sub(1)).find_map(|i| {
        let (a, b) = (ns[i], ns[i + 1]);
        (a <= n0 && n0 <= b).then(|| {
            let s = (n0.ln() - a.ln()) / (b.ln() - a.ln());
            (errors[i].ln() * (1.0 - s) + errors[i + 1].ln() * s).exp()
        })
    })
}

fn criterion_5() -> Result<Outcome> {
    let t = 1e-2;
    let adapted = CaseSpec::from_name(CaseName::Case3Adapted);
    let uniform = CaseSpec::from_name(CaseName::Case3Uniform);
    let adapted_params = StudyParams::new(3, 2, t, vec![4, 8, 16, 32]);
    let uniform_params = StudyParams::new(3, 2, t, vec![3, 4, 8, 16, 32]);
    // both variants are measured against the same adapted reference
    let reference = reference_solution(&adapted, &adapted_params)?;
    let ad = run_convergence_study_against(&adapted, &adapted_params, &reference)?;
    let un = run_convergence_study_against(&uniform, &uniform_params, &reference)?;

    // first two refinement intervals of the dyadic sequence 4, 8, 16
    let un_first = &un.slope_w_h1[1..3];
    let un_ok = un_first.iter().all(|s| s.is_some_and(|v| v < 1.5));
    let ad_terminal = *ad.slope_w_h1.last().expect("several levels");
    let ad_ok = ad_terminal.is_some_and(|s| s >= 2.5);

    let un_n: Vec<f64> = un.rows.iter().map(|r| r.report.n_dof as f64).collect();
    let un_e = un.column(|r| r.err_w_h1);
    let mut matched_ok = true;
    let mut pairs = Vec::new();
    for row in &ad.rows {
        let n = row.report.n_dof as f64;
        let e_un = interpolate_loglog(&un_n, &un_e, n);
        matched_ok &= e_un.is_some_and(|u| row.report.err_w_h1 < u);
        pairs.push(format!(
            "n={}: {:.3e} vs {:.3e}",
            row.report.n_dof,
            row.report.err_w_h1,
            e_un.unwrap_or(f64::NAN)
        ));
    }
    outcome(
        un_ok && ad_ok && matched_ok,
        format!(
            "uniform w slopes {}, adapted w slopes {}, adapted vs uniform at matched n_dof [{}]",
            fmt_slopes(&un.slope_w_h1),
            fmt_slopes(&ad.slope_w_h1),
            pairs.join("; ")
        ),
    )
}

fn criterion_6() -> Result<Outcome> {
    let mut failed = Vec::new();
    let mut n = 0;
    for (name, p, alpha, t) in [(CaseName::Case1, 3, 2, 1e-3), (CaseName::Case2, 2, 1, 1e-2)] {
        let params = SuiteParams {
            case: CaseSpec::from_name(name),
            p,
            alpha,
            t,
            level: 6,
            q: p + 1,
            material: MaterialParams::default(),
            seed: 2024,
        };
        for c in run_property_suite(&params)? {
            n += 1;
            if !c.passed {
                failed.push(format!("{name}: {c}"));
            }
        }
    }
    let detail = if failed.is_empty() {
        format!("{n} checks passed")
    } else {
        failed.join("; ")
    };
    outcome(failed.is_empty(), detail)
}

fn criterion_7() -> Result<Outcome> {
    let m = MaterialParams::default();
    let mut scaled = Vec::new();
    for t in [1e-2, 1e-3, 1e-4] {
        let sol = solve_case(&case1(), 3, 2, t, 8, None, 1e-10, m)?;
        scaled.push(kirchhoff_deviation(&sol, None)? / (t * t));
    }
    let worst = scaled
        .windows(2)
        .map(|w| w[0].max(w[1]) / w[0].min(w[1]) - 1.0)
        .fold(0.0, f64::max);
    outcome(worst <= 0.2, format!("deviation / t^2 {}, largest change {:.2}%", fmt_values(&scaled), 100.0 * worst))
}

fn criterion_8() -> Result<Outcome> {
    let g = GeometryMap::quarter_annulus(1.0, 2.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts: Vec<[f64; 2]> = (0..1000)
        .map(|_| [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)])
        .collect();
    let mut radius_err = 0.0f64;
    for &u in &pts {
        let x = g.evaluate(u)?.physical_point;
        let r = x[0].hypot(x[1]);
        radius_err = radius_err.max((r - (1.0 + 1.5 * u[1])).abs());
    }
    let refined = g.refined(&[0.1, 0.3, 0.7], &[0.25, 0.5, 0.9])?.elevated(4, 3)?;
    let mut refine_err = 0.0f64;
    for &u in &pts {
        let a = g.evaluate(u)?.physical_point;
        let b = refined.evaluate(u)?.physical_point;
        refine_err = refine_err.max((a[0] - b[0]).abs().max((a[1] - b[1]).abs()));
    }
    outcome(
        radius_err <= 1e-12 && refine_err <= 1e-12,
        format!("radius error {radius_err:.3e}, refinement change {refine_err:.3e}"),
    )
}

fn criterion_9() -> Result<Outcome> {
    let m = MaterialParams::default();
    let d = m.d_bend();
    let mut res = Vec::new();
    for level in [2, 4, 8, 16, 32] {
        res.push(strong_form_residual(3, 2, 1e-3, level, m)?);
    }
    let monotone = res.windows(2).all(|w| w[1] < w[0]);
    outcome(
        d == 1.0e6 && monotone,
        format!("D_bend {d:e}, residuals on levels 2..32 {}", fmt_values(&res)),
    )
}

fn l2_note(study: &StudyResult) -> Result<Outcome> {
    let hs = study.hs();
    let l2 = least_squares_slope(&study.column(|r| r.err_theta_l2), &hs);
    let h1 = least_squares_slope(&study.column(|r| r.err_theta_h1), &hs);
    let gap = l2.zip(h1).map(|(a, b)| a - b);
    outcome(
        gap.is_some_and(|g| g >= 0.7),
        format!(
            "theta L2 slope {:.3}, theta H1 slope {:.3}, gap {:.3}",
            l2.unwrap_or(f64::NAN),
            h1.unwrap_or(f64::NAN),
            gap.unwrap_or(f64::NAN)
        ),
    )
}

fn main() -> ExitCode {
    // `cargo test` passes libtest flags; listing must report no tests
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let case1_p3 = case1_study(3, 2);
    let criteria: Vec<Criterion> = vec![
        ("criterion 1 (case 1 rates, p=3)", Box::new(|| criterion_1(case1_p3.as_ref().map_err(Clone::clone)?))),
        ("criterion 2 (case 1 rates, p=4)", Box::new(criterion_2)),
        ("criterion 3 (thickness insensitivity)", Box::new(criterion_3)),
        ("criterion 4 (case 2 rates)", Box::new(criterion_4)),
        ("criterion 5 (case 3 boundary layer)", Box::new(criterion_5)),
        ("criterion 6 (property suite)", Box::new(criterion_6)),
        ("criterion 7 (Kirchhoff limit)", Box::new(criterion_7)),
        ("criterion 8 (geometry exactness)", Box::new(criterion_8)),
        ("criterion 9 (material calibration)", Box::new(criterion_9)),
        ("note (theta L2 rate gain)", Box::new(|| l2_note(case1_p3.as_ref().map_err(Clone::clone)?))),
    ];
    let mut all = true;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let (passed, detail) = match check() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= passed;
        println!(
            "{} {name}: {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance total {:.1}s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

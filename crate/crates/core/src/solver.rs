//! Linear solve, discrete solution packaging, pointwise evaluation and
//! shear recovery.

use std::sync::Arc;

use faer::prelude::*;
use faer::{Mat, Side};

use crate::assembly::{
    assemble_system, point_basis, DofMap, LinearSystem, MaterialParams, PlateProblem,
};
use crate::error::{Error, Result};
use crate::fields::{FieldValues, ReferenceSolution};
use crate::geometry::GeometryMap;
use crate::linalg::{dot, norm2};
use crate::spaces::{apply_boundary_conditions, ParametricMesh, PlateSpaces};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

fn relative_residual(system: &LinearSystem, x: &[f64], bnorm: f64) -> f64 {
    norm2(&system.matrix.residual(&system.rhs, x)) / bnorm
}

/// `|| |A| |x| || / ||b||`: the residual of the exactly rounded solution is
/// bounded by a small multiple of `eps` times this.
fn rounding_scale(system: &LinearSystem, x: &[f64], bnorm: f64) -> f64 {
    let m = &system.matrix;
    let ax: Vec<f64> = (0..m.n())
        .map(|i| m.row(i).map(|(j, v)| (v * x[j]).abs()).sum())
        .collect();
    norm2(&ax) / bnorm
}

/// Multiple of `eps * |||A||x||| / ||b||` accepted as "at working precision".
const FLOOR_FACTOR: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    ConjugateGradient,
    Trivial,
}

/// Outcome of a successful solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// `||b - A x|| / ||b||`, computed with compensated sums
    pub relative_residual: f64,
    /// Residual attainable with `x` stored in double precision,
    /// `FLOOR_FACTOR * eps * |||A||x||| / ||b||`.
    pub rounding_floor: f64,
    pub method: SolveMethod,
}

fn cholesky_solve(system: &LinearSystem, tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = system.rhs.len();
    let bnorm = norm2(&system.rhs);
    let a = system.matrix.to_faer_transpose();
    let llt = a.sp_cholesky(Side::Lower).map_err(|e| Error::Solver {
        reason: format!("sparse Cholesky factorization failed: {e:?}"),
        residual: f64::INFINITY,
    })?;
    let solve = |b: &[f64]| -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = llt.solve(&rhs);
        (0..n).map(|i| x.read(i, 0)).collect()
    };
    let mut x = solve(&system.rhs);
    let mut res = relative_residual(system, &x, bnorm);
    // iterative refinement with accurately computed residuals
    for _ in 0..5 {
        if res <= tol * 1e-2 {
            break;
        }
        let r = system.matrix.residual(&system.rhs, &x);
        let dx = solve(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let cres = relative_residual(system, &cand, bnorm);
        if !(cres < res) {
            break;
        }
        x = cand;
        res = cres;
    }
    Ok((x, res))
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(
    system: &LinearSystem,
    x0: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = system.rhs.len();
    let bnorm = norm2(&system.rhs);
    let diag = system.matrix.diagonal();
    let mut x = x0.unwrap_or_else(|| vec![0.0; n]);
    let mut r = system.matrix.residual(&system.rhs, &x);
    let precond = |r: &[f64]| -> Vec<f64> {
        r.iter()
            .zip(&diag)
            .map(|(v, d)| if *d > 0.0 { v / d } else { *v })
            .collect()
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        if norm2(&r) <= tol * bnorm {
            break;
        }
        let ap = system.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = relative_residual(system, &x, bnorm);
    (x, res)
}

/// Solves the SPD system: sparse Cholesky with iterative refinement,
/// falling back to preconditioned CG when the factorization breaks down.
///
/// Succeeds when `||b - A x|| / ||b|| <= tol`, or when the residual has
/// reached the rounding floor of double precision (thin plates make
/// `|||A||x|||` many orders larger than `||b||`, so a fixed relative
/// tolerance can be below what any double-precision `x` attains).
pub fn solve_with_report(system: &LinearSystem, tol: f64) -> Result<SolveReport> {
    let n = system.rhs.len();
    let bnorm = norm2(&system.rhs);
    if n == 0 || bnorm == 0.0 {
        return Ok(SolveReport {
            x: vec![0.0; n],
            relative_residual: 0.0,
            rounding_floor: 0.0,
            method: SolveMethod::Trivial,
        });
    }
    let accept = |x: Vec<f64>, res: f64, method| -> std::result::Result<SolveReport, (Vec<f64>, f64)> {
        let floor = FLOOR_FACTOR * f64::EPSILON * rounding_scale(system, &x, bnorm);
        if res <= tol || res <= floor {
            Ok(SolveReport {
                x,
                relative_residual: res,
                rounding_floor: floor,
                method,
            })
        } else {
            Err((x, res))
        }
    };
    let start = match cholesky_solve(system, tol) {
        Ok((x, res)) => match accept(x, res, SolveMethod::Cholesky) {
            Ok(rep) => return Ok(rep),
            Err((x, _)) => Some(x),
        },
        Err(_) => None,
    };
    let (x, res) = conjugate_gradient(system, start, tol, 20 * n + 100);
    accept(x, res, SolveMethod::ConjugateGradient).map_err(|(_, res)| Error::Solver {
        reason: "no method reached the requested tolerance".into(),
        residual: res,
    })
}

/// Free-dof solution of the system; see [`solve_with_report`].
pub fn solve(system: &LinearSystem, tol: f64) -> Result<Vec<f64>> {
    solve_with_report(system, tol).map(|r| r.x)
}

/// Whether the matrix admits a Cholesky factorization (i.e. is SPD up to
/// rounding).
pub fn is_positive_definite(system: &LinearSystem) -> bool {
    system
        .matrix
        .to_faer_transpose()
        .sp_cholesky(Side::Lower)
        .is_ok()
}

/// Rotations and deflection of a solved plate.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    spaces: Arc<PlateSpaces>,
    geometry: Arc<GeometryMap>,
    /// `[Theta1 | Theta2 | W]`, zero at constrained slots
    coeffs: Vec<f64>,
    pub thickness: f64,
    pub material: MaterialParams,
    pub n_free: usize,
}

impl DiscreteSolution {
    pub fn new(
        spaces: Arc<PlateSpaces>,
        geometry: Arc<GeometryMap>,
        coeffs: Vec<f64>,
        thickness: f64,
        material: MaterialParams,
        n_free: usize,
    ) -> Result<Self> {
        if coeffs.len() != spaces.total_ndof() {
            return Err(Error::param(
                "coeffs",
                format!("expected {} coefficients, got {}", spaces.total_ndof(), coeffs.len()),
            ));
        }
        Ok(DiscreteSolution {
            spaces,
            geometry,
            coeffs,
            thickness,
            material,
            n_free,
        })
    }

    pub fn from_free(
        problem: &PlateProblem,
        spaces: Arc<PlateSpaces>,
        dofs: &DofMap,
        free: &[f64],
    ) -> Result<Self> {
        let coeffs = dofs.expand(free);
        Self::new(
            spaces,
            problem.geometry.clone(),
            coeffs,
            problem.thickness,
            problem.material,
            dofs.n_free(),
        )
    }

    pub fn spaces(&self) -> &PlateSpaces {
        &self.spaces
    }

    pub fn geometry(&self) -> &GeometryMap {
        &self.geometry
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn theta1(&self) -> &[f64] {
        &self.coeffs[..self.spaces.theta1.ndof()]
    }

    pub fn theta2(&self) -> &[f64] {
        let n1 = self.spaces.theta1.ndof();
        &self.coeffs[n1..n1 + self.spaces.theta2.ndof()]
    }

    pub fn w(&self) -> &[f64] {
        &self.coeffs[self.spaces.rotation_ndof()..]
    }

    /// `w`, physical `grad w`, physical `theta` and `grad theta` at `uhat`.
    pub fn eval(&self, uhat: [f64; 2]) -> Result<FieldValues> {
        let pb = point_basis(&self.spaces, &self.geometry, uhat)?;
        Ok(pb.fields(&self.coeffs))
    }

    /// Discrete shear `mu k t^-2 (theta_h - grad w_h)`.
    pub fn recover_shear(&self) -> ShearField<'_> {
        ShearField { solution: self }
    }
}

/// Evaluator for the recovered discrete shear.
pub struct ShearField<'a> {
    solution: &'a DiscreteSolution,
}

impl ShearField<'_> {
    pub fn eval(&self, uhat: [f64; 2]) -> Result<[f64; 2]> {
        let s = self.solution;
        let f = s.eval(uhat)?;
        let kappa = s.material.shear_coefficient(s.thickness);
        Ok([
            kappa * (f.theta[0] - f.grad_w[0]),
            kappa * (f.theta[1] - f.grad_w[1]),
        ])
    }
}

impl ReferenceSolution for DiscreteSolution {
    fn eval(&self, uhat: [f64; 2], _x: [f64; 2]) -> Result<FieldValues> {
        DiscreteSolution::eval(self, uhat)
    }

    fn shear(&self, uhat: [f64; 2], _x: [f64; 2]) -> Result<[f64; 2]> {
        self.recover_shear().eval(uhat)
    }

    fn parametric_mesh(&self) -> Option<&ParametricMesh> {
        Some(&self.spaces.mesh)
    }
}

/// Source of the shear component of a mixed triple.
#[derive(Clone, Debug)]
pub enum ShearSource {
    /// `mu k t^-2 (theta - grad w)` of the triple's own solution.
    Recovered,
    /// Coefficients in `[Theta1 | Theta2]`, pushed forward covariantly.
    Coefficients(Vec<f64>),
}

/// `(theta, w, gamma)` for the mixed form.
#[derive(Clone, Debug)]
pub struct MixedTriple {
    pub solution: DiscreteSolution,
    pub shear: ShearSource,
}

/// Assemble, solve and package: the whole primal pipeline for one mesh.
pub fn solve_problem(
    problem: &PlateProblem,
    spaces: Arc<PlateSpaces>,
    q: usize,
    tol: f64,
) -> Result<DiscreteSolution> {
    let constraints = apply_boundary_conditions(&spaces, &problem.bc);
    let system = assemble_system(problem, &spaces, &constraints, q)?;
    let free = solve(&system, tol)?;
    DiscreteSolution::from_free(problem, spaces, &system.dofs, &free)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(a: Mat<f64>, b: Vec<f64>) -> LinearSystem {
        let spaces = crate::spaces::make_plate_spaces(
            2,
            1,
            &crate::spaces::ParametricMesh::uniform(1, 1).unwrap(),
        )
        .unwrap();
        let c = apply_boundary_conditions(
            &spaces,
            &crate::spaces::BoundarySpec::uniform(crate::spaces::SideKind::Clamped).unwrap(),
        );
        LinearSystem {
            matrix: CsrMatrix::from_dense(&a),
            rhs: b,
            dofs: DofMap::new(&spaces, &c),
        }
    }

    #[test]
    fn scalar_system() {
        let s = system(Mat::from_fn(1, 1, |_, _| 2.0), vec![4.0]);
        let x = solve(&s, DEFAULT_TOLERANCE).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_system() {
        let b = vec![1.0, -2.0, 3.5];
        let s = system(Mat::identity(3, 3), b.clone());
        assert_eq!(solve(&s, DEFAULT_TOLERANCE).unwrap(), b);
    }

    #[test]
    fn random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mat::<f64>::from_fn(50, 50, |_, _| rng.gen_range(-1.0..1.0));
        let a = m.transpose() * &m + Mat::<f64>::identity(50, 50);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = system(a, b);
        let x = solve(&s, DEFAULT_TOLERANCE).unwrap();
        let res = relative_residual(&s, &x, norm2(&s.rhs));
        assert!(res <= 1e-10, "{res}");
        let (xc, rc) = conjugate_gradient(&s, None, 1e-12, 1000);
        assert!(rc <= 1e-12);
        assert!(xc.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn indefinite_system_reports_residual() {
        let a = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 1.0 });
        let s = system(a, vec![1.0, 0.0]);
        match solve(&s, DEFAULT_TOLERANCE) {
            Err(Error::Solver { residual, .. }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(!is_positive_definite(&s));
    }

    fn annulus_solution(rng: &mut ChaCha8Rng, coeffs: Option<Vec<f64>>) -> DiscreteSolution {
        let spaces = Arc::new(
            crate::spaces::make_plate_spaces(3, 2, &ParametricMesh::uniform(3, 2).unwrap()).unwrap(),
        );
        let n = spaces.total_ndof();
        let c = coeffs.unwrap_or_else(|| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        DiscreteSolution::new(
            spaces,
            Arc::new(GeometryMap::quarter_annulus(1.0, 2.5).unwrap()),
            c,
            1e-2,
            MaterialParams::default(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn zero_coefficients_evaluate_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = annulus_solution(&mut rng, None);
        let z = DiscreteSolution::new(
            Arc::new(s.spaces().clone()),
            Arc::new(s.geometry().clone()),
            vec![0.0; s.coefficients().len()],
            1e-2,
            MaterialParams::default(),
            0,
        )
        .unwrap();
        assert_eq!(z.eval([0.3, 0.6]).unwrap(), FieldValues::default());
        assert_eq!(z.recover_shear().eval([0.3, 0.6]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn linear_deflection_on_identity_geometry() {
        let spaces = Arc::new(
            crate::spaces::make_plate_spaces(2, 1, &ParametricMesh::uniform(3, 3).unwrap()).unwrap(),
        );
        // Greville abscissae reproduce linear functions
        let kv = &spaces.w.kv_u;
        let knots = kv.knots();
        let greville: Vec<f64> = (0..kv.dim()).map(|i| (knots[i + 1] + knots[i + 2]) / 2.0).collect();
        let mut c = vec![0.0; spaces.total_ndof()];
        let off = spaces.rotation_ndof();
        for k in 0..spaces.w.ndof() {
            let (i, _) = spaces.w.ij(k);
            c[off + k] = greville[i];
        }
        let s = DiscreteSolution::new(
            spaces,
            Arc::new(GeometryMap::unit_square()),
            c,
            1e-2,
            MaterialParams::default(),
            0,
        )
        .unwrap();
        let f = s.eval([0.37, 0.81]).unwrap();
        assert!((f.w - 0.37).abs() < 1e-14);
        assert!((f.grad_w[0] - 1.0).abs() < 1e-13 && f.grad_w[1].abs() < 1e-13);
    }

    #[test]
    fn rotation_gradient_matches_finite_differences_on_annulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = annulus_solution(&mut rng, None);
        let g = s.geometry();
        for _ in 0..5 {
            let u = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
            let f = s.eval(u).unwrap();
            let m = g.evaluate(u).unwrap();
            let jinv = m.inverse();
            let h = 1e-6;
            // physical increment e_j corresponds to parametric step DF^{-1} e_j
            for j in 0..2 {
                let du = [jinv[0][j] * h, jinv[1][j] * h];
                let fp = s.eval([u[0] + du[0], u[1] + du[1]]).unwrap();
                let fm = s.eval([u[0] - du[0], u[1] - du[1]]).unwrap();
                for i in 0..2 {
                    let fd = (fp.theta[i] - fm.theta[i]) / (2.0 * h);
                    let scale = 1.0 + f.grad_theta[i][j].abs();
                    assert!(
                        (fd - f.grad_theta[i][j]).abs() <= 1e-5 * scale,
                        "{fd} vs {}",
                        f.grad_theta[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_rotations_have_zero_shear() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = annulus_solution(&mut rng, None);
        let spaces = base.spaces();
        let w: Vec<f64> = base.w().to_vec();
        let (t1, t2) = crate::spaces::gradient_coefficients(spaces, &w).unwrap();
        let coeffs: Vec<f64> = t1.into_iter().chain(t2).chain(w).collect();
        let s = annulus_solution(&mut rng, Some(coeffs));
        // the shear coefficient is ~3.5e10 here, so zero is measured
        // relative to kappa |grad w|
        let kappa = s.material.shear_coefficient(s.thickness);
        for _ in 0..20 {
            let u = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let g = s.recover_shear().eval(u).unwrap();
            let gw = s.eval(u).unwrap().grad_w;
            let scale = kappa * gw[0].hypot(gw[1]).max(1.0);
            assert!(g[0].hypot(g[1]) <= 1e-9 * scale, "{g:?}");
        }
    }
}

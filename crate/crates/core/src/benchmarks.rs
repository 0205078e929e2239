//! The three test problems: a clamped square with a closed-form solution,
//! a hard simply supported quarter annulus, and the same annulus with
//! mixed supports and boundary layers, plus the convergence-study driver.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::{weak_residual, Load, MaterialParams, PlateProblem};
use crate::error::{Error, Result};
use crate::fields::{FieldValues, ReferenceSolution};
use crate::geometry::GeometryMap;
use crate::norms::{convergence_slope, error_norms, ErrorReport};
use crate::solver::{solve_problem, DiscreteSolution, DEFAULT_TOLERANCE};
use crate::spaces::{
    apply_boundary_conditions, make_plate_spaces, BoundarySpec, ParametricMesh, PlateSpaces,
    SideKind,
};
use crate::splines::uniform_breakpoints;

/// Parametric width of each boundary-layer band of the adapted mesh
/// (0.045 of the 1.5 annulus width).
pub const LAYER_FRACTION: f64 = 0.03;

/// Default level of the fine reference solution for the annulus cases.
pub const DEFAULT_REFERENCE_LEVEL: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseName {
    Case1,
    Case2,
    Case3Uniform,
    Case3Adapted,
}

impl CaseName {
    pub const ALL: [CaseName; 4] = [
        CaseName::Case1,
        CaseName::Case2,
        CaseName::Case3Uniform,
        CaseName::Case3Adapted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::Case1 => "case1",
            CaseName::Case2 => "case2",
            CaseName::Case3Uniform => "case3-uniform",
            CaseName::Case3Adapted => "case3-adapted",
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = CaseName::ALL.iter().map(|c| c.as_str()).collect();
                Error::Config(format!(
                    "unknown case name \"{s}\"; valid names: {}",
                    names.join(", ")
                ))
            })
    }
}

/// How the mesh of a given level is laid out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshRecipe {
    /// `level x level` uniform elements.
    Uniform,
    /// Three radial bands `[0, f], [f, 1 - f], [1 - f, 1]`, each refined
    /// uniformly together with the angular direction: level `L` has
    /// `max(1, L / 2)` angular elements and as many radial elements per
    /// band. Level 2 is the initial three-element mesh.
    LayerAdapted { layer: f64 },
}

impl MeshRecipe {
    pub fn mesh(&self, level: usize) -> Result<ParametricMesh> {
        if level == 0 {
            return Err(Error::param("level", "mesh level must be at least 1"));
        }
        match *self {
            MeshRecipe::Uniform => ParametricMesh::uniform(level, level),
            MeshRecipe::LayerAdapted { layer } => {
                if !(layer > 0.0 && layer < 0.5) {
                    return Err(Error::param("layer", format!("layer fraction {layer} not in (0, 0.5)")));
                }
                let m = (level / 2).max(1);
                let mut bv = Vec::with_capacity(3 * m + 1);
                for (a, b) in [(0.0, layer), (layer, 1.0 - layer), (1.0 - layer, 1.0)] {
                    for k in 0..m {
                        bv.push(a + (b - a) * k as f64 / m as f64);
                    }
                }
                bv.push(1.0);
                ParametricMesh::new(&uniform_breakpoints(m), &bv)
            }
        }
    }
}

/// Where the errors of a study are measured against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceRecipe {
    Exact,
    /// A discrete solution with the same thickness at a finer level;
    /// `degree` is `(p, alpha)`, or the study's own when absent.
    Discrete {
        level: usize,
        degree: Option<(usize, usize)>,
        mesh: MeshRecipe,
    },
}

/// The transverse load of a case.
#[derive(Clone)]
pub enum LoadSpec {
    /// The clamped-square load, scaled by the bending modulus.
    Case1,
    /// `1e4 sin(2 atan2(y, x))`.
    Annulus,
    Custom(Load),
}

impl fmt::Debug for LoadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadSpec::Case1 => f.write_str("Case1"),
            LoadSpec::Annulus => f.write_str("Annulus"),
            LoadSpec::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// One configured test problem.
#[derive(Clone, Debug)]
pub struct CaseSpec {
    pub name: String,
    pub geometry: Arc<GeometryMap>,
    pub bc: BoundarySpec,
    pub load: LoadSpec,
    pub mesh: MeshRecipe,
    pub reference: ReferenceRecipe,
}

impl CaseSpec {
    pub fn from_name(name: CaseName) -> CaseSpec {
        match name {
            CaseName::Case1 => case1(),
            CaseName::Case2 => case2(),
            CaseName::Case3Uniform => case3(MeshRecipe::Uniform),
            CaseName::Case3Adapted => case3(MeshRecipe::LayerAdapted {
                layer: LAYER_FRACTION,
            }),
        }
    }

    /// A user-defined problem measured against a uniform-mesh reference
    /// at `reference_level`.
    pub fn custom(
        name: impl Into<String>,
        geometry: Arc<GeometryMap>,
        bc: BoundarySpec,
        load: Load,
        reference_level: usize,
    ) -> CaseSpec {
        CaseSpec {
            name: name.into(),
            geometry,
            bc,
            load: LoadSpec::Custom(load),
            mesh: MeshRecipe::Uniform,
            reference: ReferenceRecipe::Discrete {
                level: reference_level,
                degree: None,
                mesh: MeshRecipe::Uniform,
            },
        }
    }

    pub fn load(&self, material: &MaterialParams) -> Load {
        match &self.load {
            LoadSpec::Case1 => {
                let d = material.d_bend();
                Arc::new(move |x| case1_load(d, x))
            }
            LoadSpec::Annulus => Arc::new(annulus_load),
            LoadSpec::Custom(f) => f.clone(),
        }
    }

    pub fn problem(&self, t: f64, material: MaterialParams) -> Result<PlateProblem> {
        PlateProblem::new(
            material,
            t,
            self.geometry.clone(),
            self.bc,
            self.load(&material),
        )
    }

    pub fn exact(&self, t: f64, material: &MaterialParams) -> Option<Case1Exact> {
        matches!(self.reference, ReferenceRecipe::Exact).then(|| Case1Exact::new(t, material))
    }

    /// Spaces of degree `p` and regularity `alpha` on the mesh of `level`,
    /// built from the geometry's own knot vectors.
    pub fn spaces(&self, p: usize, alpha: usize, level: usize) -> Result<PlateSpaces> {
        let target = self.mesh.mesh(level)?;
        three_step_spaces(&self.geometry, p, alpha, &target)
    }

    /// Default reference recipe with a different reference level.
    pub fn with_reference_level(mut self, level: usize) -> Self {
        if let ReferenceRecipe::Discrete { level: l, .. } = &mut self.reference {
            *l = level;
        }
        self
    }
}

/// Builds the plate spaces the way the geometry is refined: elevate the
/// geometry's (unweighted) B-spline basis to degree `p`, repeat knots down
/// to regularity `alpha`, then insert the breakpoints of `target` that the
/// geometry does not already have. The resulting mesh is the union of both.
pub fn three_step_spaces(
    geometry: &GeometryMap,
    p: usize,
    alpha: usize,
    target: &ParametricMesh,
) -> Result<PlateSpaces> {
    if alpha < 1 || alpha + 1 > p {
        return Err(Error::param(
            "alpha",
            format!("regularity must satisfy 1 <= alpha <= p - 1, got p = {p}, alpha = {alpha}"),
        ));
    }
    let step = |kv: &crate::splines::KnotVector, target: &[f64]| -> Result<crate::splines::KnotVector> {
        let elevated = if kv.degree() <= p {
            kv.degree_elevate(p)?
        } else {
            return Err(Error::param(
                "p",
                format!("degree {p} is below the geometry degree {}", kv.degree()),
            ));
        };
        let repeated = elevated.with_multiplicity(p - alpha)?;
        let existing = repeated.breakpoints();
        let tol = 1e-12;
        let new: Vec<f64> = target[1..target.len() - 1]
            .iter()
            .copied()
            .filter(|b| !existing.iter().any(|z| (b - z).abs() <= tol))
            .collect();
        repeated.insert_knots(&new)
    };
    let ku = step(geometry.kv_u(), target.breakpoints_u())?;
    let kv = step(geometry.kv_v(), target.breakpoints_v())?;
    let mesh = ParametricMesh::new(ku.breakpoints(), kv.breakpoints())?;
    let spaces = make_plate_spaces(p, alpha, &mesh)?;
    debug_assert_eq!(spaces.w.kv_u, ku);
    debug_assert_eq!(spaces.w.kv_v, kv);
    Ok(spaces)
}

pub fn case1() -> CaseSpec {
    CaseSpec {
        name: CaseName::Case1.to_string(),
        geometry: Arc::new(GeometryMap::unit_square()),
        bc: BoundarySpec::uniform(SideKind::Clamped).expect("clamped is a valid boundary"),
        load: LoadSpec::Case1,
        mesh: MeshRecipe::Uniform,
        reference: ReferenceRecipe::Exact,
    }
}

fn annulus() -> Arc<GeometryMap> {
    Arc::new(GeometryMap::quarter_annulus(1.0, 2.5).expect("valid radii"))
}

pub fn case2() -> CaseSpec {
    CaseSpec {
        name: CaseName::Case2.to_string(),
        geometry: annulus(),
        bc: BoundarySpec::uniform(SideKind::SimplySupportedHard).expect("valid boundary"),
        load: LoadSpec::Annulus,
        mesh: MeshRecipe::Uniform,
        reference: ReferenceRecipe::Discrete {
            level: DEFAULT_REFERENCE_LEVEL,
            degree: Some((3, 2)),
            mesh: MeshRecipe::Uniform,
        },
    }
}

/// Inner arc (`v = 0`) soft simply supported, outer arc (`v = 1`) free,
/// straight sides hard simply supported. The reference always uses the
/// layer-adapted mesh so that it resolves the layers.
pub fn case3(mesh: MeshRecipe) -> CaseSpec {
    let name = match mesh {
        MeshRecipe::Uniform => CaseName::Case3Uniform,
        MeshRecipe::LayerAdapted { .. } => CaseName::Case3Adapted,
    };
    CaseSpec {
        name: name.to_string(),
        geometry: annulus(),
        bc: BoundarySpec::new(
            SideKind::SimplySupportedHard,
            SideKind::SimplySupportedHard,
            SideKind::SimplySupportedSoft,
            SideKind::Free,
        )
        .expect("valid boundary"),
        load: LoadSpec::Annulus,
        mesh,
        reference: ReferenceRecipe::Discrete {
            level: DEFAULT_REFERENCE_LEVEL,
            degree: Some((3, 2)),
            mesh: MeshRecipe::LayerAdapted {
                layer: LAYER_FRACTION,
            },
        },
    }
}

/// `1e4 sin(2 atan2(y, x))`.
pub fn annulus_load(x: [f64; 2]) -> f64 {
    1e4 * (2.0 * x[1].atan2(x[0])).sin()
}

/// The clamped-square load with bending modulus `d`.
pub fn case1_load(d: f64, p: [f64; 2]) -> f64 {
    let (x, y) = (p[0], p[1]);
    let qx = 5.0 * x * x - 5.0 * x + 1.0;
    let qy = 5.0 * y * y - 5.0 * y + 1.0;
    let sx = x * (x - 1.0);
    let sy = y * (y - 1.0);
    d * (12.0 * sy * qx * (2.0 * sy * sy + sx * qy) + 12.0 * sx * qy * (2.0 * sx * sx + sy * qx))
}

/// Dense univariate polynomial, coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn from_factors(factors: &[&[f64]]) -> Poly {
        factors
            .iter()
            .fold(Poly(vec![1.0]), |acc, f| acc.mul(&Poly(f.to_vec())))
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0[1..].iter().enumerate().map(|(i, c)| (i + 1) as f64 * c).collect())
    }

    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// A polynomial together with its first two derivatives.
#[derive(Clone, Debug)]
struct Poly3 {
    f: Poly,
    d1: Poly,
    d2: Poly,
}

impl Poly3 {
    fn new(f: Poly) -> Self {
        let d1 = f.deriv();
        let d2 = d1.deriv();
        Poly3 { f, d1, d2 }
    }

    fn at(&self, x: f64) -> [f64; 3] {
        [self.f.eval(x), self.d1.eval(x), self.d2.eval(x)]
    }
}

/// Closed-form solution of the clamped square.
///
/// With `a(s) = s^3 (s-1)^3`, `b = a' / 3`, `c(s) = s (s-1) (5s^2 - 5s + 1)`
/// and `g(x, y) = a(y) c(x) + a(x) c(y)`:
/// `theta = (a(y) b(x), a(x) b(y))`, `w = a(x) a(y) / 3 - beta g` with
/// `beta = 2 t^2 / (5 (1 - nu))`, hence `gamma = mu k t^-2 beta grad g`.
#[derive(Clone, Debug)]
pub struct Case1Exact {
    pub t: f64,
    beta: f64,
    /// `mu k t^-2 beta`, independent of `t`
    shear_scale: f64,
    a: Poly3,
    b: Poly3,
    c: Poly3,
}

impl Case1Exact {
    pub fn new(t: f64, material: &MaterialParams) -> Self {
        let s = [0.0, 1.0];
        let s1 = [-1.0, 1.0];
        let a = Poly::from_factors(&[&s, &s, &s, &s1, &s1, &s1]);
        let b = Poly(a.deriv().0.iter().map(|c| c / 3.0).collect());
        let c = Poly::from_factors(&[&s, &s1, &[1.0, -5.0, 5.0]]);
        let beta = 2.0 * t * t / (5.0 * (1.0 - material.nu));
        Case1Exact {
            t,
            beta,
            shear_scale: material.shear_coefficient(t) * beta,
            a: Poly3::new(a),
            b: Poly3::new(b),
            c: Poly3::new(c),
        }
    }

    pub fn fields(&self, p: [f64; 2]) -> FieldValues {
        let (x, y) = (p[0], p[1]);
        let [ax, dax, _] = self.a.at(x);
        let [ay, day, _] = self.a.at(y);
        let [bx, dbx, _] = self.b.at(x);
        let [by, dby, _] = self.b.at(y);
        let [cx, dcx, _] = self.c.at(x);
        let [cy, dcy, _] = self.c.at(y);
        let w = ax * ay / 3.0 - self.beta * (ay * cx + ax * cy);
        let grad_w = [
            dax * ay / 3.0 - self.beta * (ay * dcx + dax * cy),
            ax * day / 3.0 - self.beta * (day * cx + ax * dcy),
        ];
        FieldValues {
            w,
            grad_w,
            theta: [ay * bx, ax * by],
            grad_theta: [[ay * dbx, day * bx], [dax * by, ax * dby]],
        }
    }

    /// `gamma = mu k t^-2 (theta - grad w)`, evaluated without cancellation.
    pub fn shear(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = (p[0], p[1]);
        let [ax, dax, _] = self.a.at(x);
        let [ay, day, _] = self.a.at(y);
        let [cx, dcx, _] = self.c.at(x);
        let [cy, dcy, _] = self.c.at(y);
        [
            self.shear_scale * (ay * dcx + dax * cy),
            self.shear_scale * (day * cx + ax * dcy),
        ]
    }

    /// `div gamma`, which must equal the load.
    pub fn shear_divergence(&self, p: [f64; 2]) -> f64 {
        let (x, y) = (p[0], p[1]);
        let [ax, _, d2ax] = self.a.at(x);
        let [ay, _, d2ay] = self.a.at(y);
        let [cx, _, d2cx] = self.c.at(x);
        let [cy, _, d2cy] = self.c.at(y);
        self.shear_scale * (ay * d2cx + d2ay * cx + d2ax * cy + ax * d2cy)
    }

    /// `div C eps(theta)`, which must equal the shear.
    pub fn bending_divergence(&self, material: &MaterialParams, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = (p[0], p[1]);
        let [ax, dax, d2ax] = self.a.at(x);
        let [ay, day, d2ay] = self.a.at(y);
        let [bx, dbx, d2bx] = self.b.at(x);
        let [by, dby, d2by] = self.b.at(y);
        let d = material.d_bend();
        let nu = material.nu;
        // theta1 = ay bx, theta2 = ax by
        let t1_xx = ay * d2bx;
        let t1_xy = day * dbx;
        let t1_yy = d2ay * bx;
        let t2_xx = d2ax * by;
        let t2_xy = dax * dby;
        let t2_yy = ax * d2by;
        // M = D [(1 - nu) eps + nu tr(eps) I]
        let m11_x = d * ((1.0 - nu) * t1_xx + nu * (t1_xx + t2_xy));
        let m12_y = d * (1.0 - nu) * 0.5 * (t1_yy + t2_xy);
        let m12_x = d * (1.0 - nu) * 0.5 * (t1_xy + t2_xx);
        let m22_y = d * ((1.0 - nu) * t2_yy + nu * (t1_xy + t2_yy));
        [m11_x + m12_y, m12_x + m22_y]
    }
}

impl ReferenceSolution for Case1Exact {
    fn eval(&self, _uhat: [f64; 2], x: [f64; 2]) -> Result<FieldValues> {
        Ok(self.fields(x))
    }

    fn shear(&self, _uhat: [f64; 2], x: [f64; 2]) -> Result<[f64; 2]> {
        Ok(Case1Exact::shear(self, x))
    }
}

/// Numerical settings shared by every level of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyParams {
    pub p: usize,
    pub alpha: usize,
    pub t: f64,
    pub levels: Vec<usize>,
    /// Assembly quadrature per direction; `p + 1` if absent.
    pub q: Option<usize>,
    /// Error quadrature per direction; `p + 2` if absent.
    pub error_q: Option<usize>,
    pub tol: f64,
    pub material: MaterialParams,
}

impl StudyParams {
    pub fn new(p: usize, alpha: usize, t: f64, levels: Vec<usize>) -> Self {
        StudyParams {
            p,
            alpha,
            t,
            levels,
            q: None,
            error_q: None,
            tol: DEFAULT_TOLERANCE,
            material: MaterialParams::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::param("levels", "at least one level is required"));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("levels", "levels must be strictly increasing"));
        }
        if !(self.t > 0.0) {
            return Err(Error::param("t", format!("thickness must be positive, got {}", self.t)));
        }
        Ok(())
    }
}

/// Assembles and solves one level of a case.
pub fn solve_case(
    case: &CaseSpec,
    p: usize,
    alpha: usize,
    t: f64,
    level: usize,
    q: Option<usize>,
    tol: f64,
    material: MaterialParams,
) -> Result<DiscreteSolution> {
    let problem = case.problem(t, material)?;
    let spaces = Arc::new(case.spaces(p, alpha, level)?);
    solve_problem(&problem, spaces, q.unwrap_or(p + 1), tol)
}

/// Computes the fine reference solution of a case whose recipe is
/// discrete.
pub fn reference_solution(case: &CaseSpec, params: &StudyParams) -> Result<DiscreteSolution> {
    match case.reference {
        ReferenceRecipe::Exact => Err(Error::param(
            "reference",
            format!("{} has an exact solution", case.name),
        )),
        ReferenceRecipe::Discrete { level, degree, mesh } => {
            let (p, alpha) = degree.unwrap_or((params.p, params.alpha));
            let ref_case = CaseSpec {
                mesh,
                ..case.clone()
            };
            solve_case(&ref_case, p, alpha, params.t, level, Some(p + 1), params.tol, params.material)
        }
    }
}

/// The reference must be at least two dyadic refinements finer than the
/// finest study level.
pub fn check_reference_level(reference_level: usize, levels: &[usize]) -> Result<()> {
    let finest = levels.iter().copied().max().unwrap_or(0);
    if reference_level < 4 * finest {
        return Err(Error::param(
            "reference_level",
            format!(
                "reference level {reference_level} must be at least 4x the finest study level {finest}"
            ),
        ));
    }
    Ok(())
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub report: ErrorReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub case: String,
    pub rows: Vec<StudyRow>,
    /// Slopes between consecutive rows (`rows.len() - 1` entries).
    pub slope_theta_h1: Vec<Option<f64>>,
    pub slope_w_h1: Vec<Option<f64>>,
}

impl StudyResult {
    pub fn column(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        self.rows.iter().map(|r| f(&r.report)).collect()
    }

    pub fn hs(&self) -> Vec<f64> {
        self.column(|r| r.h)
    }
}

/// Runs every level of a study against the case's exact solution, or a
/// freshly computed reference.
pub fn run_convergence_study(case: &CaseSpec, params: &StudyParams) -> Result<StudyResult> {
    params.validate()?;
    match case.reference {
        ReferenceRecipe::Exact => {
            let exact = case
                .exact(params.t, &params.material)
                .expect("exact recipe implies a closed form");
            run_convergence_study_against(case, params, &exact)
        }
        ReferenceRecipe::Discrete { level, .. } => {
            check_reference_level(level, &params.levels)?;
            let reference = reference_solution(case, params)?;
            run_convergence_study_against(case, params, &reference)
        }
    }
}

/// Runs every level of a study against a given reference.
pub fn run_convergence_study_against(
    case: &CaseSpec,
    params: &StudyParams,
    reference: &dyn ReferenceSolution,
) -> Result<StudyResult> {
    params.validate()?;
    let mut rows = Vec::with_capacity(params.levels.len());
    for &level in &params.levels {
        let sol = solve_case(
            case,
            params.p,
            params.alpha,
            params.t,
            level,
            params.q,
            params.tol,
            params.material,
        )?;
        let report = error_norms(&sol, reference, params.error_q)?;
        rows.push(StudyRow { level, report });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.report.h).collect();
    let th: Vec<f64> = rows.iter().map(|r| r.report.err_theta_h1).collect();
    let wh: Vec<f64> = rows.iter().map(|r| r.report.err_w_h1).collect();
    Ok(StudyResult {
        case: case.name.clone(),
        rows,
        slope_theta_h1: convergence_slope(&th, &hs)?,
        slope_w_h1: convergence_slope(&wh, &hs)?,
    })
}

/// Largest weak-residual entry of the clamped-square closed form against
/// the free test functions of the given level, with `q = p + 3`.
pub fn strong_form_residual(
    p: usize,
    alpha: usize,
    t: f64,
    level: usize,
    material: MaterialParams,
) -> Result<f64> {
    let case = case1();
    let problem = case.problem(t, material)?;
    let spaces = case.spaces(p, alpha, level)?;
    let constraints = apply_boundary_conditions(&spaces, &problem.bc);
    let exact = Case1Exact::new(t, &material);
    let r = weak_residual(&problem, &spaces, &constraints, &exact, p + 3)?;
    Ok(r.iter().fold(0.0, |m, v| m.max(v.abs())))
}

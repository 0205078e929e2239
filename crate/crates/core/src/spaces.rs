//! Tensor-product spline spaces and the compatible deflection/rotation
//! spaces of the plate discretization.
//!
//! Degrees of freedom are numbered lexicographically, `i + n1 * j`, with `i`
//! running along the first parametric direction `u`.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg;
use crate::splines::{union_breakpoints, BasisEvaluation, KnotVector};

/// A rectangle `[u0, u1] x [v0, v1]` of the parametric mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    pub index: usize,
    pub iu: usize,
    pub iv: usize,
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl Element {
    /// Parametric diameter `h_Q`.
    pub fn diameter(&self) -> f64 {
        (self.u.1 - self.u.0).hypot(self.v.1 - self.v.0)
    }

    pub fn area(&self) -> f64 {
        (self.u.1 - self.u.0) * (self.v.1 - self.v.0)
    }

    /// Maps a point of `[0, 1]^2` into the element.
    pub fn map(&self, s: f64, r: f64) -> [f64; 2] {
        [
            self.u.0 + (self.u.1 - self.u.0) * s,
            self.v.0 + (self.v.1 - self.v.0) * r,
        ]
    }
}

/// Partition of `(0, 1)^2` into rectangles induced by two breakpoint lists.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametricMesh {
    breakpoints_u: Vec<f64>,
    breakpoints_v: Vec<f64>,
}

impl ParametricMesh {
    pub fn new(breakpoints_u: &[f64], breakpoints_v: &[f64]) -> Result<Self> {
        // Validation is shared with knot vectors.
        KnotVector::new(0, breakpoints_u, 1)?;
        KnotVector::new(0, breakpoints_v, 1)?;
        Ok(ParametricMesh {
            breakpoints_u: breakpoints_u.to_vec(),
            breakpoints_v: breakpoints_v.to_vec(),
        })
    }

    pub fn uniform(nu: usize, nv: usize) -> Result<Self> {
        if nu == 0 || nv == 0 {
            return Err(Error::param("mesh", "element counts must be positive"));
        }
        Self::new(
            &crate::splines::uniform_breakpoints(nu),
            &crate::splines::uniform_breakpoints(nv),
        )
    }

    pub fn breakpoints_u(&self) -> &[f64] {
        &self.breakpoints_u
    }

    pub fn breakpoints_v(&self) -> &[f64] {
        &self.breakpoints_v
    }

    pub fn n_elements_u(&self) -> usize {
        self.breakpoints_u.len() - 1
    }

    pub fn n_elements_v(&self) -> usize {
        self.breakpoints_v.len() - 1
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements_u() * self.n_elements_v()
    }

    pub fn element(&self, index: usize) -> Element {
        let nu = self.n_elements_u();
        let (iu, iv) = (index % nu, index / nu);
        Element {
            index,
            iu,
            iv,
            u: (self.breakpoints_u[iu], self.breakpoints_u[iu + 1]),
            v: (self.breakpoints_v[iv], self.breakpoints_v[iv + 1]),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.n_elements()).map(move |e| self.element(e))
    }

    /// `max h_Q` over the parametric elements.
    pub fn global_h(&self) -> f64 {
        self.elements().map(|e| e.diameter()).fold(0.0, f64::max)
    }

    /// Quasi-uniformity diagnostic `min h_Q / max h_Q`.
    pub fn quasi_uniformity(&self) -> f64 {
        let min = self.elements().map(|e| e.diameter()).fold(f64::MAX, f64::min);
        min / self.global_h()
    }

    /// Common refinement of two meshes.
    pub fn union(&self, other: &ParametricMesh) -> ParametricMesh {
        ParametricMesh {
            breakpoints_u: union_breakpoints(&self.breakpoints_u, &other.breakpoints_u),
            breakpoints_v: union_breakpoints(&self.breakpoints_v, &other.breakpoints_v),
        }
    }
}

/// Tensor-product spline space `S^{p1,p2}_{a1,a2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSpace {
    pub kv_u: KnotVector,
    pub kv_v: KnotVector,
}

/// Basis data of a tensor space at one point.
#[derive(Clone, Debug)]
pub struct TensorEvaluation {
    pub u: BasisEvaluation,
    pub v: BasisEvaluation,
    n1: usize,
}

impl TensorEvaluation {
    /// Iterates over active functions as `(global index, value, d/du, d/dv)`.
    /// Requires first derivatives in both directions.
    pub fn active(&self) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        let nu = self.u.n_active();
        let nv = self.v.n_active();
        (0..nv).flat_map(move |b| {
            (0..nu).map(move |a| {
                let i = self.u.first_active_index + a;
                let j = self.v.first_active_index + b;
                let (bu, dbu) = (self.u.value(0, a), self.u.value(1, a));
                let (bv, dbv) = (self.v.value(0, b), self.v.value(1, b));
                (i + self.n1 * j, bu * bv, dbu * bv, bu * dbv)
            })
        })
    }

    pub fn n_active(&self) -> usize {
        self.u.n_active() * self.v.n_active()
    }
}

impl TensorSpace {
    pub fn new(kv_u: KnotVector, kv_v: KnotVector) -> Self {
        TensorSpace { kv_u, kv_v }
    }

    pub fn n1(&self) -> usize {
        self.kv_u.dim()
    }

    pub fn n2(&self) -> usize {
        self.kv_v.dim()
    }

    pub fn ndof(&self) -> usize {
        self.n1() * self.n2()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n1() * j
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n1(), k / self.n1())
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.kv_u.degree(), self.kv_v.degree())
    }

    /// Basis values and first derivatives at `uhat`.
    pub fn eval(&self, uhat: [f64; 2]) -> Result<TensorEvaluation> {
        Ok(TensorEvaluation {
            u: self.kv_u.eval_basis(uhat[0], 1.min(self.kv_u.degree()))?,
            v: self.kv_v.eval_basis(uhat[1], 1.min(self.kv_v.degree()))?,
            n1: self.n1(),
        })
    }

    /// Value and parametric gradient of the field with `coeffs`.
    pub fn eval_field(&self, coeffs: &[f64], uhat: [f64; 2]) -> Result<(f64, [f64; 2])> {
        assert_eq!(coeffs.len(), self.ndof());
        let (pu, pv) = self.degrees();
        let eu = self.kv_u.eval_basis(uhat[0], 1.min(pu))?;
        let ev = self.kv_v.eval_basis(uhat[1], 1.min(pv))?;
        let mut out = (0.0, [0.0; 2]);
        for b in 0..ev.n_active() {
            for a in 0..eu.n_active() {
                let c = coeffs[self.index(eu.first_active_index + a, ev.first_active_index + b)];
                let bu = eu.value(0, a);
                let bv = ev.value(0, b);
                out.0 += c * bu * bv;
                if pu > 0 {
                    out.1[0] += c * eu.value(1, a) * bv;
                }
                if pv > 0 {
                    out.1[1] += c * bu * ev.value(1, b);
                }
            }
        }
        Ok(out)
    }
}

/// Deflection space `W` and the two rotation component spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateSpaces {
    pub p: usize,
    pub alpha: usize,
    pub mesh: ParametricMesh,
    /// `S^{p,p}_{alpha,alpha}`
    pub w: TensorSpace,
    /// `S^{p-1,p}_{alpha-1,alpha}`
    pub theta1: TensorSpace,
    /// `S^{p,p-1}_{alpha,alpha-1}`
    pub theta2: TensorSpace,
}

impl PlateSpaces {
    pub fn rotation_ndof(&self) -> usize {
        self.theta1.ndof() + self.theta2.ndof()
    }

    pub fn total_ndof(&self) -> usize {
        self.rotation_ndof() + self.w.ndof()
    }
}

/// Builds the compatible spaces for degree `p` and regularity `alpha` on
/// `mesh`. Requires `p >= 2` and `1 <= alpha <= p - 1`.
pub fn make_plate_spaces(p: usize, alpha: usize, mesh: &ParametricMesh) -> Result<PlateSpaces> {
    if p < 2 {
        return Err(Error::param("p", format!("degree must be at least 2, got {p}")));
    }
    if alpha < 1 || alpha > p - 1 {
        return Err(Error::param(
            "alpha",
            format!("regularity must satisfy 1 <= alpha <= p - 1 = {}, got {alpha}", p - 1),
        ));
    }
    let r = p - alpha;
    let bu = mesh.breakpoints_u();
    let bv = mesh.breakpoints_v();
    let wu = KnotVector::new(p, bu, r)?;
    let wv = KnotVector::new(p, bv, r)?;
    let du = wu.derivative_space()?;
    let dv = wv.derivative_space()?;
    Ok(PlateSpaces {
        p,
        alpha,
        mesh: mesh.clone(),
        w: TensorSpace::new(wu.clone(), wv.clone()),
        theta1: TensorSpace::new(du, wv),
        theta2: TensorSpace::new(wu, dv),
    })
}

/// Parametric sides of the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    U0,
    U1,
    V0,
    V1,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::U0, Side::U1, Side::V0, Side::V1];

    fn slot(self) -> usize {
        match self {
            Side::U0 => 0,
            Side::U1 => 1,
            Side::V0 => 2,
            Side::V1 => 3,
        }
    }

    /// Whether the side lies on `u = const`.
    pub fn is_u_side(self) -> bool {
        matches!(self, Side::U0 | Side::U1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::U0 => "u0",
            Side::U1 => "u1",
            Side::V0 => "v0",
            Side::V1 => "v1",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideKind {
    Clamped,
    SimplySupportedHard,
    SimplySupportedSoft,
    Free,
}

impl SideKind {
    pub fn parse(s: &str) -> Option<SideKind> {
        match s {
            "clamped" => Some(SideKind::Clamped),
            "simply_supported_hard" => Some(SideKind::SimplySupportedHard),
            "simply_supported_soft" => Some(SideKind::SimplySupportedSoft),
            "free" => Some(SideKind::Free),
            _ => None,
        }
    }

    fn constrains_deflection(self) -> bool {
        !matches!(self, SideKind::Free)
    }
}

/// Boundary condition kind on each parametric side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundarySpec {
    kinds: [SideKind; 4],
}

impl BoundarySpec {
    /// Rejects specifications without any clamped or supported side, which
    /// would leave rigid-body motions free.
    pub fn new(u0: SideKind, u1: SideKind, v0: SideKind, v1: SideKind) -> Result<Self> {
        let kinds = [u0, u1, v0, v1];
        if kinds.iter().all(|k| *k == SideKind::Free) {
            return Err(Error::param(
                "bc",
                "at least one side must be clamped or simply supported",
            ));
        }
        Ok(BoundarySpec { kinds })
    }

    pub fn uniform(kind: SideKind) -> Result<Self> {
        Self::new(kind, kind, kind, kind)
    }

    pub fn kind(&self, side: Side) -> SideKind {
        self.kinds[side.slot()]
    }
}

/// Indices of basis functions prescribed to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    pub w: Vec<bool>,
    pub theta1: Vec<bool>,
    pub theta2: Vec<bool>,
}

impl ConstraintSet {
    pub fn n_free_w(&self) -> usize {
        self.w.iter().filter(|c| !**c).count()
    }

    pub fn n_free_theta1(&self) -> usize {
        self.theta1.iter().filter(|c| !**c).count()
    }

    pub fn n_free_theta2(&self) -> usize {
        self.theta2.iter().filter(|c| !**c).count()
    }

    pub fn n_free(&self) -> usize {
        self.n_free_w() + self.n_free_theta1() + self.n_free_theta2()
    }

    /// Zeroes constrained entries of the three coefficient vectors.
    pub fn project(&self, theta1: &mut [f64], theta2: &mut [f64], w: &mut [f64]) {
        for (c, m) in theta1.iter_mut().zip(&self.theta1) {
            if *m {
                *c = 0.0;
            }
        }
        for (c, m) in theta2.iter_mut().zip(&self.theta2) {
            if *m {
                *c = 0.0;
            }
        }
        for (c, m) in w.iter_mut().zip(&self.w) {
            if *m {
                *c = 0.0;
            }
        }
    }
}

fn mark_side(space: &TensorSpace, side: Side, mask: &mut [bool]) {
    let (n1, n2) = (space.n1(), space.n2());
    match side {
        Side::U0 | Side::U1 => {
            let i = if side == Side::U0 { 0 } else { n1 - 1 };
            for j in 0..n2 {
                mask[space.index(i, j)] = true;
            }
        }
        Side::V0 | Side::V1 => {
            let j = if side == Side::V0 { 0 } else { n2 - 1 };
            for i in 0..n1 {
                mask[space.index(i, j)] = true;
            }
        }
    }
}

/// Strongly imposed homogeneous conditions. Deflection vanishes on clamped
/// and supported sides; both rotation components vanish on clamped sides;
/// on hard supports only the tangential component (`theta2` on `u` sides,
/// `theta1` on `v` sides) vanishes.
pub fn apply_boundary_conditions(spaces: &PlateSpaces, bc: &BoundarySpec) -> ConstraintSet {
    let mut set = ConstraintSet {
        w: vec![false; spaces.w.ndof()],
        theta1: vec![false; spaces.theta1.ndof()],
        theta2: vec![false; spaces.theta2.ndof()],
    };
    for side in Side::ALL {
        let kind = bc.kind(side);
        if kind.constrains_deflection() {
            mark_side(&spaces.w, side, &mut set.w);
        }
        match kind {
            SideKind::Clamped => {
                mark_side(&spaces.theta1, side, &mut set.theta1);
                mark_side(&spaces.theta2, side, &mut set.theta2);
            }
            SideKind::SimplySupportedHard => {
                if side.is_u_side() {
                    mark_side(&spaces.theta2, side, &mut set.theta2);
                } else {
                    mark_side(&spaces.theta1, side, &mut set.theta1);
                }
            }
            SideKind::SimplySupportedSoft | SideKind::Free => {}
        }
    }
    set
}

/// Coefficients of `grad w` in the rotation spaces, using the exact
/// derivative relation between `S^p_a` and `S^{p-1}_{a-1}`.
pub fn gradient_coefficients(spaces: &PlateSpaces, w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let du = spaces.w.kv_u.derivative_matrix()?;
    let dv = spaces.w.kv_v.derivative_matrix()?;
    let (n1, n2) = (spaces.w.n1(), spaces.w.n2());
    let mut t1 = vec![0.0; spaces.theta1.ndof()];
    let mut t2 = vec![0.0; spaces.theta2.ndof()];
    for j in 0..n2 {
        for ii in 0..n1 - 1 {
            let mut s = 0.0;
            for i in ii..=(ii + 1) {
                s += du.read(ii, i) * w[spaces.w.index(i, j)];
            }
            t1[spaces.theta1.index(ii, j)] = s;
        }
    }
    for jj in 0..n2 - 1 {
        for i in 0..n1 {
            let mut s = 0.0;
            for j in jj..=(jj + 1) {
                s += dv.read(jj, j) * w[spaces.w.index(i, j)];
            }
            t2[spaces.theta2.index(i, jj)] = s;
        }
    }
    Ok((t1, t2))
}

/// Interior check points per element: offsets `(k + 1/2) / per_element`.
fn check_points(breakpoints: &[f64], per_element: usize) -> Vec<f64> {
    breakpoints
        .windows(2)
        .flat_map(|w| {
            (0..per_element)
                .map(move |k| w[0] + (w[1] - w[0]) * (k as f64 + 0.5) / per_element as f64)
        })
        .collect()
}

/// One-dimensional least-squares fit of `target` (sampled on `fit_pts`) in
/// `space`; returns the fitted coefficients.
fn fit_1d(space: &KnotVector, fit_pts: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    let a = space.collocation_matrix(fit_pts, 0)?;
    let b = Mat::from_fn(target.len(), 1, |i, _| target[i]);
    let x = linalg::lstsq(&a, &b);
    Ok((0..space.dim()).map(|i| x.read(i, 0)).collect())
}

/// For every basis function `B` of `w`, fits `dB/du` in `theta1` and
/// `dB/dv` in `theta2` by least squares on a tensor sample grid and returns
/// the largest pointwise misfit on a separate check grid.
///
/// The tensor basis functions are separable, so the Kronecker least-squares
/// problem splits into a product of one-dimensional fits.
pub fn gradient_inclusion_residual(
    w: &TensorSpace,
    theta1: &TensorSpace,
    theta2: &TensorSpace,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    // (direction-u function, direction-v function) for each component.
    for (component, target) in [(0usize, theta1), (1usize, theta2)] {
        let fit_u = target.kv_u.element_samples(target.kv_u.degree() + 3);
        let fit_v = target.kv_v.element_samples(target.kv_v.degree() + 3);
        let bps_u = union_breakpoints(w.kv_u.breakpoints(), target.kv_u.breakpoints());
        let bps_v = union_breakpoints(w.kv_v.breakpoints(), target.kv_v.breakpoints());
        let chk_u = check_points(&bps_u, 11);
        let chk_v = check_points(&bps_v, 11);

        let (du, dv) = if component == 0 { (1, 0) } else { (0, 1) };
        let src_fit_u = w.kv_u.collocation_matrix(&fit_u, du)?;
        let src_fit_v = w.kv_v.collocation_matrix(&fit_v, dv)?;
        let src_chk_u = w.kv_u.collocation_matrix(&chk_u, du)?;
        let src_chk_v = w.kv_v.collocation_matrix(&chk_v, dv)?;
        let tgt_chk_u = target.kv_u.collocation_matrix(&chk_u, 0)?;
        let tgt_chk_v = target.kv_v.collocation_matrix(&chk_v, 0)?;

        let fit_dir = |space: &KnotVector,
                       pts: &[f64],
                       src_fit: &Mat<f64>,
                       src_chk: &Mat<f64>,
                       tgt_chk: &Mat<f64>,
                       i: usize|
         -> Result<(Vec<f64>, Vec<f64>)> {
            let samples: Vec<f64> = (0..pts.len()).map(|s| src_fit.read(s, i)).collect();
            let c = fit_1d(space, pts, &samples)?;
            let exact: Vec<f64> = (0..src_chk.nrows()).map(|s| src_chk.read(s, i)).collect();
            let fitted: Vec<f64> = (0..tgt_chk.nrows())
                .map(|s| (0..c.len()).map(|k| tgt_chk.read(s, k) * c[k]).sum())
                .collect();
            Ok((exact, fitted))
        };

        let per_u: Vec<(Vec<f64>, Vec<f64>)> = (0..w.n1())
            .map(|i| fit_dir(&target.kv_u, &fit_u, &src_fit_u, &src_chk_u, &tgt_chk_u, i))
            .collect::<Result<_>>()?;
        let per_v: Vec<(Vec<f64>, Vec<f64>)> = (0..w.n2())
            .map(|j| fit_dir(&target.kv_v, &fit_v, &src_fit_v, &src_chk_v, &tgt_chk_v, j))
            .collect::<Result<_>>()?;

        for (eu, fu) in &per_u {
            for (ev, fv) in &per_v {
                for a in 0..eu.len() {
                    for b in 0..ev.len() {
                        worst = worst.max((eu[a] * ev[b] - fu[a] * fv[b]).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Residual of the inclusion `grad W_h ⊆ Theta_h` for the plate spaces.
pub fn verify_gradient_inclusion(spaces: &PlateSpaces) -> Result<f64> {
    gradient_inclusion_residual(&spaces.w, &spaces.theta1, &spaces.theta2)
}

/// Parametric corners as `(point, side on u, side on v)`.
const CORNERS: [([f64; 2], Side, Side); 4] = [
    ([0.0, 0.0], Side::U0, Side::V0),
    ([1.0, 0.0], Side::U1, Side::V0),
    ([0.0, 1.0], Side::U0, Side::V1),
    ([1.0, 1.0], Side::U1, Side::V1),
];

/// Tests whether the parametric field `s = (s1, s2)` with coefficients in
/// the rotation spaces belongs to the discrete shear space with boundary
/// conditions: `s . t = 0` on hard-supported and clamped sides, and `s = 0`
/// at corners shared by a soft-supported and a clamped side.
pub fn check_shear_characterization(
    spaces: &PlateSpaces,
    bc: &BoundarySpec,
    s1: &[f64],
    s2: &[f64],
) -> Result<bool> {
    if s1.len() != spaces.theta1.ndof() || s2.len() != spaces.theta2.ndof() {
        return Err(Error::param("coeffs", "shear coefficients do not match the rotation spaces"));
    }
    let scale = s1.iter().chain(s2).fold(0.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-10 * scale;
    let component = |uhat: [f64; 2], which: usize| -> Result<f64> {
        if which == 0 {
            Ok(spaces.theta1.eval_field(s1, uhat)?.0)
        } else {
            Ok(spaces.theta2.eval_field(s2, uhat)?.0)
        }
    };

    for side in Side::ALL {
        let kind = bc.kind(side);
        if !matches!(kind, SideKind::Clamped | SideKind::SimplySupportedHard) {
            continue;
        }
        let (tangential, bps) = if side.is_u_side() {
            (1, spaces.mesh.breakpoints_v())
        } else {
            (0, spaces.mesh.breakpoints_u())
        };
        let fixed = match side {
            Side::U0 | Side::V0 => 0.0,
            Side::U1 | Side::V1 => 1.0,
        };
        let mut pts = check_points(bps, 7);
        pts.extend_from_slice(bps);
        for t in pts {
            let uhat = if side.is_u_side() { [fixed, t] } else { [t, fixed] };
            if component(uhat, tangential)?.abs() > tol {
                return Ok(false);
            }
        }
    }
    for (corner, su, sv) in CORNERS {
        let (ku, kv) = (bc.kind(su), bc.kind(sv));
        let mixed = (ku == SideKind::SimplySupportedSoft && kv == SideKind::Clamped)
            || (ku == SideKind::Clamped && kv == SideKind::SimplySupportedSoft);
        if mixed && (component(corner, 0)?.abs() > tol || component(corner, 1)?.abs() > tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

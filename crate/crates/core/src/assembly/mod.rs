//! Quadrature, material law and Galerkin assembly of the primal plate
//! problem
//!
//! ```text
//! a(theta, eta) + mu k t^-2 (theta - grad w, eta - grad v) = (f, v)
//! ```
//!
//! over the free degrees of freedom of `(Theta1, Theta2, W)`.

mod material;
mod quadrature;

use std::sync::Arc;

use rayon::prelude::*;

pub use material::{bending_stress, MaterialParams};
pub use quadrature::gauss_rule;

use crate::error::{Error, Result};
use crate::fields::{FieldValues, ReferenceSolution};
use crate::geometry::{self, GeometryMap, Mat2, MapSample};
use crate::linalg::CsrMatrix;
use crate::solver::{MixedTriple, ShearSource};
use crate::spaces::{BoundarySpec, ConstraintSet, Element, PlateSpaces, TensorSpace};
use crate::splines::KnotVector;

/// Transverse load as a function of physical coordinates.
pub type Load = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct PlateProblem {
    pub material: MaterialParams,
    pub thickness: f64,
    pub geometry: Arc<GeometryMap>,
    pub bc: BoundarySpec,
    pub load: Load,
}

impl std::fmt::Debug for PlateProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlateProblem")
            .field("material", &self.material)
            .field("thickness", &self.thickness)
            .field("bc", &self.bc)
            .finish_non_exhaustive()
    }
}

impl PlateProblem {
    pub fn new(
        material: MaterialParams,
        thickness: f64,
        geometry: Arc<GeometryMap>,
        bc: BoundarySpec,
        load: Load,
    ) -> Result<Self> {
        if !(thickness > 0.0) || !thickness.is_finite() {
            return Err(Error::param("t", format!("thickness must be positive, got {thickness}")));
        }
        Ok(PlateProblem {
            material,
            thickness,
            geometry,
            bc,
            load,
        })
    }

    pub fn shear_coefficient(&self) -> f64 {
        self.material.shear_coefficient(self.thickness)
    }
}

/// Global numbering `[Theta1 | Theta2 | W]` and its restriction to free
/// degrees of freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub n_theta1: usize,
    pub n_theta2: usize,
    pub n_w: usize,
    free_of_global: Vec<usize>,
    global_of_free: Vec<usize>,
}

const CONSTRAINED: usize = usize::MAX;

impl DofMap {
    pub fn new(spaces: &PlateSpaces, constraints: &ConstraintSet) -> Self {
        let mask: Vec<bool> = constraints
            .theta1
            .iter()
            .chain(&constraints.theta2)
            .chain(&constraints.w)
            .copied()
            .collect();
        let mut free_of_global = vec![CONSTRAINED; mask.len()];
        let mut global_of_free = Vec::new();
        for (g, &c) in mask.iter().enumerate() {
            if !c {
                free_of_global[g] = global_of_free.len();
                global_of_free.push(g);
            }
        }
        DofMap {
            n_theta1: spaces.theta1.ndof(),
            n_theta2: spaces.theta2.ndof(),
            n_w: spaces.w.ndof(),
            free_of_global,
            global_of_free,
        }
    }

    pub fn n_global(&self) -> usize {
        self.free_of_global.len()
    }

    pub fn n_free(&self) -> usize {
        self.global_of_free.len()
    }

    pub fn free_index(&self, global: usize) -> Option<usize> {
        let f = self.free_of_global[global];
        (f != CONSTRAINED).then_some(f)
    }

    pub fn global_index(&self, free: usize) -> usize {
        self.global_of_free[free]
    }

    /// Full coefficient vector (zeros at constrained slots).
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_global()];
        for (f, &g) in self.global_of_free.iter().enumerate() {
            out[g] = free[f];
        }
        out
    }

    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.global_of_free.iter().map(|&g| global[g]).collect()
    }
}

/// The constrained Galerkin system.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
}

impl LinearSystem {
    /// `A x` on free degrees of freedom.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }

    /// `max |A - A^T| / max |A|`.
    pub fn relative_asymmetry(&self) -> f64 {
        self.matrix.asymmetry() / self.matrix.max_abs().max(f64::MIN_POSITIVE)
    }
}

/// Contribution of one global basis function at a quadrature point, in
/// physical coordinates.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct DofSample {
    pub theta: [f64; 2],
    pub grad_theta: Mat2,
    pub w: f64,
    pub grad_w: [f64; 2],
}

/// All basis functions active at a point.
pub(crate) struct PointBasis {
    pub map: MapSample,
    pub dofs: Vec<usize>,
    pub samples: Vec<DofSample>,
}

impl PointBasis {
    /// Field values for full coefficients `[Theta1 | Theta2 | W]`.
    pub fn fields(&self, coeffs: &[f64]) -> FieldValues {
        let mut out = FieldValues::default();
        for (d, s) in self.dofs.iter().zip(&self.samples) {
            let c = coeffs[*d];
            if c == 0.0 {
                continue;
            }
            out.w += c * s.w;
            for i in 0..2 {
                out.theta[i] += c * s.theta[i];
                out.grad_w[i] += c * s.grad_w[i];
                for j in 0..2 {
                    out.grad_theta[i][j] += c * s.grad_theta[i][j];
                }
            }
        }
        out
    }
}

pub(crate) fn point_basis(
    spaces: &PlateSpaces,
    geometry: &GeometryMap,
    uhat: [f64; 2],
) -> Result<PointBasis> {
    let map = geometry.evaluate(uhat)?;
    let g = map.inv_transpose;
    let dg = map.inv_transpose_derivatives();
    let jinv = map.inverse();
    let n1 = spaces.theta1.ndof();
    let n2 = spaces.theta2.ndof();

    let t1 = spaces.theta1.eval(uhat)?;
    let t2 = spaces.theta2.eval(uhat)?;
    let tw = spaces.w.eval(uhat)?;
    let cap = t1.n_active() + t2.n_active() + tw.n_active();
    let mut dofs = Vec::with_capacity(cap);
    let mut samples = Vec::with_capacity(cap);

    for (comp, ev, offset) in [(0usize, &t1, 0usize), (1usize, &t2, n1)] {
        for (idx, n, nu, nv) in ev.active() {
            let dn = [nu, nv];
            let mut theta = [0.0; 2];
            let mut dtheta = [[0.0; 2]; 2];
            for i in 0..2 {
                theta[i] = g[i][comp] * n;
                for k in 0..2 {
                    dtheta[i][k] = dg[k][i][comp] * n + g[i][comp] * dn[k];
                }
            }
            dofs.push(offset + idx);
            samples.push(DofSample {
                theta,
                grad_theta: geometry::matmul(dtheta, jinv),
                ..Default::default()
            });
        }
    }
    for (idx, n, nu, nv) in tw.active() {
        dofs.push(n1 + n2 + idx);
        samples.push(DofSample {
            w: n,
            grad_w: geometry::scalar_gradient(&map, [nu, nv]),
            ..Default::default()
        });
    }
    Ok(PointBasis { map, dofs, samples })
}

/// Quadrature points `(uhat, weight)` of a tensor Gauss rule on an element,
/// weights including the parametric area (not the Jacobian).
pub(crate) fn element_rule(e: &Element, xs: &[f64], ws: &[f64]) -> Vec<([f64; 2], f64)> {
    let area = e.area();
    let mut out = Vec::with_capacity(xs.len() * xs.len());
    for (b, &r) in xs.iter().enumerate() {
        for (a, &s) in xs.iter().enumerate() {
            out.push((e.map(s, r), ws[a] * ws[b] * area));
        }
    }
    out
}

fn wrap_elem(element: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Assembly {
        element,
        source: Box::new(e),
    }
}

#[inline]
fn strain(g: &Mat2) -> [f64; 3] {
    [g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0])]
}

/// `C eps(a) : eps(b)` for strains stored as `[e11, e22, e12]`.
#[inline]
fn bending_energy(material: &MaterialParams, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = material.d_bend();
    let nu = material.nu;
    d * ((1.0 - nu) * (a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2])
        + nu * (a[0] + a[1]) * (b[0] + b[1]))
}

/// For each basis function of `a`, the inclusive index range of basis
/// functions of `b` whose supports share an element with it.
fn overlap_ranges(a: &KnotVector, b: &KnotVector) -> Vec<(usize, usize)> {
    let sb: Vec<(usize, usize)> = (0..b.dim()).map(|j| b.support_elements(j)).collect();
    (0..a.dim())
        .map(|i| {
            let (lo, hi) = a.support_elements(i);
            let first = sb.iter().position(|s| s.1 >= lo).unwrap_or(0);
            let last = sb.iter().rposition(|s| s.0 <= hi).unwrap_or(0);
            (first, last)
        })
        .collect()
}

fn sparsity_pattern(spaces: &PlateSpaces, dofs: &DofMap) -> Vec<Vec<usize>> {
    let comps: [(&TensorSpace, usize); 3] = [
        (&spaces.theta1, 0),
        (&spaces.theta2, spaces.theta1.ndof()),
        (&spaces.w, spaces.theta1.ndof() + spaces.theta2.ndof()),
    ];
    let mut rows = vec![Vec::new(); dofs.n_free()];
    for (sa, oa) in comps {
        let ranges: Vec<_> = comps
            .iter()
            .map(|(sb, ob)| {
                (
                    overlap_ranges(&sa.kv_u, &sb.kv_u),
                    overlap_ranges(&sa.kv_v, &sb.kv_v),
                    *sb,
                    *ob,
                )
            })
            .collect();
        for j in 0..sa.n2() {
            for i in 0..sa.n1() {
                let Some(row) = dofs.free_index(oa + sa.index(i, j)) else {
                    continue;
                };
                let cols = &mut rows[row];
                for (ru, rv, sb, ob) in &ranges {
                    for jj in rv[j].0..=rv[j].1 {
                        for ii in ru[i].0..=ru[i].1 {
                            if let Some(c) = dofs.free_index(ob + sb.index(ii, jj)) {
                                cols.push(c);
                            }
                        }
                    }
                }
                debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
    rows
}

struct ElementBlock {
    dofs: Vec<usize>,
    k: Vec<f64>,
    f: Vec<f64>,
}

fn element_block(
    problem: &PlateProblem,
    spaces: &PlateSpaces,
    dofs: &DofMap,
    e: &Element,
    xs: &[f64],
    ws: &[f64],
) -> Result<ElementBlock> {
    let kappa = problem.shear_coefficient();
    let mat = &problem.material;
    let mut block: Option<ElementBlock> = None;
    let mut eps: Vec<[f64; 3]> = Vec::new();
    let mut shear: Vec<[f64; 2]> = Vec::new();
    for (uhat, w) in element_rule(e, xs, ws) {
        let pb = point_basis(spaces, &problem.geometry, uhat)?;
        let n = pb.dofs.len();
        let blk = block.get_or_insert_with(|| ElementBlock {
            dofs: pb
                .dofs
                .iter()
                .map(|&g| dofs.free_index(g).unwrap_or(CONSTRAINED))
                .collect(),
            k: vec![0.0; n * n],
            f: vec![0.0; n],
        });
        let wt = w * pb.map.det.abs();
        let load = (problem.load)(pb.map.physical_point);
        eps.clear();
        shear.clear();
        for s in &pb.samples {
            eps.push(strain(&s.grad_theta));
            shear.push([s.theta[0] - s.grad_w[0], s.theta[1] - s.grad_w[1]]);
        }
        for a in 0..n {
            blk.f[a] += wt * load * pb.samples[a].w;
            for b in a..n {
                let v = bending_energy(mat, &eps[a], &eps[b])
                    + kappa * (shear[a][0] * shear[b][0] + shear[a][1] * shear[b][1]);
                blk.k[a * n + b] += wt * v;
            }
        }
    }
    let mut blk = block.expect("element rule is nonempty");
    let n = blk.dofs.len();
    for a in 0..n {
        for b in 0..a {
            blk.k[a * n + b] = blk.k[b * n + a];
        }
    }
    Ok(blk)
}

/// Assembles the constrained system with a `q x q` Gauss rule per element.
pub fn assemble_system(
    problem: &PlateProblem,
    spaces: &PlateSpaces,
    constraints: &ConstraintSet,
    q: usize,
) -> Result<LinearSystem> {
    let (xs, ws) = gauss_rule(q)?;
    let dofs = DofMap::new(spaces, constraints);
    let mut matrix = CsrMatrix::from_pattern(sparsity_pattern(spaces, &dofs));
    let mut rhs = vec![0.0; dofs.n_free()];

    let n_el = spaces.mesh.n_elements();
    const CHUNK: usize = 256;
    for start in (0..n_el).step_by(CHUNK) {
        let end = (start + CHUNK).min(n_el);
        let blocks: Vec<ElementBlock> = (start..end)
            .into_par_iter()
            .map(|ei| {
                let e = spaces.mesh.element(ei);
                element_block(problem, spaces, &dofs, &e, &xs, &ws).map_err(wrap_elem(ei))
            })
            .collect::<Result<_>>()?;
        for blk in blocks {
            let n = blk.dofs.len();
            for a in 0..n {
                let ra = blk.dofs[a];
                if ra == CONSTRAINED {
                    continue;
                }
                rhs[ra] += blk.f[a];
                for b in 0..n {
                    let cb = blk.dofs[b];
                    if cb != CONSTRAINED {
                        matrix.add(ra, cb, blk.k[a * n + b]);
                    }
                }
            }
        }
    }
    Ok(LinearSystem { matrix, rhs, dofs })
}

/// Weak residual of given fields against every free test function:
///
/// `r_i = a(theta, eta_i) + (gamma, eta_i - grad v_i) - (f, v_i)`
///
/// with `gamma` taken from the fields' shear. Vanishes for the exact
/// solution up to quadrature error.
pub fn weak_residual(
    problem: &PlateProblem,
    spaces: &PlateSpaces,
    constraints: &ConstraintSet,
    fields: &dyn ReferenceSolution,
    q: usize,
) -> Result<Vec<f64>> {
    let (xs, ws) = gauss_rule(q)?;
    let dofs = DofMap::new(spaces, constraints);
    let mat = &problem.material;
    let per_elem: Vec<Vec<(usize, f64)>> = (0..spaces.mesh.n_elements())
        .into_par_iter()
        .map(|ei| -> Result<Vec<(usize, f64)>> {
            let e = spaces.mesh.element(ei);
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for (uhat, w) in element_rule(&e, &xs, &ws) {
                let pb = point_basis(spaces, &problem.geometry, uhat).map_err(wrap_elem(ei))?;
                let x = pb.map.physical_point;
                let wt = w * pb.map.det.abs();
                let ex = fields.eval(uhat, x).map_err(wrap_elem(ei))?;
                let gamma = fields.shear(uhat, x).map_err(wrap_elem(ei))?;
                let e_ex = strain(&ex.grad_theta);
                let load = (problem.load)(x);
                if acc.is_empty() {
                    acc = pb.dofs.iter().map(|&g| (g, 0.0)).collect();
                }
                for (slot, s) in acc.iter_mut().zip(&pb.samples) {
                    let v = bending_energy(mat, &e_ex, &strain(&s.grad_theta))
                        + gamma[0] * (s.theta[0] - s.grad_w[0])
                        + gamma[1] * (s.theta[1] - s.grad_w[1])
                        - load * s.w;
                    slot.1 += wt * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut r = vec![0.0; dofs.n_free()];
    for acc in per_elem {
        for (g, v) in acc {
            if let Some(f) = dofs.free_index(g) {
                r[f] += v;
            }
        }
    }
    Ok(r)
}

/// Values of a mixed triple `(theta, w, gamma)` at a point.
struct MixedValues {
    f: FieldValues,
    gamma: [f64; 2],
}

fn mixed_values(triple: &MixedTriple, pb: &PointBasis, kappa: f64) -> MixedValues {
    let f = pb.fields(triple.solution.coefficients());
    let gamma = match &triple.shear {
        ShearSource::Recovered => [
            kappa * (f.theta[0] - f.grad_w[0]),
            kappa * (f.theta[1] - f.grad_w[1]),
        ],
        ShearSource::Coefficients(c) => {
            let mut g = [0.0; 2];
            for (d, s) in pb.dofs.iter().zip(&pb.samples) {
                if *d < c.len() {
                    g[0] += c[*d] * s.theta[0];
                    g[1] += c[*d] * s.theta[1];
                }
            }
            g
        }
    };
    MixedValues { f, gamma }
}

/// The symmetric mixed form
///
/// `B(beta, u, tau; eta, v, s) = a(beta, eta) + (tau, eta - grad v)
///   + (beta - grad u, s) - t^2 / (mu k) (tau, s)`.
///
/// Both triples must live on the same spaces and geometry.
pub fn mixed_form_value(
    problem: &PlateProblem,
    a: &MixedTriple,
    b: &MixedTriple,
    q: usize,
) -> Result<f64> {
    let (xs, ws) = gauss_rule(q)?;
    let spaces = a.solution.spaces();
    let kappa = problem.shear_coefficient();
    let mat = &problem.material;
    let per_elem: Vec<f64> = (0..spaces.mesh.n_elements())
        .into_par_iter()
        .map(|ei| -> Result<f64> {
            let e = spaces.mesh.element(ei);
            let mut sum = 0.0;
            for (uhat, w) in element_rule(&e, &xs, &ws) {
                let pb = point_basis(spaces, &problem.geometry, uhat).map_err(wrap_elem(ei))?;
                let wt = w * pb.map.det.abs();
                let x = mixed_values(a, &pb, kappa);
                let y = mixed_values(b, &pb, kappa);
                let dot = |p: [f64; 2], q: [f64; 2]| p[0] * q[0] + p[1] * q[1];
                let sub = |p: [f64; 2], q: [f64; 2]| [p[0] - q[0], p[1] - q[1]];
                let v = bending_energy(mat, &strain(&x.f.grad_theta), &strain(&y.f.grad_theta))
                    + dot(x.gamma, sub(y.f.theta, y.f.grad_w))
                    + dot(sub(x.f.theta, x.f.grad_w), y.gamma)
                    - dot(x.gamma, y.gamma) / kappa;
                sum += wt * v;
            }
            Ok(sum)
        })
        .collect::<Result<_>>()?;
    Ok(per_elem.iter().sum())
}

/// `(f, v)` for the deflection part of a full coefficient vector.
pub fn load_functional(
    problem: &PlateProblem,
    spaces: &PlateSpaces,
    coeffs: &[f64],
    q: usize,
) -> Result<f64> {
    let (xs, ws) = gauss_rule(q)?;
    let per_elem: Vec<f64> = (0..spaces.mesh.n_elements())
        .into_par_iter()
        .map(|ei| -> Result<f64> {
            let e = spaces.mesh.element(ei);
            let mut sum = 0.0;
            for (uhat, w) in element_rule(&e, &xs, &ws) {
                let pb = point_basis(spaces, &problem.geometry, uhat).map_err(wrap_elem(ei))?;
                let f = pb.fields(coeffs);
                sum += w * pb.map.det.abs() * (problem.load)(pb.map.physical_point) * f.w;
            }
            Ok(sum)
        })
        .collect::<Result<_>>()?;
    Ok(per_elem.iter().sum())
}

#[cfg(test)]
mod tests;

//! Single-patch geometry parametrizations `F: (0,1)^2 -> Omega`.
//!
//! Maps are tensor-product NURBS (weights all one for polynomial maps).
//! Scalar fields are pushed forward by composition, vector fields by the
//! covariant rule `v = DF^{-T} v_hat`, which maps parametric gradients to
//! physical gradients and keeps tangential components that vanish on a
//! side equal to zero on the image of that side.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use faer::Mat;

use crate::error::{Error, Result};
use crate::spaces::TensorSpace;
use crate::splines::KnotVector;

/// Determinant threshold below which a map is treated as singular.
pub const SINGULAR_DET: f64 = 1e-14;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryMap {
    space: TensorSpace,
    control_points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

/// Map data at one parametric point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapSample {
    pub physical_point: [f64; 2],
    /// `jacobian[i][k] = dF_i / du_k`
    pub jacobian: Mat2,
    pub det: f64,
    pub inv_transpose: Mat2,
    /// `second[i][k][l] = d^2 F_i / du_k du_l`
    pub second: [[[f64; 2]; 2]; 2],
}

impl MapSample {
    /// `DF^{-1}`.
    pub fn inverse(&self) -> Mat2 {
        transpose(self.inv_transpose)
    }

    /// `d(DF^{-T}) / du_k` for `k = 0, 1`.
    pub fn inv_transpose_derivatives(&self) -> [Mat2; 2] {
        let g = self.inv_transpose;
        let mut out = [[[0.0; 2]; 2]; 2];
        for (k, dk) in out.iter_mut().enumerate() {
            // d(J^T)/du_k [l][i] = d^2 F_i / du_l du_k
            let mut djt = [[0.0; 2]; 2];
            for l in 0..2 {
                for i in 0..2 {
                    djt[l][i] = self.second[i][l][k];
                }
            }
            let m = matmul(matmul(g, djt), g);
            for i in 0..2 {
                for j in 0..2 {
                    dk[i][j] = -m[i][j];
                }
            }
        }
        out
    }
}

pub fn transpose(a: Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn matmul(a: Mat2, b: Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn matvec(a: Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

impl GeometryMap {
    pub fn new(
        kv_u: KnotVector,
        kv_v: KnotVector,
        control_points: Vec<[f64; 2]>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let space = TensorSpace::new(kv_u, kv_v);
        if control_points.len() != space.ndof() || weights.len() != space.ndof() {
            return Err(Error::param(
                "control_points",
                format!(
                    "expected {} control points and weights, got {} and {}",
                    space.ndof(),
                    control_points.len(),
                    weights.len()
                ),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::param("weights", "weights must be positive"));
        }
        Ok(GeometryMap {
            space,
            control_points,
            weights,
        })
    }

    /// The identity map of the unit square.
    pub fn unit_square() -> Self {
        let kv = KnotVector::new(1, &[0.0, 1.0], 1).unwrap();
        GeometryMap::new(
            kv.clone(),
            kv,
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![1.0; 4],
        )
        .unwrap()
    }

    /// Bilinear map of the unit square onto `[0, a] x [0, b]`.
    pub fn rectangle(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::param("rectangle", "side lengths must be positive"));
        }
        let kv = KnotVector::new(1, &[0.0, 1.0], 1)?;
        GeometryMap::new(
            kv.clone(),
            kv,
            vec![[0.0, 0.0], [a, 0.0], [0.0, b], [a, b]],
            vec![1.0; 4],
        )
    }

    /// Quarter annulus in the first quadrant: `u` runs along the angle from
    /// the positive x-axis, `v` runs radially from `r_in` to `r_out`. The
    /// arcs are exact rational quadratics.
    pub fn quarter_annulus(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in) {
            return Err(Error::param(
                "radii",
                format!("need 0 < r_in < r_out, got r_in = {r_in}, r_out = {r_out}"),
            ));
        }
        let kv_u = KnotVector::new(2, &[0.0, 1.0], 1)?;
        let kv_v = KnotVector::new(1, &[0.0, 1.0], 1)?;
        let dirs = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let arc_w = [1.0, FRAC_1_SQRT_2, 1.0];
        let mut cps = Vec::with_capacity(6);
        let mut ws = Vec::with_capacity(6);
        for r in [r_in, r_out] {
            for (d, w) in dirs.iter().zip(arc_w) {
                cps.push([r * d[0], r * d[1]]);
                ws.push(w);
            }
        }
        GeometryMap::new(kv_u, kv_v, cps, ws)
    }

    pub fn kv_u(&self) -> &KnotVector {
        &self.space.kv_u
    }

    pub fn kv_v(&self) -> &KnotVector {
        &self.space.kv_v
    }

    pub fn control_points(&self) -> &[[f64; 2]] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_rational(&self) -> bool {
        self.weights.iter().any(|w| (w - self.weights[0]).abs() > 1e-15)
    }

    /// `F`, `DF`, `det DF`, `DF^{-T}` and second derivatives at `uhat`.
    pub fn evaluate(&self, uhat: [f64; 2]) -> Result<MapSample> {
        let (pu, pv) = self.space.degrees();
        let eu = self.space.kv_u.eval_basis(uhat[0], pu.min(2))?;
        let ev = self.space.kv_v.eval_basis(uhat[1], pv.min(2))?;
        let du = |d: usize, a: usize| if d <= eu.nderiv() { eu.value(d, a) } else { 0.0 };
        let dv = |d: usize, b: usize| if d <= ev.nderiv() { ev.value(d, b) } else { 0.0 };

        // homogeneous sums indexed by (du order, dv order)
        let orders = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        let mut a = [[0.0; 2]; 6];
        let mut w = [0.0; 6];
        for b in 0..ev.n_active() {
            for aa in 0..eu.n_active() {
                let k = self
                    .space
                    .index(eu.first_active_index + aa, ev.first_active_index + b);
                let cw = self.weights[k];
                let cp = self.control_points[k];
                for (o, &(ou, ov)) in orders.iter().enumerate() {
                    let n = du(ou, aa) * dv(ov, b) * cw;
                    w[o] += n;
                    a[o][0] += n * cp[0];
                    a[o][1] += n * cp[1];
                }
            }
        }
        let mut f = [0.0; 2];
        let mut fu = [0.0; 2];
        let mut fv = [0.0; 2];
        let mut fuu = [0.0; 2];
        let mut fuv = [0.0; 2];
        let mut fvv = [0.0; 2];
        for i in 0..2 {
            f[i] = a[0][i] / w[0];
            fu[i] = (a[1][i] - w[1] * f[i]) / w[0];
            fv[i] = (a[2][i] - w[2] * f[i]) / w[0];
            fuu[i] = (a[3][i] - 2.0 * w[1] * fu[i] - w[3] * f[i]) / w[0];
            fuv[i] = (a[4][i] - w[1] * fv[i] - w[2] * fu[i] - w[4] * f[i]) / w[0];
            fvv[i] = (a[5][i] - 2.0 * w[2] * fv[i] - w[5] * f[i]) / w[0];
        }
        let jac = [[fu[0], fv[0]], [fu[1], fv[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > SINGULAR_DET) {
            return Err(Error::SingularMap {
                u: uhat[0],
                v: uhat[1],
                det,
            });
        }
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        let mut second = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            second[i] = [[fuu[i], fuv[i]], [fuv[i], fvv[i]]];
        }
        Ok(MapSample {
            physical_point: f,
            jacobian: jac,
            det,
            inv_transpose: inv_t,
            second,
        })
    }

    /// Same map on refined/elevated knot vectors. Both target knot vectors
    /// must contain the current ones; the represented map is unchanged.
    pub fn represented_on(&self, kv_u: &KnotVector, kv_v: &KnotVector) -> Result<GeometryMap> {
        let tu = self.space.kv_u.transfer_matrix(kv_u)?;
        let tv = self.space.kv_v.transfer_matrix(kv_v)?;
        let (n1, n2) = (self.space.n1(), self.space.n2());
        let (m1, m2) = (kv_u.dim(), kv_v.dim());
        // homogeneous coordinates (w x, w y, w)
        let mut out = [
            Mat::<f64>::zeros(m1, m2),
            Mat::<f64>::zeros(m1, m2),
            Mat::<f64>::zeros(m1, m2),
        ];
        for (c, o) in out.iter_mut().enumerate() {
            let h = Mat::<f64>::from_fn(n1, n2, |i, j| {
                let k = self.space.index(i, j);
                let w = self.weights[k];
                if c < 2 {
                    w * self.control_points[k][c]
                } else {
                    w
                }
            });
            *o = &tu * &h * tv.transpose();
        }
        let target = TensorSpace::new(kv_u.clone(), kv_v.clone());
        let mut cps = vec![[0.0; 2]; target.ndof()];
        let mut ws = vec![0.0; target.ndof()];
        for j in 0..m2 {
            for i in 0..m1 {
                let k = target.index(i, j);
                let w = out[2].read(i, j);
                ws[k] = w;
                cps[k] = [out[0].read(i, j) / w, out[1].read(i, j) / w];
            }
        }
        GeometryMap::new(kv_u.clone(), kv_v.clone(), cps, ws)
    }

    /// Inserts breakpoints in both directions.
    pub fn refined(&self, new_u: &[f64], new_v: &[f64]) -> Result<GeometryMap> {
        let ku = self.space.kv_u.insert_knots(new_u)?;
        let kv = self.space.kv_v.insert_knots(new_v)?;
        self.represented_on(&ku, &kv)
    }

    /// Elevates the degrees keeping regularity.
    pub fn elevated(&self, pu: usize, pv: usize) -> Result<GeometryMap> {
        let ku = self.space.kv_u.degree_elevate(pu)?;
        let kv = self.space.kv_v.degree_elevate(pv)?;
        self.represented_on(&ku, &kv)
    }

    /// Parses the plain-text control-net format:
    ///
    /// ```text
    /// # comments start with '#'
    /// <degree_u> <degree_v>
    /// <n_knots_u> <n_knots_v>
    /// <knots_u ...>
    /// <knots_v ...>
    /// <x y w>   one row per control point, u index fastest
    /// ```
    pub fn from_control_net(text: &str) -> Result<GeometryMap> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let mut next_num = |what: &str| -> Result<f64> {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::GeometryFile(format!("unexpected end of file reading {what}")))?;
            tok.parse::<f64>()
                .map_err(|_| Error::GeometryFile(format!("cannot parse `{tok}` as {what}")))
        };
        let next_int = |what: &str, f: &mut dyn FnMut(&str) -> Result<f64>| -> Result<usize> {
            let v = f(what)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::GeometryFile(format!("{what} must be a nonnegative integer")));
            }
            Ok(v as usize)
        };
        let pu = next_int("degree_u", &mut next_num)?;
        let pv = next_int("degree_v", &mut next_num)?;
        let nku = next_int("n_knots_u", &mut next_num)?;
        let nkv = next_int("n_knots_v", &mut next_num)?;
        let ku: Vec<f64> = (0..nku).map(|_| next_num("knot_u")).collect::<Result<_>>()?;
        let kv: Vec<f64> = (0..nkv).map(|_| next_num("knot_v")).collect::<Result<_>>()?;
        let kvu = KnotVector::from_knots(pu, &ku)
            .map_err(|e| Error::GeometryFile(format!("knots_u: {e}")))?;
        let kvv = KnotVector::from_knots(pv, &kv)
            .map_err(|e| Error::GeometryFile(format!("knots_v: {e}")))?;
        let n = kvu.dim() * kvv.dim();
        let mut cps = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            let x = next_num("x")?;
            let y = next_num("y")?;
            let w = next_num("w")?;
            cps.push([x, y]);
            ws.push(w);
        }
        if tokens.next().is_some() {
            return Err(Error::GeometryFile("trailing data after control points".into()));
        }
        GeometryMap::new(kvu, kvv, cps, ws).map_err(|e| Error::GeometryFile(e.to_string()))
    }

    pub fn to_control_net(&self) -> String {
        let mut s = String::new();
        let (ku, kv) = (self.space.kv_u.knots(), self.space.kv_v.knots());
        let _ = writeln!(s, "{} {}", self.space.kv_u.degree(), self.space.kv_v.degree());
        let _ = writeln!(s, "{} {}", ku.len(), kv.len());
        let join = |k: &[f64]| k.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{}", join(ku));
        let _ = writeln!(s, "{}", join(kv));
        for (p, w) in self.control_points.iter().zip(&self.weights) {
            let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], w);
        }
        s
    }
}

/// Scalar push-forward: returns the value and `DF^{-T} grad_hat`.
pub fn push_forward_scalar(
    sample: &MapSample,
    value: f64,
    parametric_gradient: [f64; 2],
) -> (f64, [f64; 2]) {
    (value, matvec(sample.inv_transpose, parametric_gradient))
}

/// Covariant push-forward `DF^{-T} v_hat`.
pub fn covariant_push_forward(sample: &MapSample, parametric_vector: [f64; 2]) -> [f64; 2] {
    matvec(sample.inv_transpose, parametric_vector)
}

/// Physical gradient `g[i][j] = d theta_i / dx_j` of the covariant
/// push-forward of `vhat`, where `dvhat[i][k] = d vhat_i / du_k`.
pub fn covariant_gradient(sample: &MapSample, vhat: [f64; 2], dvhat: Mat2) -> Mat2 {
    let g = sample.inv_transpose;
    let dg = sample.inv_transpose_derivatives();
    let jinv = sample.inverse();
    // d theta_i / du_k
    let mut dtheta = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            dtheta[i][k] = dg[k][i][0] * vhat[0]
                + dg[k][i][1] * vhat[1]
                + g[i][0] * dvhat[0][k]
                + g[i][1] * dvhat[1][k];
        }
    }
    matmul(dtheta, jinv)
}

/// Physical gradient of a scalar field from its parametric gradient.
pub fn scalar_gradient(sample: &MapSample, parametric_gradient: [f64; 2]) -> [f64; 2] {
    matvec(sample.inv_transpose, parametric_gradient)
}

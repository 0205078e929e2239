//! Error norms against exact or reference solutions, the mesh-dependent
//! triple norms, and convergence slopes.

use rayon::prelude::*;

use crate::assembly::{gauss_rule, point_basis};
use crate::error::{Error, Result};
use crate::fields::ReferenceSolution;
use crate::geometry::GeometryMap;
use crate::solver::DiscreteSolution;
use crate::spaces::{Element, ParametricMesh};

/// Errors of one discrete solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// Maximum physical element diameter.
    pub h: f64,
    pub n_dof: usize,
    pub err_theta_h1: f64,
    pub err_theta_l2: f64,
    pub err_w_h1: f64,
    pub err_w_l2: f64,
    /// `t ||gamma - gamma_h||_{L2}`
    pub err_shear_scaled: f64,
}

/// Physical diameter of an element: largest distance between the images
/// of its corners and edge midpoints.
pub fn element_diameter(geometry: &GeometryMap, e: &Element) -> Result<f64> {
    let mut pts = Vec::with_capacity(8);
    for (s, r) in [
        (0.0, 0.0),
        (0.5, 0.0),
        (1.0, 0.0),
        (1.0, 0.5),
        (1.0, 1.0),
        (0.5, 1.0),
        (0.0, 1.0),
        (0.0, 0.5),
    ] {
        pts.push(geometry.evaluate(e.map(s, r))?.physical_point);
    }
    let mut d: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    Ok(d)
}

/// Maximum physical element diameter.
pub fn physical_mesh_size(geometry: &GeometryMap, mesh: &ParametricMesh) -> Result<f64> {
    mesh.elements()
        .map(|e| element_diameter(geometry, &e))
        .try_fold(0.0f64, |m, d| Ok(m.max(d?)))
}

/// Sums `f` over a tensor Gauss rule on every element, in parallel per
/// element with a fixed-order reduction. `f` receives the parametric point
/// and the parametric weight (without the Jacobian).
fn integrate<const N: usize, F>(mesh: &ParametricMesh, q: usize, f: F) -> Result<[f64; N]>
where
    F: Fn(&Element, [f64; 2], f64) -> Result<[f64; N]> + Sync,
{
    let (xs, ws) = gauss_rule(q)?;
    let per_elem: Vec<[f64; N]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|ei| {
            let e = mesh.element(ei);
            let area = e.area();
            let mut acc = [0.0; N];
            for (b, &r) in xs.iter().enumerate() {
                for (a, &s) in xs.iter().enumerate() {
                    let v = f(&e, e.map(s, r), ws[a] * ws[b] * area).map_err(|err| {
                        Error::Assembly {
                            element: ei,
                            source: Box::new(err),
                        }
                    })?;
                    for k in 0..N {
                        acc[k] += v[k];
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = [0.0; N];
    for acc in per_elem {
        for k in 0..N {
            total[k] += acc[k];
        }
    }
    Ok(total)
}

fn sq2(a: [f64; 2]) -> f64 {
    a[0] * a[0] + a[1] * a[1]
}

/// L² and H¹ errors of `sol` against `reference`, integrated with a
/// `q x q` Gauss rule (default `p + 2`) on the common refinement of both
/// meshes. H¹ errors are full norms.
pub fn error_norms(
    sol: &DiscreteSolution,
    reference: &dyn ReferenceSolution,
    q: Option<usize>,
) -> Result<ErrorReport> {
    let spaces = sol.spaces();
    let geometry = sol.geometry();
    let q = q.unwrap_or(spaces.p + 2);
    let mesh = match reference.parametric_mesh() {
        Some(m) => spaces.mesh.union(m),
        None => spaces.mesh.clone(),
    };
    let kappa = sol.material.shear_coefficient(sol.thickness);
    let coeffs = sol.coefficients();
    let [w_l2, w_semi, th_l2, th_semi, shear] = integrate(&mesh, q, |_, uhat, w| {
        let pb = point_basis(spaces, geometry, uhat)?;
        let x = pb.map.physical_point;
        let wt = w * pb.map.det.abs();
        let fh = pb.fields(coeffs);
        let fr = reference.eval(uhat, x)?;
        let gr = reference.shear(uhat, x)?;
        let gh = [
            kappa * (fh.theta[0] - fh.grad_w[0]),
            kappa * (fh.theta[1] - fh.grad_w[1]),
        ];
        let mut dth = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                dth += (fr.grad_theta[i][j] - fh.grad_theta[i][j]).powi(2);
            }
        }
        Ok([
            wt * (fr.w - fh.w).powi(2),
            wt * sq2([fr.grad_w[0] - fh.grad_w[0], fr.grad_w[1] - fh.grad_w[1]]),
            wt * sq2([fr.theta[0] - fh.theta[0], fr.theta[1] - fh.theta[1]]),
            wt * dth,
            wt * sq2([gr[0] - gh[0], gr[1] - gh[1]]),
        ])
    })?;
    Ok(ErrorReport {
        h: physical_mesh_size(geometry, &spaces.mesh)?,
        n_dof: sol.n_free,
        err_theta_h1: (th_l2 + th_semi).sqrt(),
        err_theta_l2: th_l2.sqrt(),
        err_w_h1: (w_l2 + w_semi).sqrt(),
        err_w_l2: w_l2.sqrt(),
        err_shear_scaled: sol.thickness * shear.sqrt(),
    })
}

/// `||theta_h - grad w_h||_{L2}`, the distance from the Kirchhoff
/// constraint.
pub fn kirchhoff_deviation(sol: &DiscreteSolution, q: Option<usize>) -> Result<f64> {
    let spaces = sol.spaces();
    let q = q.unwrap_or(spaces.p + 2);
    let coeffs = sol.coefficients();
    let [d] = integrate(&spaces.mesh, q, |_, uhat, w| {
        let pb = point_basis(spaces, sol.geometry(), uhat)?;
        let f = pb.fields(coeffs);
        Ok([w * pb.map.det.abs() * sq2([f.theta[0] - f.grad_w[0], f.theta[1] - f.grad_w[1]])])
    })?;
    Ok(d.sqrt())
}

/// Squared rotation triple norm
/// `||eta||_{H1}^2 + sum_K (t^2 + h_K^2)^{-1} ||grad v - eta||_K^2`
/// of the rotation/deflection pair held in `fields` (`theta` is `eta`,
/// `w` is `v`).
pub fn triple_norm_rot_sq(
    fields: &dyn ReferenceSolution,
    geometry: &GeometryMap,
    mesh: &ParametricMesh,
    t: f64,
    q: usize,
) -> Result<f64> {
    let hk: Vec<f64> = mesh
        .elements()
        .map(|e| element_diameter(geometry, &e))
        .collect::<Result<_>>()?;
    let [h1, mesh_term] = integrate(mesh, q, |e, uhat, w| {
        let m = geometry.evaluate(uhat)?;
        let wt = w * m.det.abs();
        let f = fields.eval(uhat, m.physical_point)?;
        let mut g2 = 0.0;
        for row in f.grad_theta {
            g2 += sq2(row);
        }
        let mis = [f.grad_w[0] - f.theta[0], f.grad_w[1] - f.theta[1]];
        let h = hk[e.index];
        Ok([wt * (sq2(f.theta) + g2), wt * sq2(mis) / (t * t + h * h)])
    })?;
    Ok(h1 + mesh_term)
}

/// Squared shear triple norm `t^2 ||s||^2 + sum_K h_K^2 ||s||_K^2` of the
/// shear held in `fields`.
pub fn triple_norm_shear_sq(
    fields: &dyn ReferenceSolution,
    geometry: &GeometryMap,
    mesh: &ParametricMesh,
    t: f64,
    q: usize,
) -> Result<f64> {
    let hk: Vec<f64> = mesh
        .elements()
        .map(|e| element_diameter(geometry, &e))
        .collect::<Result<_>>()?;
    let [v] = integrate(mesh, q, |e, uhat, w| {
        let m = geometry.evaluate(uhat)?;
        let s = fields.shear(uhat, m.physical_point)?;
        let h = hk[e.index];
        Ok([w * m.det.abs() * (t * t + h * h) * sq2(s)])
    })?;
    Ok(v)
}

/// Successive slopes `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`; absent
/// where an error is not positive or the mesh sizes coincide.
pub fn convergence_slope(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != hs.len() {
        return Err(Error::param(
            "errors",
            format!("{} errors but {} mesh sizes", errors.len(), hs.len()),
        ));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            let ok = e[0] > 0.0 && e[1] > 0.0 && h[0] > 0.0 && h[1] > 0.0 && h[0] != h[1];
            ok.then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        })
        .collect())
}

/// Least-squares slope of `log e` against `log h` over the entries with
/// positive error; `None` if fewer than two remain.
pub fn least_squares_slope(errors: &[f64], hs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .zip(hs)
        .filter(|(e, h)| **e > 0.0 && **h > 0.0)
        .map(|(e, h)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

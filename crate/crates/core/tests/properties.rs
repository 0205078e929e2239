//! Randomized invariants of the spline, space, geometry and norm layers.

use std::sync::Arc;

use plate_iga::assembly::MaterialParams;
use plate_iga::geometry::GeometryMap;
use plate_iga::norms::{error_norms, triple_norm_rot_sq, triple_norm_shear_sq};
use plate_iga::solver::DiscreteSolution;
use plate_iga::spaces::{
    apply_boundary_conditions, make_plate_spaces, verify_gradient_inclusion, BoundarySpec,
    ParametricMesh, PlateSpaces, SideKind,
};
use plate_iga::splines::KnotVector;
use proptest::prelude::*;

/// Strictly increasing breakpoints on [0, 1] from positive element widths.
fn breakpoints(widths: &[f64]) -> Vec<f64> {
    let total: f64 = widths.iter().sum();
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for w in &widths[..widths.len() - 1] {
        acc += w / total;
        out.push(acc);
    }
    out.push(1.0);
    out
}

fn widths(max_elements: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..1.0, 1..=max_elements)
}

/// Degree `p` and interior multiplicity `1 <= r <= p`.
fn degree_and_multiplicity() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=5).prop_flat_map(|p| (Just(p), 1..=p))
}

fn plate_case() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (2usize..=4)
        .prop_flat_map(|p| (Just(p), 1..p, widths(5), widths(5)))
        .prop_map(|(p, a, wu, wv)| (p, a, breakpoints(&wu), breakpoints(&wv)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_partition_of_unity_and_nonnegativity(
        (p, r) in degree_and_multiplicity(),
        w in widths(7),
        x in 0.0f64..=1.0,
    ) {
        let kv = KnotVector::new(p, &breakpoints(&w), r).unwrap();
        let ev = kv.eval_basis(x, 1).unwrap();
        let sum: f64 = ev.row(0).iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(ev.row(0).iter().all(|b| *b >= -1e-14));
        let dsum: f64 = ev.row(1).iter().sum();
        let dmax = ev.row(1).iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(dsum.abs() <= 1e-13 * dmax * (p + 1) as f64);
    }

    #[test]
    fn basis_local_support(
        (p, r) in degree_and_multiplicity(),
        w in widths(6),
        x in 0.0f64..=1.0,
    ) {
        let kv = KnotVector::new(p, &breakpoints(&w), r).unwrap();
        let ev = kv.eval_basis(x, 0).unwrap();
        let knots = kv.knots();
        for i in 0..kv.dim() {
            let active = i >= ev.first_active_index && i < ev.first_active_index + ev.n_active();
            let value = if active { ev.value(0, i - ev.first_active_index) } else { 0.0 };
            if x < knots[i] || x > knots[i + p + 1] {
                prop_assert!(value.abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn dimension_identities((p, r) in degree_and_multiplicity(), w in widths(6)) {
        let bps = breakpoints(&w);
        let m = bps.len();
        let kv = KnotVector::new(p, &bps, r).unwrap();
        prop_assert_eq!(kv.dim(), p + 1 + (m - 2) * r);
        // raising the degree and the regularity together keeps r
        let up = KnotVector::new(p + 1, &bps, r).unwrap();
        prop_assert_eq!(up.dim(), kv.dim() + 1);
    }

    #[test]
    fn derivative_lies_in_derivative_space(
        (p, r) in (1usize..=5).prop_flat_map(|p| (Just(p), 1..=p)),
        w in widths(6),
        coeffs in prop::collection::vec(-1.0f64..1.0, 40),
        x in 0.0f64..=1.0,
    ) {
        let kv = KnotVector::new(p, &breakpoints(&w), r).unwrap();
        let n = kv.dim();
        let c = &coeffs[..n.min(coeffs.len())];
        prop_assume!(c.len() == n);
        let d = kv.derivative_matrix().unwrap();
        let dc: Vec<f64> = (0..n - 1).map(|j| (0..n).map(|i| d.read(j, i) * c[i]).sum()).collect();
        let target = kv.derivative_space().unwrap();
        let direct = kv.eval_spline(c, x, 1).unwrap();
        let via = target.eval_spline(&dc, x, 0).unwrap();
        let scale = dc.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!((direct - via).abs() <= 1e-10 * scale);
    }

    #[test]
    fn knot_insertion_preserves_splines(
        p in 1usize..=4,
        new in prop::collection::vec(0.01f64..0.99, 1..4),
        coeffs in prop::collection::vec(-1.0f64..1.0, 8),
        x in 0.0f64..=1.0,
    ) {
        let kv = KnotVector::uniform(p, 3, 1).unwrap();
        let mut new = new;
        new.sort_by(|a, b| a.partial_cmp(b).unwrap());
        new.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        prop_assume!(new.iter().all(|z| kv.breakpoints().iter().all(|b| (b - z).abs() > 1e-3)));
        let c = &coeffs[..kv.dim()];
        let (fine, t) = kv.insert_knots_with_matrix(&new).unwrap();
        let fc: Vec<f64> = (0..fine.dim())
            .map(|i| (0..kv.dim()).map(|j| t.read(i, j) * c[j]).sum())
            .collect();
        let a = kv.eval_spline(c, x, 0).unwrap();
        let b = fine.eval_spline(&fc, x, 0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plate_space_dimensions((p, alpha, bu, bv) in plate_case()) {
        let mesh = ParametricMesh::new(&bu, &bv).unwrap();
        let s = make_plate_spaces(p, alpha, &mesh).unwrap();
        let r = p - alpha;
        let dim = |m: usize, deg: usize| deg + 1 + (m - 2) * r;
        prop_assert_eq!(s.w.ndof(), dim(bu.len(), p) * dim(bv.len(), p));
        prop_assert_eq!(s.theta1.ndof(), dim(bu.len(), p - 1) * dim(bv.len(), p));
        prop_assert_eq!(s.theta2.ndof(), dim(bu.len(), p) * dim(bv.len(), p - 1));
    }

    #[test]
    fn gradient_inclusion_on_random_meshes((p, alpha, bu, bv) in plate_case()) {
        let mesh = ParametricMesh::new(&bu, &bv).unwrap();
        let s = make_plate_spaces(p, alpha, &mesh).unwrap();
        prop_assert!(verify_gradient_inclusion(&s).unwrap() <= 1e-10);
    }

    #[test]
    fn constrained_functions_vanish_on_their_sides(
        (p, alpha, bu, bv) in plate_case(),
        kinds in prop::collection::vec(0usize..4, 4),
        coeffs in prop::collection::vec(-1.0f64..1.0, 1200),
        s in 0.0f64..=1.0,
    ) {
        let all = [
            SideKind::Clamped,
            SideKind::SimplySupportedHard,
            SideKind::SimplySupportedSoft,
            SideKind::Free,
        ];
        let k: Vec<SideKind> = kinds.iter().map(|&i| all[i]).collect();
        prop_assume!(k.iter().any(|x| *x != SideKind::Free));
        let bc = BoundarySpec::new(k[0], k[1], k[2], k[3]).unwrap();
        let mesh = ParametricMesh::new(&bu, &bv).unwrap();
        let sp = make_plate_spaces(p, alpha, &mesh).unwrap();
        prop_assume!(sp.total_ndof() <= coeffs.len());
        let c = apply_boundary_conditions(&sp, &bc);
        let (mut t1, mut t2, mut w) = split(&sp, &coeffs);
        c.project(&mut t1, &mut t2, &mut w);
        // (point on the side, side kind, whether it is a u side)
        let sides = [
            ([0.0, s], k[0], true),
            ([1.0, s], k[1], true),
            ([s, 0.0], k[2], false),
            ([s, 1.0], k[3], false),
        ];
        for (uhat, kind, u_side) in sides {
            let wv = sp.w.eval_field(&w, uhat).unwrap().0;
            let a1 = sp.theta1.eval_field(&t1, uhat).unwrap().0;
            let a2 = sp.theta2.eval_field(&t2, uhat).unwrap().0;
            if kind != SideKind::Free {
                prop_assert!(wv.abs() <= 1e-12);
            }
            let (tangential, normal) = if u_side { (a2, a1) } else { (a1, a2) };
            if matches!(kind, SideKind::Clamped | SideKind::SimplySupportedHard) {
                prop_assert!(tangential.abs() <= 1e-12);
            }
            if kind == SideKind::Clamped {
                prop_assert!(normal.abs() <= 1e-12);
            }
        }
    }
}

fn split(sp: &PlateSpaces, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n1 = sp.theta1.ndof();
    let n2 = sp.theta2.ndof();
    let nw = sp.w.ndof();
    (
        coeffs[..n1].to_vec(),
        coeffs[n1..n1 + n2].to_vec(),
        coeffs[n1 + n2..n1 + n2 + nw].to_vec(),
    )
}

fn annulus() -> Arc<GeometryMap> {
    Arc::new(GeometryMap::quarter_annulus(1.0, 2.5).unwrap())
}

fn solution(
    spaces: &Arc<PlateSpaces>,
    geometry: &Arc<GeometryMap>,
    coeffs: Vec<f64>,
    t: f64,
) -> DiscreteSolution {
    DiscreteSolution::new(
        spaces.clone(),
        geometry.clone(),
        coeffs,
        t,
        MaterialParams::default(),
        0,
    )
    .unwrap()
}

fn coeff_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn small_spaces() -> Arc<PlateSpaces> {
    Arc::new(make_plate_spaces(2, 1, &ParametricMesh::uniform(2, 2).unwrap()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geometry_refinement_invariance(
        new_u in prop::collection::vec(0.01f64..0.99, 1..4),
        new_v in prop::collection::vec(0.01f64..0.99, 1..4),
        pts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 20),
    ) {
        let g = GeometryMap::quarter_annulus(1.0, 2.5).unwrap();
        let clean = |mut v: Vec<f64>, existing: &[f64]| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            v.retain(|z| existing.iter().all(|b| (b - z).abs() > 1e-3));
            v
        };
        let nu = clean(new_u, g.kv_u().breakpoints());
        let nv = clean(new_v, g.kv_v().breakpoints());
        let r = g.refined(&nu, &nv).unwrap();
        for (u, v) in pts {
            let a = g.evaluate([u, v]).unwrap().physical_point;
            let b = r.evaluate([u, v]).unwrap().physical_point;
            prop_assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn norms_are_homogeneous(c in coeff_vec(200), scale in -3.0f64..3.0) {
        let sp = small_spaces();
        let g = annulus();
        let n = sp.total_ndof();
        let t = 1e-2;
        let x = solution(&sp, &g, c[..n].to_vec(), t);
        let cx = solution(&sp, &g, c[..n].iter().map(|v| scale * v).collect(), t);
        let zero = solution(&sp, &g, vec![0.0; n], t);
        let a = error_norms(&zero, &x, None).unwrap();
        let b = error_norms(&zero, &cx, None).unwrap();
        let s = scale.abs();
        for (u, v) in [
            (a.err_theta_h1, b.err_theta_h1),
            (a.err_theta_l2, b.err_theta_l2),
            (a.err_w_h1, b.err_w_h1),
            (a.err_w_l2, b.err_w_l2),
            (a.err_shear_scaled, b.err_shear_scaled),
        ] {
            prop_assert!((s * u - v).abs() <= 1e-12 * v.max(s * u).max(1e-300));
        }
        let rot = triple_norm_rot_sq(&x, &g, &sp.mesh, t, 4).unwrap();
        let crot = triple_norm_rot_sq(&cx, &g, &sp.mesh, t, 4).unwrap();
        prop_assert!((scale * scale * rot - crot).abs() <= 1e-12 * crot.max(1e-300));
        let sh = triple_norm_shear_sq(&x, &g, &sp.mesh, t, 4).unwrap();
        let csh = triple_norm_shear_sq(&cx, &g, &sp.mesh, t, 4).unwrap();
        prop_assert!((scale * scale * sh - csh).abs() <= 1e-12 * csh.max(1e-300));
    }

    #[test]
    fn error_norms_satisfy_triangle_inequality(c in coeff_vec(600)) {
        let sp = small_spaces();
        let g = annulus();
        let n = sp.total_ndof();
        let t = 1e-1;
        let a = solution(&sp, &g, c[..n].to_vec(), t);
        let b = solution(&sp, &g, c[n..2 * n].to_vec(), t);
        let d = solution(&sp, &g, c[2 * n..3 * n].to_vec(), t);
        let ab = error_norms(&a, &b, None).unwrap();
        let bd = error_norms(&b, &d, None).unwrap();
        let ad = error_norms(&a, &d, None).unwrap();
        let slack = 1e-12;
        prop_assert!(ad.err_theta_h1 <= (ab.err_theta_h1 + bd.err_theta_h1) * (1.0 + slack));
        prop_assert!(ad.err_theta_l2 <= (ab.err_theta_l2 + bd.err_theta_l2) * (1.0 + slack));
        prop_assert!(ad.err_w_h1 <= (ab.err_w_h1 + bd.err_w_h1) * (1.0 + slack));
        prop_assert!(ad.err_w_l2 <= (ab.err_w_l2 + bd.err_w_l2) * (1.0 + slack));
        prop_assert!(ad.err_shear_scaled <= (ab.err_shear_scaled + bd.err_shear_scaled) * (1.0 + slack));
    }

    /// On the clamped unit square `||v||^2 <= ||grad v||^2 / (2 pi^2)`, and
    /// `||grad v||^2 <= 2 (||eta||^2 + ||grad v - eta||^2)`, which gives
    /// `|||eta, v|||^2 >= min(1, 1 / (t^2 + h^2)) ||v||_{H1}^2 / (2 (1 + 1 / (2 pi^2)))`.
    #[test]
    fn rotation_triple_norm_dominates_deflection_h1(c in coeff_vec(200), t in 1e-4f64..1.0) {
        let sp = small_spaces();
        let g = Arc::new(GeometryMap::unit_square());
        let n = sp.total_ndof();
        let bc = BoundarySpec::uniform(SideKind::Clamped).unwrap();
        let (mut t1, mut t2, mut w) = split(&sp, &c[..n]);
        apply_boundary_conditions(&sp, &bc).project(&mut t1, &mut t2, &mut w);
        let coeffs: Vec<f64> = t1.into_iter().chain(t2).chain(w).collect();
        let x = solution(&sp, &g, coeffs, t);
        let zero = solution(&sp, &g, vec![0.0; n], t);
        let v_h1 = error_norms(&zero, &x, None).unwrap().err_w_h1;
        let triple = triple_norm_rot_sq(&x, &g, &sp.mesh, t, 4).unwrap();
        let h2 = 0.5; // squared diameter of a 1/2 x 1/2 element
        let pi2 = std::f64::consts::PI.powi(2);
        let c2 = (1.0f64).min(1.0 / (t * t + h2)) / (2.0 * (1.0 + 1.0 / (2.0 * pi2)));
        prop_assert!(triple >= c2 * v_h1 * v_h1 * (1.0 - 1e-12));
    }
}

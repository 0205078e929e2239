use super::*;
use crate::solver::{solve, solve_problem, DiscreteSolution, MixedTriple, ShearSource};
use crate::spaces::{
    apply_boundary_conditions, make_plate_spaces, ParametricMesh, SideKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(geometry: GeometryMap, bc: BoundarySpec, t: f64, load: Load) -> PlateProblem {
    PlateProblem::new(MaterialParams::default(), t, Arc::new(geometry), bc, load).unwrap()
}

fn square_problem(t: f64) -> PlateProblem {
    problem(
        GeometryMap::unit_square(),
        BoundarySpec::uniform(SideKind::Clamped).unwrap(),
        t,
        Arc::new(|x: [f64; 2]| 1.0 + x[0] * x[1]),
    )
}

fn annulus_problem(t: f64) -> PlateProblem {
    problem(
        GeometryMap::quarter_annulus(1.0, 2.5).unwrap(),
        BoundarySpec::new(
            SideKind::SimplySupportedHard,
            SideKind::SimplySupportedHard,
            SideKind::SimplySupportedSoft,
            SideKind::Free,
        )
        .unwrap(),
        t,
        Arc::new(|x: [f64; 2]| 1e4 * (2.0 * x[1].atan2(x[0])).sin()),
    )
}

fn random_free(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn symmetric_and_positive_definite() {
    for (pb, p, a) in [(square_problem(1e-2), 3, 2), (annulus_problem(1e-3), 2, 1)] {
        for t in [1e-4, 1e-1] {
            let pb = PlateProblem { thickness: t, ..pb.clone() };
            let spaces = make_plate_spaces(p, a, &ParametricMesh::uniform(4, 3).unwrap()).unwrap();
            let c = apply_boundary_conditions(&spaces, &pb.bc);
            let sys = assemble_system(&pb, &spaces, &c, p + 1).unwrap();
            assert!(sys.relative_asymmetry() <= 1e-12);
            assert!(crate::solver::is_positive_definite(&sys));
        }
    }
}

#[test]
fn zero_load_gives_zero_solution() {
    let mut pb = square_problem(1e-2);
    pb.load = Arc::new(|_| 0.0);
    let spaces = Arc::new(make_plate_spaces(2, 1, &ParametricMesh::uniform(3, 3).unwrap()).unwrap());
    let sol = solve_problem(&pb, spaces, 3, 1e-10).unwrap();
    assert!(sol.coefficients().iter().all(|c| *c == 0.0));
}

#[test]
fn reproduces_in_space_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for pb in [square_problem(1e-3), annulus_problem(1e-2)] {
        let spaces = make_plate_spaces(3, 2, &ParametricMesh::uniform(4, 4).unwrap()).unwrap();
        let c = apply_boundary_conditions(&spaces, &pb.bc);
        let mut sys = assemble_system(&pb, &spaces, &c, 4).unwrap();
        let xstar = random_free(&mut rng, sys.dofs.n_free());
        sys.rhs = sys.apply(&xstar);
        let x = solve(&sys, 1e-12).unwrap();
        let err: f64 = x.iter().zip(&xstar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nrm: f64 = xstar.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err / nrm <= 1e-8, "{}", err / nrm);
    }
}

#[test]
fn quadrature_sufficiency_on_polynomial_geometry() {
    let pb = problem(
        GeometryMap::rectangle(2.0, 1.5).unwrap(),
        BoundarySpec::uniform(SideKind::Clamped).unwrap(),
        1e-2,
        Arc::new(|_| 1.0),
    );
    let spaces = make_plate_spaces(3, 2, &ParametricMesh::uniform(3, 3).unwrap()).unwrap();
    let c = apply_boundary_conditions(&spaces, &pb.bc);
    let a = assemble_system(&pb, &spaces, &c, 4).unwrap();
    let b = assemble_system(&pb, &spaces, &c, 8).unwrap();
    let scale = a.matrix.max_abs();
    for i in 0..a.dofs.n_free() {
        for (j, v) in a.matrix.row(i) {
            assert!((v - b.matrix.get(i, j)).abs() <= 1e-13 * scale);
        }
    }
}

#[test]
fn singular_map_reports_element() {
    // collinear control points: the map flattens the square onto a segment
    let kv = KnotVector::new(1, &[0.0, 1.0], 1).unwrap();
    let g = GeometryMap::new(
        kv.clone(),
        kv,
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        vec![1.0; 4],
    )
    .unwrap();
    let pb = problem(g, BoundarySpec::uniform(SideKind::Clamped).unwrap(), 1e-2, Arc::new(|_| 1.0));
    let spaces = make_plate_spaces(2, 1, &ParametricMesh::uniform(2, 2).unwrap()).unwrap();
    let c = apply_boundary_conditions(&spaces, &pb.bc);
    match assemble_system(&pb, &spaces, &c, 3) {
        Err(Error::Assembly { element, source }) => {
            assert_eq!(element, 0);
            assert!(matches!(*source, Error::SingularMap { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
}

fn random_triple(
    rng: &mut ChaCha8Rng,
    pb: &PlateProblem,
    spaces: &Arc<crate::spaces::PlateSpaces>,
) -> MixedTriple {
    let c = apply_boundary_conditions(spaces, &pb.bc);
    let dofs = DofMap::new(spaces, &c);
    let free = random_free(rng, dofs.n_free());
    let sol = DiscreteSolution::from_free(pb, spaces.clone(), &dofs, &free).unwrap();
    let gamma = random_free(rng, spaces.rotation_ndof());
    MixedTriple {
        solution: sol,
        shear: ShearSource::Coefficients(gamma),
    }
}

#[test]
fn mixed_form_zero_and_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pb = annulus_problem(1e-2);
    let spaces = Arc::new(make_plate_spaces(2, 1, &ParametricMesh::uniform(3, 3).unwrap()).unwrap());
    let zero = MixedTriple {
        solution: DiscreteSolution::new(
            spaces.clone(),
            pb.geometry.clone(),
            vec![0.0; spaces.total_ndof()],
            pb.thickness,
            pb.material,
            0,
        )
        .unwrap(),
        shear: ShearSource::Coefficients(vec![0.0; spaces.rotation_ndof()]),
    };
    assert_eq!(mixed_form_value(&pb, &zero, &zero, 4).unwrap(), 0.0);
    for _ in 0..3 {
        let x = random_triple(&mut rng, &pb, &spaces);
        let y = random_triple(&mut rng, &pb, &spaces);
        let bxy = mixed_form_value(&pb, &x, &y, 4).unwrap();
        let byx = mixed_form_value(&pb, &y, &x, 4).unwrap();
        assert!((bxy - byx).abs() <= 1e-12 * bxy.abs().max(byx.abs()));
    }
}

#[test]
fn recovered_shear_satisfies_mixed_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pb = square_problem(1e-2);
    let spaces = Arc::new(make_plate_spaces(3, 2, &ParametricMesh::uniform(4, 4).unwrap()).unwrap());
    let sol = solve_problem(&pb, spaces.clone(), 4, 1e-12).unwrap();
    let xh = MixedTriple {
        solution: sol,
        shear: ShearSource::Recovered,
    };
    for _ in 0..3 {
        let y = random_triple(&mut rng, &pb, &spaces);
        let b = mixed_form_value(&pb, &xh, &y, 4).unwrap();
        let f = load_functional(&pb, &spaces, y.solution.coefficients(), 4).unwrap();
        let scale = b.abs().max(f.abs());
        assert!((b - f).abs() <= 1e-8 * scale, "{b} vs {f}");
    }
}

#[test]
fn energy_identity() {
    let pb = annulus_problem(1e-2);
    let spaces = Arc::new(make_plate_spaces(2, 1, &ParametricMesh::uniform(4, 4).unwrap()).unwrap());
    let sol = solve_problem(&pb, spaces.clone(), 3, 1e-10).unwrap();
    let c = apply_boundary_conditions(&spaces, &pb.bc);
    let sys = assemble_system(&pb, &spaces, &c, 3).unwrap();
    let x = sys.dofs.restrict(sol.coefficients());
    let ax = sys.apply(&x);
    let energy: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
    let fw = load_functional(&pb, &spaces, sol.coefficients(), 3).unwrap();
    assert!((energy - fw).abs() <= 1e-10 * fw.abs());
}

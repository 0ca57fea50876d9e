//! Variable-order conforming finite elements for `-Δu = f`, `u = g` on ∂Ω.

pub mod basis;
pub mod dofs;
pub mod quadrature;
pub mod sparse;
mod solve;

pub use dofs::{count_dofs, DofMap};
pub use solve::{
    assemble, assembly_degree, assembly_tables, boundary_values, energy_error, energy_error_elementwise,
    energy_norm, galerkin_defect, local_coefficients, pattern, solve, solve_with, DiscreteSolution, ElementMap,
    SolverOptions,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::problem::{Geometry, Solution};
    use crate::geometry::{build_initial_mesh, ProblemSpec, TriMesh};

    fn quadratic(coeffs: [f64; 6]) -> ProblemSpec<f64> {
        ProblemSpec::new(Geometry::UnitSquare, Solution::Quadratic { coeffs }).unwrap()
    }

    fn uniform(mut m: TriMesh<f64>, times: usize) -> TriMesh<f64> {
        for _ in 0..times {
            let all: Vec<usize> = (0..m.n_elems()).collect();
            m = m.refine_h(&all);
        }
        m
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let spec = quadratic([0.0; 6]);
        let mut m = uniform(build_initial_mesh(&spec, 2, 1).unwrap(), 2);
        m.set_uniform_order(3);
        let sol = solve(&m, &spec).unwrap();
        assert!(sol.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn linear_solution_is_reproduced_for_any_order() {
        let spec = quadratic([0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        for p in 1..=8u8 {
            let mut m = build_initial_mesh(&spec, 2, p).unwrap();
            m = m.refine_h(&[0, 3]);
            m.set_order(1, 1.max(p - 1));
            let sol = solve(&m, &spec).unwrap();
            let err = energy_error(&m, &sol, &spec).unwrap();
            assert!(err < 1e-10, "p={p}: {err}");
        }
    }

    #[test]
    fn quadratic_solution_is_exact_from_order_two() {
        let spec = quadratic([0.3, -1.0, 0.5, 1.0, 2.0, -0.5]);
        let mut m = build_initial_mesh(&spec, 2, 2).unwrap();
        m = m.refine_h(&[1]);
        let sol = solve(&m, &spec).unwrap();
        assert!(energy_error(&m, &sol, &spec).unwrap() < 1e-10);
        assert!(galerkin_defect(&m, &spec, &sol).unwrap() < 1e-10);
    }

    #[test]
    fn stiffness_is_symmetric() {
        let spec = ProblemSpec::<f64>::lshape();
        let mut m = uniform(build_initial_mesh(&spec, 1, 1).unwrap(), 2);
        for e in (0..m.n_elems()).step_by(3) {
            m.set_order(e, (e % 8) as u8 + 1);
        }
        let map = DofMap::new(&m);
        let (k, _) = assemble(&m, &spec, &map);
        assert!(k.asymmetry() <= 1e-12);
        assert!(k.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn galerkin_orthogonality_on_mixed_orders() {
        let spec = ProblemSpec::<f64>::unit_square_sine();
        let mut m = uniform(build_initial_mesh(&spec, 2, 2).unwrap(), 1);
        for e in 0..m.n_elems() {
            m.set_order(e, (e % 5) as u8 + 1);
        }
        let sol = solve(&m, &spec).unwrap();
        assert!(sol.residual <= 1e-10);
        assert!(galerkin_defect(&m, &spec, &sol).unwrap() <= 1e-8);
    }

    #[test]
    fn h_and_p_refinement_never_increase_error() {
        let spec = ProblemSpec::<f64>::unit_square_sine();
        let mut m = build_initial_mesh(&spec, 2, 1).unwrap();
        let mut last = energy_error(&m, &solve(&m, &spec).unwrap(), &spec).unwrap();
        for step in 0..6 {
            m = if step % 2 == 0 { m.refine_h(&[0, m.n_elems() - 1]) } else { m.refine_p(&[1, 2]) };
            let err = energy_error(&m, &solve(&m, &spec).unwrap(), &spec).unwrap();
            assert!(err <= last * (1.0 + 1e-9), "step {step}: {err} > {last}");
            last = err;
        }
    }

    /// Evaluates `u_h` from both sides of every interior edge.
    #[test]
    fn mixed_order_space_is_continuous() {
        let spec = ProblemSpec::<f64>::unit_square_sine();
        let mut m = build_initial_mesh(&spec, 2, 1).unwrap();
        m = m.refine_h(&[0, m.n_elems() - 1]);
        for e in 0..m.n_elems() {
            m.set_order(e, (e % 6) as u8 + 1);
        }
        let mut sol = solve(&m, &spec).unwrap();
        for (i, c) in sol.coefficients.iter_mut().enumerate() {
            *c = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        }
        let to_reference = |e: usize, x: [f64; 2]| {
            let g = ElementMap::new(m.corners(e));
            let d = [x[0] - g.origin[0], x[1] - g.origin[1]];
            [
                (g.jac[1][1] * d[0] - g.jac[0][1] * d[1]) / g.det,
                (-g.jac[1][0] * d[0] + g.jac[0][0] * d[1]) / g.det,
            ]
        };
        for (edge, els) in m.edge_elements() {
            if els.len() != 2 {
                continue;
            }
            let (a, b) = (m.vertices()[edge.0], m.vertices()[edge.1]);
            for s in [0.2, 0.5, 0.7] {
                let x = [a[0] * (1.0 - s) + b[0] * s, a[1] * (1.0 - s) + b[1] * s];
                let u0 = sol.eval(&m, els[0], to_reference(els[0], x));
                let u1 = sol.eval(&m, els[1], to_reference(els[1], x));
                assert!((u0 - u1).abs() < 1e-12, "jump across {edge:?}");
            }
        }
    }

    #[test]
    fn mesh_mismatch_is_detected() {
        let spec = ProblemSpec::<f64>::unit_square_sine();
        let m = build_initial_mesh(&spec, 2, 1).unwrap();
        let sol = solve(&m, &spec).unwrap();
        let other = m.refine_h(&[0]);
        assert!(matches!(energy_error(&other, &sol, &spec), Err(crate::Error::MeshMismatch)));
    }

    #[test]
    fn works_in_single_precision() {
        let spec = ProblemSpec::<f32>::new(
            Geometry::UnitSquare,
            Solution::Quadratic { coeffs: [0.0, 1.0, 2.0, 0.0, 0.0, 0.0] },
        )
        .unwrap();
        let m = build_initial_mesh(&spec, 3, 2).unwrap();
        let sol = solve(&m, &spec).unwrap();
        assert!(energy_error(&m, &sol, &spec).unwrap() < 1e-3);
    }
}

//! Zienkiewicz-Zhu recovery estimates and the normalized statistics built on them.
//!
//! The recovered gradient `G` is the componentwise `L2` projection of
//! `grad u_h` onto the continuous space of the solution itself (same mesh,
//! same orders, no boundary constraint). Local estimates are
//! `eta_T = |G - grad u_h|_{L2(T)} / |grad u_h|_{L2(Ω)}`.

use crate::error::{Error, Result};
use crate::fem::sparse::{default_max_iter, pcg};
use crate::fem::{assembly_tables, local_coefficients, pattern, DiscreteSolution, ElementMap};
use crate::geometry::TriMesh;
use crate::real::Real;

/// Empirical moments of elementwise data.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorStats<T> {
    pub mean: T,
    /// Population variance, clamped into `[0, rms^2]`.
    pub variance: T,
    pub sd: T,
    pub rms: T,
}

impl<T: Real> ErrorStats<T> {
    pub fn from_values(values: &[T]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = T::from_usize_lossy(values.len());
        let mean = values.iter().copied().sum::<T>() / n;
        let mean_sq = values.iter().map(|&v| v * v).sum::<T>() / n;
        let centred = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let variance = centred.min(mean_sq).max(T::zero());
        Self { mean, variance, sd: variance.sqrt(), rms: mean_sq.sqrt() }
    }
}

/// Local estimates on one mesh together with their normalized forms.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalErrorField<T> {
    pub eta: Vec<T>,
    pub eta_global: T,
    pub n_elems: usize,
    pub ndofs: usize,
    /// Largest element order; the exponent of `ndofs` in `eta_tilde` is `max_order / 2`.
    pub max_order: u8,
    pub min_order: u8,
    /// `|T|^{1/2} ndofs^{p/2} eta_T`.
    pub eta_tilde: Vec<T>,
    /// `-ln(|T|^{1/2} eta_T) / ln(ndofs)`, with `eta_T` floored at [`Real::log_floor`].
    pub zeta: Vec<T>,
    /// `grad u_h` vanished, so every estimate was set to zero.
    pub degenerate: bool,
}

impl<T: Real> LocalErrorField<T> {
    /// Builds the derived quantities from raw local estimates.
    pub fn from_local(eta: Vec<T>, ndofs: usize, orders: &[u8], degenerate: bool) -> Self {
        let n_elems = eta.len();
        let max_order = orders.iter().copied().max().unwrap_or(1);
        let min_order = orders.iter().copied().min().unwrap_or(1);
        let eta_global = eta.iter().map(|&e| e * e).sum::<T>().sqrt();
        let sqrt_n = T::from_usize_lossy(n_elems).sqrt();
        let nd = T::from_usize_lossy(ndofs);
        let scale = sqrt_n * nd.powf(T::from_usize_lossy(max_order as usize) / T::lit(2.0));
        let eta_tilde = eta.iter().map(|&e| scale * e).collect();
        let ln_nd = nd.ln();
        let zeta = eta.iter().map(|&e| -(sqrt_n * e.max(T::log_floor())).ln() / ln_nd).collect();
        Self { eta, eta_global, n_elems, ndofs, max_order, min_order, eta_tilde, zeta, degenerate }
    }

    /// `Some(p)` when every element has order `p`.
    pub fn uniform_order(&self) -> Option<u8> {
        (self.min_order == self.max_order).then_some(self.max_order)
    }

    pub fn max_eta(&self) -> T {
        self.eta.iter().copied().fold(T::zero(), T::max)
    }
}

/// Statistics of `eta_tilde`; only meaningful for uniform-order meshes.
pub fn normalized_stats_h<T: Real>(field: &LocalErrorField<T>) -> Result<ErrorStats<T>> {
    match field.uniform_order() {
        Some(_) => Ok(ErrorStats::from_values(&field.eta_tilde)),
        None => Err(Error::NonUniformOrder { min: field.min_order, max: field.max_order }),
    }
}

pub fn zeta_stats<T: Real>(field: &LocalErrorField<T>) -> ErrorStats<T> {
    ErrorStats::from_values(&field.zeta)
}

/// Physical gradients of `u_h` at the quadrature points of element `e`'s table.
fn element_gradients<T: Real>(
    sol: &DiscreteSolution<T>,
    table: &crate::fem::basis::RefTable<T>,
    geo: &ElementMap<T>,
    e: usize,
    coeffs: &mut Vec<T>,
    out: &mut Vec<[T; 2]>,
) {
    local_coefficients(&sol.dof_map, &sol.coefficients, e, coeffs);
    let funcs = sol.dof_map.element_funcs(e);
    let n = table.n_funcs;
    out.clear();
    for q in 0..table.rule.len() {
        let grads = &table.grads[q * n..(q + 1) * n];
        let mut g = [T::zero(); 2];
        for (&f, &c) in funcs.iter().zip(coeffs.iter()) {
            g[0] += c * grads[f as usize][0];
            g[1] += c * grads[f as usize][1];
        }
        out.push(geo.gradient(g));
    }
}

/// ZZ estimate of the relative energy error of `sol` on `mesh`.
pub fn estimate<T: Real>(sol: &DiscreteSolution<T>, mesh: &TriMesh<T>) -> Result<LocalErrorField<T>> {
    sol.check_mesh(mesh)?;
    let map = &sol.dof_map;
    let tables = assembly_tables(mesh);
    let mut mass = pattern::<T>(map);
    let mut rhs = [vec![T::zero(); map.ndofs], vec![T::zero(); map.ndofs]];
    let mut coeffs = Vec::new();
    let mut grads = Vec::new();
    let mut grad_sq = T::zero();
    for e in 0..mesh.n_elems() {
        let table = tables.prepared(mesh.order(e));
        let n = table.n_funcs;
        let geo = ElementMap::new(mesh.corners(e));
        let jac = geo.det.abs();
        let dofs = map.element_dofs(e);
        let funcs = map.element_funcs(e);
        let signs = map.element_signs(e);
        for (a, (&da, &fa)) in dofs.iter().zip(funcs).enumerate() {
            let lo = mass.row_ptr[da];
            let hi = mass.row_ptr[da + 1];
            for (b, (&db, &fb)) in dofs.iter().zip(funcs).enumerate() {
                let mut v = jac * table.mass[fa as usize * n + fb as usize];
                if signs[a] != signs[b] {
                    v = -v;
                }
                let pos = lo + mass.cols[lo..hi].binary_search(&db).expect("pattern");
                mass.vals[pos] += v;
            }
        }
        element_gradients(sol, table, &geo, e, &mut coeffs, &mut grads);
        for (q, (g, &w)) in grads.iter().zip(&table.rule.weights).enumerate() {
            let wj = w * jac;
            grad_sq += wj * (g[0] * g[0] + g[1] * g[1]);
            let vals = &table.values[q * n..(q + 1) * n];
            for ((&d, &f), &s) in dofs.iter().zip(funcs).zip(signs) {
                let phi = if s < 0 { -vals[f as usize] } else { vals[f as usize] };
                rhs[0][d] += wj * g[0] * phi;
                rhs[1][d] += wj * g[1] * phi;
            }
        }
    }
    let grad_norm = grad_sq.sqrt();
    if grad_norm <= T::zero() {
        return Ok(LocalErrorField::from_local(vec![T::zero(); mesh.n_elems()], sol.ndofs, mesh.orders(), true));
    }
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    let max_iter = 4 * default_max_iter(map.ndofs);
    let mut recovered = [vec![T::zero(); map.ndofs], vec![T::zero(); map.ndofs]];
    for c in 0..2 {
        pcg(&mass, &rhs[c], &mut recovered[c], tol, max_iter)?;
    }
    let mut eta = Vec::with_capacity(mesh.n_elems());
    let mut rec = Vec::new();
    for e in 0..mesh.n_elems() {
        let table = tables.prepared(mesh.order(e));
        let n = table.n_funcs;
        let geo = ElementMap::new(mesh.corners(e));
        element_gradients(sol, table, &geo, e, &mut coeffs, &mut grads);
        let funcs = map.element_funcs(e);
        let mut acc = T::zero();
        for c in 0..2 {
            local_coefficients(map, &recovered[c], e, &mut rec);
            for (q, (g, &w)) in grads.iter().zip(&table.rule.weights).enumerate() {
                let vals = &table.values[q * n..(q + 1) * n];
                let mut gr = T::zero();
                for (&f, &r) in funcs.iter().zip(&rec) {
                    gr += r * vals[f as usize];
                }
                let d = gr - g[c];
                acc += w * d * d;
            }
        }
        eta.push((acc * geo.det.abs()).sqrt() / grad_norm);
    }
    Ok(LocalErrorField::from_local(eta, sol.ndofs, mesh.orders(), false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{energy_error, energy_norm, solve};
    use crate::geometry::problem::{Geometry, Solution};
    use crate::geometry::{build_initial_mesh, ProblemSpec};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn normalized_values_follow_definition() {
        let c = 0.37;
        let field = LocalErrorField::from_local(vec![c; 4], 16, &[1; 4], false);
        for &t in &field.eta_tilde {
            assert!(close(t, 8.0 * c, 1e-15));
        }
        let s = normalized_stats_h(&field).unwrap();
        assert!(s.sd <= 1e-12 * s.rms);
        assert!(close(s.rms, 8.0 * c, 1e-15));
    }

    #[test]
    fn moments_of_three_and_four() {
        let s = ErrorStats::from_values(&[3.0, 4.0]);
        assert_eq!(s.mean, 3.5);
        assert_eq!(s.variance, 0.25);
        assert_eq!(s.sd, 0.5);
        assert!(close(s.rms, 12.5f64.sqrt(), 1e-15));
        assert!(s.sd <= s.rms);
    }

    #[test]
    fn zeta_arithmetic() {
        let field = LocalErrorField::from_local(vec![0.01; 4], 100, &[2; 4], false);
        let expected = -(0.02f64).ln() / 100f64.ln();
        assert!((field.zeta[0] - 0.84947f64).abs() < 5e-5);
        assert!(close(field.zeta[0], expected, 1e-14));
        assert!(zeta_stats(&field).sd <= 1e-12);
    }

    #[test]
    fn non_uniform_orders_are_rejected_for_eta_tilde() {
        let field = LocalErrorField::from_local(vec![0.1, 0.2], 10, &[1, 2], false);
        assert!(matches!(normalized_stats_h(&field), Err(Error::NonUniformOrder { .. })));
    }

    #[test]
    fn linear_solutions_have_zero_estimates() {
        let spec = ProblemSpec::<f64>::new(
            Geometry::UnitSquare,
            Solution::Quadratic { coeffs: [1.0, 2.0, -3.0, 0.0, 0.0, 0.0] },
        )
        .unwrap();
        for p in [1u8, 3] {
            let mut m = build_initial_mesh(&spec, 3, p).unwrap();
            m = m.refine_h(&[0, 5]);
            let sol = solve(&m, &spec).unwrap();
            let field = estimate(&sol, &m).unwrap();
            assert!(field.eta.iter().all(|&e| e < 1e-10), "p={p}");
        }
    }

    #[test]
    fn zero_solution_is_flagged() {
        let spec = ProblemSpec::<f64>::new(Geometry::UnitSquare, Solution::ConstantSource { value: 0.0 }).unwrap();
        let m = build_initial_mesh(&spec, 2, 1).unwrap();
        let field = estimate(&solve(&m, &spec).unwrap(), &m).unwrap();
        assert!(field.degenerate);
        assert_eq!(field.eta_global, 0.0);
        assert!(field.zeta.iter().all(|z| z.is_finite()));
    }

    #[test]
    fn efficiency_index_on_smooth_problem() {
        let spec = ProblemSpec::<f64>::unit_square_sine();
        let mut m = build_initial_mesh(&spec, 2, 1).unwrap();
        for _ in 0..6 {
            let all: Vec<usize> = (0..m.n_elems()).collect();
            m = m.refine_h(&all);
        }
        let sol = solve(&m, &spec).unwrap();
        let field = estimate(&sol, &m).unwrap();
        let index = field.eta_global * energy_norm(&m, &sol) / energy_error(&m, &sol, &spec).unwrap();
        assert!((0.7..=1.3).contains(&index), "efficiency index {index}");
    }

    #[test]
    fn square_sum_and_rms_identities_on_real_fields() {
        let spec = ProblemSpec::<f64>::lshape();
        let mut m = build_initial_mesh(&spec, 1, 2).unwrap();
        m = m.refine_h(&[0, 1, 2]).refine_p(&[3, 4]);
        let field = estimate(&solve(&m, &spec).unwrap(), &m).unwrap();
        let sum_sq: f64 = field.eta.iter().map(|e| e * e).sum();
        assert!(close(field.eta_global * field.eta_global, sum_sq, 1e-12));
        let rms = ErrorStats::from_values(&field.eta).rms;
        assert!(close((field.n_elems as f64).sqrt() * rms, field.eta_global, 1e-12));
        let z = zeta_stats(&field);
        assert!(z.mean * (field.ndofs as f64).ln() >= -field.eta_global.ln());
    }

    proptest! {
        #[test]
        fn sd_never_exceeds_rms(values in prop::collection::vec(-1e3f64..1e3, 1..64)) {
            let s = ErrorStats::from_values(&values);
            prop_assert!(s.sd <= s.rms);
            let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
            prop_assert!((s.variance - (mean_sq - s.mean * s.mean)).abs() <= 1e-9 * mean_sq.max(1e-300));
        }

        #[test]
        fn jensen_step_holds_for_any_field(
            eta in prop::collection::vec(1e-9f64..1.0, 1..80),
            extra in 2usize..10_000,
        ) {
            let ndofs = eta.len() + extra;
            let field = LocalErrorField::from_local(eta, ndofs, &[1], false);
            let z = zeta_stats(&field);
            prop_assert!(z.mean * (ndofs as f64).ln() >= -field.eta_global.ln() - 1e-12);
        }

        #[test]
        fn zeta_variance_vanishes_with_eta_variance(c in 1e-6f64..1.0, n in 1usize..40, bump in 0.0f64..1.0) {
            let mut eta = vec![c; n];
            let field = LocalErrorField::from_local(eta.clone(), 100, &[2], false);
            prop_assert!(zeta_stats(&field).variance <= 1e-24);
            if n > 1 && bump > 1e-3 {
                eta[0] *= 1.0 + bump;
                let field = LocalErrorField::from_local(eta, 100, &[2], false);
                prop_assert!(zeta_stats(&field).variance > 0.0);
                prop_assert!(ErrorStats::from_values(&field.eta).variance > 0.0);
            }
        }
    }
}

//! Assembly, Dirichlet elimination and the Galerkin solve.

use crate::error::{Error, Result};
use crate::fem::basis::TableSet;
use crate::fem::dofs::DofMap;
use crate::fem::quadrature::{gauss_legendre, legendre_with_derivative};
use crate::fem::sparse::{default_max_iter, default_tolerance, pcg, CsrMatrix};
use crate::geometry::{ProblemSpec, TriMesh, P_MAX};
use crate::real::Real;

/// Affine map from the reference triangle onto a mesh element.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap<T> {
    pub origin: [T; 2],
    /// Columns are the edge vectors `v1 - v0` and `v2 - v0`.
    pub jac: [[T; 2]; 2],
    pub det: T,
    /// `jac^{-T}`: maps reference gradients to physical ones.
    pub inv_t: [[T; 2]; 2],
}

impl<T: Real> ElementMap<T> {
    pub fn new(c: [[T; 2]; 3]) -> Self {
        let jac = [[c[1][0] - c[0][0], c[2][0] - c[0][0]], [c[1][1] - c[0][1], c[2][1] - c[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Self { origin: c[0], jac, det, inv_t }
    }

    pub fn point(&self, r: [T; 2]) -> [T; 2] {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn gradient(&self, g: [T; 2]) -> [T; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }

    /// Weights of the three reference stiffness blocks for this element.
    pub fn stiffness_weights(&self) -> [T; 3] {
        let d = &self.inv_t;
        let a = self.det.abs();
        [
            a * (d[0][0] * d[0][0] + d[1][0] * d[1][0]),
            a * (d[0][0] * d[0][1] + d[1][0] * d[1][1]),
            a * (d[0][1] * d[0][1] + d[1][1] * d[1][1]),
        ]
    }
}

/// Quadrature degree of the per-order tables: exact for the stiffness and
/// mass matrices on affine elements.
pub fn assembly_degree(p: u8) -> usize {
    2 * p as usize + 2
}

/// Load vectors use one rule for every order, so raising an element's order
/// does not change how the source is integrated against the old functions.
pub const LOAD_DEGREE: usize = 2 * P_MAX as usize + 2;

pub fn assembly_tables<T: Real>(mesh: &TriMesh<T>) -> TableSet<T> {
    let mut tables = TableSet::new(assembly_degree);
    let mut orders: Vec<u8> = mesh.orders().to_vec();
    orders.sort_unstable();
    orders.dedup();
    tables.prepare(orders);
    tables
}

/// Sparsity pattern of all element couplings.
pub fn pattern<T: Real>(map: &DofMap) -> CsrMatrix<T> {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); map.ndofs];
    for e in 0..map.n_elems() {
        let dofs = map.element_dofs(e);
        for &i in dofs {
            rows[i].extend_from_slice(dofs);
        }
    }
    CsrMatrix::from_pattern(rows)
}

/// Element coefficients in table orientation.
pub fn local_coefficients<T: Real>(map: &DofMap, coefficients: &[T], e: usize, out: &mut Vec<T>) {
    out.clear();
    for (&d, &s) in map.element_dofs(e).iter().zip(map.element_signs(e)) {
        let c = coefficients[d];
        out.push(if s < 0 { -c } else { c });
    }
}

/// Full stiffness matrix and load vector, boundary rows included.
pub fn assemble<T: Real>(mesh: &TriMesh<T>, spec: &ProblemSpec<T>, map: &DofMap) -> (CsrMatrix<T>, Vec<T>) {
    let tables = assembly_tables(mesh);
    let mut k = pattern::<T>(map);
    let mut f = vec![T::zero(); map.ndofs];
    let has_source = !spec.source_vanishes();
    let mut load_tables = TableSet::<T>::new(|_| LOAD_DEGREE);
    for e in 0..mesh.n_elems() {
        let geo = ElementMap::new(mesh.corners(e));
        let table = tables.prepared(mesh.order(e));
        let n = table.n_funcs;
        let w = geo.stiffness_weights();
        let dofs = map.element_dofs(e);
        let funcs = map.element_funcs(e);
        let signs = map.element_signs(e);
        for (a, (&da, &fa)) in dofs.iter().zip(funcs).enumerate() {
            let row = fa as usize * n;
            let lo = k.row_ptr[da];
            let hi = k.row_ptr[da + 1];
            for (b, (&db, &fb)) in dofs.iter().zip(funcs).enumerate() {
                let idx = row + fb as usize;
                let mut v = w[0] * table.stiffness[0][idx]
                    + w[1] * table.stiffness[1][idx]
                    + w[2] * table.stiffness[2][idx];
                if signs[a] != signs[b] {
                    v = -v;
                }
                let pos = lo + k.cols[lo..hi].binary_search(&db).expect("pattern");
                k.vals[pos] += v;
            }
        }
        if !has_source {
            continue;
        }
        let load = load_tables.get(mesh.order(e));
        let n = load.n_funcs;
        let jac = geo.det.abs();
        for (q, (&r, &wq)) in load.rule.points.iter().zip(&load.rule.weights).enumerate() {
            let x = geo.point(r);
            let fq = spec.source(x[0], x[1]) * wq * jac;
            let vals = &load.values[q * n..(q + 1) * n];
            for ((&d, &fi), &s) in dofs.iter().zip(funcs).zip(signs) {
                let v = fq * vals[fi as usize];
                f[d] += if s < 0 { -v } else { v };
            }
        }
    }
    (k, f)
}

/// Dirichlet values on boundary dofs: `g` at boundary vertices and, on each
/// boundary edge, the coefficients of the `H^1_0`-seminorm projection of the
/// remainder `g - (linear interpolant)` onto the integrated Legendre traces.
pub fn boundary_values<T: Real>(mesh: &TriMesh<T>, spec: &ProblemSpec<T>, map: &DofMap) -> Vec<Option<T>> {
    let mut out = vec![None; map.ndofs];
    let verts = mesh.vertices();
    for edge in mesh.boundary_edges().keys() {
        for v in [edge.0, edge.1] {
            let [x, y] = verts[v];
            out[v] = Some(spec.dirichlet(x, y));
        }
    }
    for ge in &map.edges {
        if !mesh.is_boundary_edge(ge.edge) {
            continue;
        }
        let (a, b) = (verts[ge.edge.0], verts[ge.edge.1]);
        let (ga, gb) = (spec.dirichlet(a[0], a[1]), spec.dirichlet(b[0], b[1]));
        let p = ge.order as usize;
        if p < 2 {
            continue;
        }
        let (nodes, weights) = gauss_legendre(p + 4);
        let mut coeffs = vec![T::zero(); p + 1];
        for (&s, &w) in nodes.iter().zip(&weights) {
            let st = T::lit(s);
            let lo = T::lit(0.5) * (T::one() - st);
            let hi = T::lit(0.5) * (T::one() + st);
            let x = [lo * a[0] + hi * b[0], lo * a[1] + hi * b[1]];
            let r = spec.dirichlet(x[0], x[1]) - (lo * ga + hi * gb);
            for (k, c) in coeffs.iter_mut().enumerate().skip(2) {
                let (_, dp) = legendre_with_derivative(k - 1, s);
                *c -= T::lit(w * dp * (2 * k - 1) as f64 * 0.5) * r;
            }
        }
        for k in 2..=p {
            out[ge.first_dof + k - 2] = Some(coeffs[k]);
        }
    }
    out
}

/// Galerkin approximation on a mesh, with bookkeeping for later evaluation.
#[derive(Clone, Debug)]
pub struct DiscreteSolution<T> {
    /// Global coefficients, boundary dofs included.
    pub coefficients: Vec<T>,
    pub dof_map: DofMap,
    pub ndofs: usize,
    /// [`TriMesh::fingerprint`] of the mesh the solution lives on.
    pub mesh_id: u64,
    pub iterations: usize,
    pub residual: T,
}

impl<T: Real> DiscreteSolution<T> {
    pub fn check_mesh(&self, mesh: &TriMesh<T>) -> Result<()> {
        if mesh.fingerprint() == self.mesh_id {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// Value of `u_h` at a point given in reference coordinates of element `e`.
    pub fn eval(&self, mesh: &TriMesh<T>, e: usize, r: [T; 2]) -> T {
        let p = mesh.order(e);
        let (mut v, mut g) = (Vec::new(), Vec::new());
        crate::fem::basis::eval_reference(p, r[0], r[1], &mut v, &mut g);
        let mut c = Vec::new();
        local_coefficients(&self.dof_map, &self.coefficients, e, &mut c);
        self.dof_map.element_funcs(e).iter().zip(&c).map(|(&f, &c)| c * v[f as usize]).sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions<T> {
    pub tolerance: T,
    /// Defaults to `50 sqrt(ndofs)`.
    pub max_iterations: Option<usize>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { tolerance: default_tolerance(), max_iterations: None }
    }
}

pub fn solve<T: Real>(mesh: &TriMesh<T>, spec: &ProblemSpec<T>) -> Result<DiscreteSolution<T>> {
    solve_with(mesh, spec, SolverOptions::default())
}

pub fn solve_with<T: Real>(
    mesh: &TriMesh<T>,
    spec: &ProblemSpec<T>,
    options: SolverOptions<T>,
) -> Result<DiscreteSolution<T>> {
    let map = DofMap::new(mesh);
    let (k, f) = assemble(mesh, spec, &map);
    let fixed = boundary_values(mesh, spec, &map);
    let mut u: Vec<T> = fixed.iter().map(|v| v.unwrap_or_else(T::zero)).collect();
    // rhs of the reduced system: F_I - K_IB u_B
    let ku = k.mul(&u);
    let mut keep = vec![None; map.ndofs];
    let mut free = Vec::new();
    for (i, v) in fixed.iter().enumerate() {
        if v.is_none() {
            keep[i] = Some(free.len());
            free.push(i);
        }
    }
    let (iterations, residual) = if free.is_empty() {
        (0, T::zero())
    } else {
        let reduced = k.submatrix(&keep, free.len());
        let rhs: Vec<T> = free.iter().map(|&i| f[i] - ku[i]).collect();
        let mut x = vec![T::zero(); free.len()];
        let max_iter = options.max_iterations.unwrap_or_else(|| default_max_iter(free.len()));
        let report = pcg(&reduced, &rhs, &mut x, options.tolerance, max_iter)?;
        for (&i, &xi) in free.iter().zip(&x) {
            u[i] = xi;
        }
        (report.iterations, report.relative_residual)
    };
    Ok(DiscreteSolution {
        coefficients: u,
        ndofs: map.ndofs,
        dof_map: map,
        mesh_id: mesh.fingerprint(),
        iterations,
        residual,
    })
}

/// `|grad u_h|_{L2}` over the whole domain.
pub fn energy_norm<T: Real>(mesh: &TriMesh<T>, sol: &DiscreteSolution<T>) -> T {
    let tables = assembly_tables(mesh);
    let mut total = T::zero();
    let mut c = Vec::new();
    for e in 0..mesh.n_elems() {
        let table = tables.prepared(mesh.order(e));
        let n = table.n_funcs;
        let w = ElementMap::new(mesh.corners(e)).stiffness_weights();
        local_coefficients(&sol.dof_map, &sol.coefficients, e, &mut c);
        let funcs = sol.dof_map.element_funcs(e);
        for (a, &fa) in funcs.iter().enumerate() {
            for (b, &fb) in funcs.iter().enumerate() {
                let idx = fa as usize * n + fb as usize;
                let kab = w[0] * table.stiffness[0][idx] + w[1] * table.stiffness[1][idx] + w[2] * table.stiffness[2][idx];
                total += c[a] * kab * c[b];
            }
        }
    }
    total.max(T::zero()).sqrt()
}

/// True energy error `|grad(u - u_h)|_{L2}`, integrated with the degree
/// [`LOAD_DEGREE`] rule (at least `2 max_p + 2`) on every element.
pub fn energy_error<T: Real>(mesh: &TriMesh<T>, sol: &DiscreteSolution<T>, spec: &ProblemSpec<T>) -> Result<T> {
    Ok(energy_error_elementwise(mesh, sol, spec)?.iter().copied().sum::<T>().sqrt())
}

/// Squared element contributions to the true energy error.
pub fn energy_error_elementwise<T: Real>(
    mesh: &TriMesh<T>,
    sol: &DiscreteSolution<T>,
    spec: &ProblemSpec<T>,
) -> Result<Vec<T>> {
    if !spec.has_exact_solution() {
        return Err(Error::NoExactSolution(spec.name()));
    }
    sol.check_mesh(mesh)?;
    let mut tables = TableSet::new(|_| LOAD_DEGREE);
    let mut c = Vec::new();
    let mut out = Vec::with_capacity(mesh.n_elems());
    for e in 0..mesh.n_elems() {
        let table = tables.get(mesh.order(e));
        let n = table.n_funcs;
        let geo = ElementMap::new(mesh.corners(e));
        local_coefficients(&sol.dof_map, &sol.coefficients, e, &mut c);
        let funcs = sol.dof_map.element_funcs(e);
        let mut acc = T::zero();
        for (q, (&r, &wq)) in table.rule.points.iter().zip(&table.rule.weights).enumerate() {
            let grads = &table.grads[q * n..(q + 1) * n];
            let mut g = [T::zero(); 2];
            for (&f, &ci) in funcs.iter().zip(&c) {
                g[0] += ci * grads[f as usize][0];
                g[1] += ci * grads[f as usize][1];
            }
            let g = geo.gradient(g);
            let x = geo.point(r);
            let ex = spec.exact_gradient(x[0], x[1]).expect("exact solution present");
            let (dx, dy) = (ex[0] - g[0], ex[1] - g[1]);
            acc += wq * (dx * dx + dy * dy);
        }
        out.push(acc * geo.det.abs());
    }
    Ok(out)
}

/// Largest `|F_i - (K u_h)_i|` over free dofs relative to `max_i sum_j |K_ij u_j|`.
///
/// This is the discrete Galerkin orthogonality defect of the error against
/// every basis function of the test space.
pub fn galerkin_defect<T: Real>(mesh: &TriMesh<T>, spec: &ProblemSpec<T>, sol: &DiscreteSolution<T>) -> Result<T> {
    sol.check_mesh(mesh)?;
    let (k, f) = assemble(mesh, spec, &sol.dof_map);
    let fixed = boundary_values(mesh, spec, &sol.dof_map);
    let ku = k.mul(&sol.coefficients);
    let mut scale = T::zero();
    for i in 0..k.n {
        let mut s = f[i].abs();
        for idx in k.row_ptr[i]..k.row_ptr[i + 1] {
            s += (k.vals[idx] * sol.coefficients[k.cols[idx]]).abs();
        }
        scale = scale.max(s);
    }
    let worst = (0..k.n)
        .filter(|&i| fixed[i].is_none())
        .map(|i| (f[i] - ku[i]).abs())
        .fold(T::zero(), T::max);
    Ok(if scale > T::zero() { worst / scale } else { worst })
}


//! Hierarchical H1 shape functions on the reference triangle.
//!
//! Vertex functions are the barycentric coordinates. Edge functions of degree
//! `k >= 2` are scaled integrated Legendre polynomials in the two barycentric
//! coordinates of the edge, so they vanish on the other two edges and their
//! trace is `l_k(s)` along the edge. Bubbles of degree `3..=p` are
//! `l0 l1 l2 * P^_i(l1 - l0, l0 + l1) * P_j(2 l2 - 1)`.
//!
//! Because the families are hierarchical, lowering the order of a single
//! edge (the minimum rule) just drops that edge's highest functions.

use crate::fem::quadrature::TriangleRule;
use crate::geometry::mesh::LOCAL_EDGES;
use crate::real::Real;

/// Gradients of the barycentric coordinates w.r.t. reference coordinates.
const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub fn n_bubbles(p: u8) -> usize {
    let p = p as usize;
    if p < 3 {
        0
    } else {
        (p - 1) * (p - 2) / 2
    }
}

/// Number of reference functions of an order-`p` element (full edge orders).
pub fn n_reference_functions(p: u8) -> usize {
    3 + 3 * (p as usize - 1) + n_bubbles(p)
}

/// Table index of edge function of degree `k` on local edge `edge`.
pub fn edge_function_index(p: u8, edge: usize, k: u8) -> usize {
    3 + edge * (p as usize - 1) + (k as usize - 2)
}

pub fn bubble_index(p: u8, b: usize) -> usize {
    3 + 3 * (p as usize - 1) + b
}

/// Scaled Legendre polynomials `t^n P_n(x/t)` with partial derivatives in
/// `x` and `t`, for `n = 0..=n_max`.
fn scaled_legendre<T: Real>(n_max: usize, x: T, t: T) -> Vec<[T; 3]> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push([T::one(), T::zero(), T::zero()]);
    if n_max >= 1 {
        out.push([x, T::one(), T::zero()]);
    }
    for n in 1..n_max {
        let nf = T::from_usize_lossy(n);
        let a = T::lit(2.0) * nf + T::one();
        let [p, px, pt] = out[n];
        let [q, qx, qt] = out[n - 1];
        let d = nf + T::one();
        let t2 = t * t;
        out.push([
            (a * x * p - nf * t2 * q) / d,
            (a * (p + x * px) - nf * t2 * qx) / d,
            (a * x * pt - nf * (T::lit(2.0) * t * q + t2 * qt)) / d,
        ]);
    }
    out
}

/// Legendre `P_n(s)` and derivative for `n = 0..=n_max`.
fn legendre<T: Real>(n_max: usize, s: T) -> Vec<[T; 2]> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push([T::one(), T::zero()]);
    if n_max >= 1 {
        out.push([s, T::one()]);
    }
    for n in 1..n_max {
        let nf = T::from_usize_lossy(n);
        let a = T::lit(2.0) * nf + T::one();
        let d = nf + T::one();
        let [p, dp] = out[n];
        let [q, dq] = out[n - 1];
        out.push([(a * s * p - nf * q) / d, (a * (p + s * dp) - nf * dq) / d]);
    }
    out
}

/// Integrated Legendre `l_k(s) = (P_k - P_{k-2}) / (2k - 1)` and derivative
/// `P_{k-1}(s)`, evaluated on an edge parameter `s` in `[-1, 1]`.
pub fn integrated_legendre<T: Real>(k: usize, s: T) -> (T, T) {
    let p = legendre(k, s);
    let denom = T::from_usize_lossy(2 * k - 1);
    ((p[k][0] - p[k - 2][0]) / denom, p[k - 1][0])
}

/// Values and reference gradients of all order-`p` reference functions at
/// reference point `(xi, eta)`, in table order.
pub fn eval_reference<T: Real>(p: u8, xi: T, eta: T, values: &mut Vec<T>, grads: &mut Vec<[T; 2]>) {
    values.clear();
    grads.clear();
    let lam = [T::one() - xi - eta, xi, eta];
    let dlam: [[T; 2]; 3] = BARY_GRAD.map(|g| [T::lit(g[0]), T::lit(g[1])]);
    for i in 0..3 {
        values.push(lam[i]);
        grads.push(dlam[i]);
    }
    let pu = p as usize;
    for &(a, b) in &LOCAL_EDGES {
        let x = lam[b] - lam[a];
        let t = lam[a] + lam[b];
        let dx = [dlam[b][0] - dlam[a][0], dlam[b][1] - dlam[a][1]];
        let dt = [dlam[a][0] + dlam[b][0], dlam[a][1] + dlam[b][1]];
        let sl = scaled_legendre(pu, x, t);
        for k in 2..=pu {
            let denom = T::from_usize_lossy(2 * k - 1);
            let [pk, pkx, pkt] = sl[k];
            let [qk, qkx, qkt] = sl[k - 2];
            let t2 = t * t;
            let v = (pk - t2 * qk) / denom;
            let vx = (pkx - t2 * qkx) / denom;
            let vt = (pkt - T::lit(2.0) * t * qk - t2 * qkt) / denom;
            values.push(v);
            grads.push([vx * dx[0] + vt * dt[0], vx * dx[1] + vt * dt[1]]);
        }
    }
    if pu >= 3 {
        let cube = lam[0] * lam[1] * lam[2];
        let dcube = [
            dlam[0][0] * lam[1] * lam[2] + lam[0] * dlam[1][0] * lam[2] + lam[0] * lam[1] * dlam[2][0],
            dlam[0][1] * lam[1] * lam[2] + lam[0] * dlam[1][1] * lam[2] + lam[0] * lam[1] * dlam[2][1],
        ];
        let x = lam[1] - lam[0];
        let t = lam[0] + lam[1];
        let dx = [dlam[1][0] - dlam[0][0], dlam[1][1] - dlam[0][1]];
        let dt = [dlam[0][0] + dlam[1][0], dlam[0][1] + dlam[1][1]];
        let s = T::lit(2.0) * lam[2] - T::one();
        let ds = [T::lit(2.0) * dlam[2][0], T::lit(2.0) * dlam[2][1]];
        let sl = scaled_legendre(pu - 3, x, t);
        let lg = legendre(pu - 3, s);
        for degree in 0..=(pu - 3) {
            for i in 0..=degree {
                let j = degree - i;
                let [a, ax, at] = sl[i];
                let [b, bs] = lg[j];
                let ga = [ax * dx[0] + at * dt[0], ax * dx[1] + at * dt[1]];
                let gb = [bs * ds[0], bs * ds[1]];
                values.push(cube * a * b);
                grads.push([
                    dcube[0] * a * b + cube * ga[0] * b + cube * a * gb[0],
                    dcube[1] * a * b + cube * ga[1] * b + cube * a * gb[1],
                ]);
            }
        }
    }
    debug_assert_eq!(values.len(), n_reference_functions(p));
}

/// Reference functions of one order tabulated at the points of a rule.
#[derive(Clone, Debug)]
pub struct RefTable<T> {
    pub order: u8,
    pub rule: TriangleRule<T>,
    pub n_funcs: usize,
    /// `values[q * n_funcs + f]`
    pub values: Vec<T>,
    pub grads: Vec<[T; 2]>,
    /// Reference stiffness blocks `int d_x f_i d_x f_j`, the symmetrized mixed
    /// block `int (d_x f_i d_y f_j + d_y f_i d_x f_j)`, and `int d_y f_i d_y f_j`.
    /// On an affine element the physical stiffness is a combination of the three.
    pub stiffness: [Vec<T>; 3],
    /// Reference mass matrix, `n_funcs * n_funcs`.
    pub mass: Vec<T>,
}

impl<T: Real> RefTable<T> {
    pub fn new(order: u8, degree: usize) -> Self {
        let rule = TriangleRule::with_degree(degree);
        let n_funcs = n_reference_functions(order);
        let mut values = Vec::with_capacity(rule.len() * n_funcs);
        let mut grads = Vec::with_capacity(rule.len() * n_funcs);
        let (mut v, mut g) = (Vec::new(), Vec::new());
        for pt in &rule.points {
            eval_reference(order, pt[0], pt[1], &mut v, &mut g);
            values.extend_from_slice(&v);
            grads.extend_from_slice(&g);
        }
        let n = n_funcs;
        let mut stiffness = [vec![T::zero(); n * n], vec![T::zero(); n * n], vec![T::zero(); n * n]];
        let mut mass = vec![T::zero(); n * n];
        for (q, &w) in rule.weights.iter().enumerate() {
            let v = &values[q * n..(q + 1) * n];
            let g = &grads[q * n..(q + 1) * n];
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    stiffness[0][k] += w * g[i][0] * g[j][0];
                    stiffness[1][k] += w * (g[i][0] * g[j][1] + g[i][1] * g[j][0]);
                    stiffness[2][k] += w * g[i][1] * g[j][1];
                    mass[k] += w * v[i] * v[j];
                }
            }
        }
        Self { order, rule, n_funcs, values, grads, stiffness, mass }
    }
}

/// Tables for orders `1..=P_MAX`, built on first use.
pub struct TableSet<T> {
    tables: Vec<Option<RefTable<T>>>,
    degree: Box<dyn Fn(u8) -> usize + Send + Sync>,
}

impl<T> std::fmt::Debug for TableSet<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let built: Vec<usize> = (0..self.tables.len()).filter(|&p| self.tables[p].is_some()).collect();
        f.debug_struct("TableSet").field("built", &built).finish()
    }
}

impl<T: Real> TableSet<T> {
    /// Quadrature degree chosen per element order by `degree`.
    pub fn new(degree: impl Fn(u8) -> usize + Send + Sync + 'static) -> Self {
        Self { tables: (0..=crate::geometry::P_MAX).map(|_| None).collect(), degree: Box::new(degree) }
    }

    pub fn get(&mut self, order: u8) -> &RefTable<T> {
        let degree = (self.degree)(order);
        self.tables[order as usize].get_or_insert_with(|| RefTable::new(order, degree))
    }

    /// Builds the tables for all listed orders up front so they can be shared.
    pub fn prepare(&mut self, orders: impl IntoIterator<Item = u8>) {
        for p in orders {
            self.get(p);
        }
    }

    pub fn prepared(&self, order: u8) -> &RefTable<T> {
        self.tables[order as usize].as_ref().expect("table prepared")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(n_reference_functions(1), 3);
        assert_eq!(n_reference_functions(2), 6);
        assert_eq!(n_reference_functions(3), 10);
        for p in 1..=8u8 {
            let dim = (p as usize + 1) * (p as usize + 2) / 2;
            assert_eq!(n_reference_functions(p), dim);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        let (mut v0, mut g0, mut vp, mut gp, mut vm, mut gm) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &(x, y) in &[(0.2, 0.3), (0.6, 0.1), (0.1, 0.75)] {
            eval_reference::<f64>(8, x, y, &mut v0, &mut g0);
            for dir in 0..2 {
                let (dx, dy) = if dir == 0 { (h, 0.0) } else { (0.0, h) };
                eval_reference::<f64>(8, x + dx, y + dy, &mut vp, &mut gp);
                eval_reference::<f64>(8, x - dx, y - dy, &mut vm, &mut gm);
                for f in 0..v0.len() {
                    let fd = (vp[f] - vm[f]) / (2.0 * h);
                    assert!((fd - g0[f][dir]).abs() < 1e-6, "f={f} dir={dir}");
                }
            }
        }
    }

    #[test]
    fn edge_functions_vanish_on_other_edges_and_trace_is_integrated_legendre() {
        let (mut v, mut g) = (Vec::new(), Vec::new());
        let p = 6u8;
        // local edge 0 runs from vertex 1 (1,0) to vertex 2 (0,1)
        for &s in &[-0.7, -0.2, 0.4, 0.9] {
            let lam2 = 0.5 * (1.0 + s);
            eval_reference::<f64>(p, 1.0 - lam2, lam2, &mut v, &mut g);
            for k in 2..=p {
                let (l, _) = integrated_legendre(k as usize, s);
                assert!((v[edge_function_index(p, 0, k)] - l).abs() < 1e-13);
                assert!(v[edge_function_index(p, 1, k)].abs() < 1e-13);
                assert!(v[edge_function_index(p, 2, k)].abs() < 1e-13);
            }
            for b in 0..n_bubbles(p) {
                assert!(v[bubble_index(p, b)].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn functions_are_linearly_independent() {
        // the mass matrix of all order-5 functions is nonsingular
        let p = 5u8;
        let table = RefTable::<f64>::new(p, 12);
        let n = table.n_funcs;
        let mut m = vec![0.0; n * n];
        for (q, w) in table.rule.weights.iter().enumerate() {
            let vals = &table.values[q * n..(q + 1) * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += w * vals[i] * vals[j];
                }
            }
        }
        // Cholesky succeeds
        for j in 0..n {
            let mut d = m[j * n + j];
            for k in 0..j {
                d -= m[j * n + k] * m[j * n + k];
            }
            assert!(d > 1e-14, "pivot {j} = {d}");
            let d = d.sqrt();
            m[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = m[i * n + j];
                for k in 0..j {
                    s -= m[i * n + k] * m[j * n + k];
                }
                m[i * n + j] = s / d;
            }
        }
    }
}

//! Conforming triangle meshes with per-element polynomial order.
//!
//! Every triangle is stored as `[peak, left, right]`: the refinement edge is
//! `(left, right)` and `peak` is the newest vertex. Bisection always splits the
//! refinement edge, which keeps the number of similarity classes finite.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::problem::{Geometry, ProblemSpec};
use crate::real::Real;

/// Highest polynomial order an element may carry.
pub const P_MAX: u8 = 8;

/// Undirected edge with sorted endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }
}

/// Boundary segment tag. `curved` segments lie on the unit circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundarySegment {
    pub id: u32,
    pub curved: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh<T> {
    pub(crate) vertices: Vec<[T; 2]>,
    pub(crate) triangles: Vec<[usize; 3]>,
    pub(crate) orders: Vec<u8>,
    pub(crate) generation: Vec<u32>,
    pub(crate) boundary: BTreeMap<Edge, BoundarySegment>,
}

/// Local edge `i` is the edge opposite local vertex `i`.
pub const LOCAL_EDGES: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

impl<T: Real> TriMesh<T> {
    /// Builds a mesh from raw connectivity. Triangles are reoriented
    /// counter-clockwise and their refinement edge is set to the longest edge
    /// (ties go to the lowest opposite-vertex index). Edges used by a single
    /// triangle become boundary edges tagged by `segment`.
    pub fn from_raw(
        vertices: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
        order: u8,
        segment: impl Fn([T; 2], [T; 2]) -> BoundarySegment,
    ) -> Result<Self> {
        if !(1..=P_MAX).contains(&order) {
            return Err(Error::InvalidArgument(format!("order {order} outside 1..={P_MAX}")));
        }
        let mut tris = Vec::with_capacity(triangles.len());
        for t in triangles {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument("triangle references a missing vertex".into()));
            }
            tris.push(orient_initial(&vertices, t)?);
        }
        let mut counts: BTreeMap<Edge, usize> = BTreeMap::new();
        for t in &tris {
            for (a, b) in LOCAL_EDGES {
                *counts.entry(Edge::new(t[a], t[b])).or_default() += 1;
            }
        }
        let boundary = counts
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(e, _)| (e, segment(vertices[e.0], vertices[e.1])))
            .collect();
        let n = tris.len();
        Ok(Self {
            vertices,
            triangles: tris,
            orders: vec![order; n],
            generation: vec![0; n],
            boundary,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elems(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn orders(&self) -> &[u8] {
        &self.orders
    }

    pub fn order(&self, elem: usize) -> u8 {
        self.orders[elem]
    }

    pub fn generation(&self) -> &[u32] {
        &self.generation
    }

    pub fn boundary_edges(&self) -> &BTreeMap<Edge, BoundarySegment> {
        &self.boundary
    }

    pub fn is_boundary_edge(&self, e: Edge) -> bool {
        self.boundary.contains_key(&e)
    }

    /// Refinement edge of an element, as stored vertex indices.
    pub fn refinement_edge(&self, elem: usize) -> Edge {
        let t = self.triangles[elem];
        Edge::new(t[1], t[2])
    }

    pub fn corners(&self, elem: usize) -> [[T; 2]; 3] {
        let t = self.triangles[elem];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn signed_area(&self, elem: usize) -> T {
        let [a, b, c] = self.corners(elem);
        signed_area(a, b, c)
    }

    pub fn max_order(&self) -> u8 {
        self.orders.iter().copied().max().unwrap_or(1)
    }

    pub fn min_order(&self) -> u8 {
        self.orders.iter().copied().min().unwrap_or(1)
    }

    /// The common order when all elements share one.
    pub fn uniform_order(&self) -> Option<u8> {
        let lo = self.min_order();
        (lo == self.max_order()).then_some(lo)
    }

    /// Sets every element to order `p` (clamped to `1..=P_MAX`).
    pub fn set_uniform_order(&mut self, p: u8) {
        let p = p.clamp(1, P_MAX);
        self.orders.iter_mut().for_each(|o| *o = p);
    }

    pub fn set_order(&mut self, elem: usize, p: u8) {
        self.orders[elem] = p.clamp(1, P_MAX);
    }

    /// Smallest interior angle over all elements, in radians.
    pub fn min_angle(&self) -> T {
        (0..self.n_elems())
            .map(|e| {
                let c = self.corners(e);
                (0..3)
                    .map(|i| angle_at(c[i], c[(i + 1) % 3], c[(i + 2) % 3]))
                    .fold(T::infinity(), T::min)
            })
            .fold(T::infinity(), T::min)
    }

    pub fn area(&self) -> T {
        (0..self.n_elems()).map(|e| self.signed_area(e)).sum()
    }

    /// Edge -> adjacent elements (one or two).
    pub fn edge_elements(&self) -> HashMap<Edge, Vec<usize>> {
        let mut map: HashMap<Edge, Vec<usize>> = HashMap::with_capacity(self.n_elems() * 2);
        for (i, t) in self.triangles.iter().enumerate() {
            for (a, b) in LOCAL_EDGES {
                map.entry(Edge::new(t[a], t[b])).or_default().push(i);
            }
        }
        map
    }

    /// Checks conformity edge by edge: interior edges have exactly two
    /// neighbours, boundary edges exactly one, and all areas are positive.
    pub fn check_conforming(&self) -> std::result::Result<(), String> {
        for e in 0..self.n_elems() {
            if !(self.signed_area(e) > T::zero()) {
                return Err(format!("element {e} has non-positive area"));
            }
            let o = self.orders[e];
            if !(1..=P_MAX).contains(&o) {
                return Err(format!("element {e} has order {o}"));
            }
        }
        let adjacency = self.edge_elements();
        for (edge, elems) in &adjacency {
            match (elems.len(), self.boundary.contains_key(edge)) {
                (1, true) | (2, false) => {}
                (n, b) => {
                    return Err(format!(
                        "edge {edge:?} has {n} neighbours (boundary tag: {b})"
                    ))
                }
            }
        }
        for edge in self.boundary.keys() {
            if !adjacency.contains_key(edge) {
                return Err(format!("boundary edge {edge:?} belongs to no element"));
            }
        }
        Ok(())
    }

    pub fn is_conforming(&self) -> bool {
        self.check_conforming().is_ok()
    }

    /// Order-sensitive fingerprint of connectivity, coordinates and orders.
    pub fn fingerprint(&self) -> u64 {
        const PRIME: u64 = 0x100_0000_01b3;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(self.vertices.len() as u64);
        for v in &self.vertices {
            eat(v[0].as_f64().to_bits());
            eat(v[1].as_f64().to_bits());
        }
        for (t, &o) in self.triangles.iter().zip(&self.orders) {
            t.iter().for_each(|&i| eat(i as u64));
            eat(o as u64);
        }
        h
    }

    /// Writes the plain-text snapshot: `ntri nvert`, then `x y` per vertex,
    /// then `v0 v1 v2 order` per triangle.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n_elems(), self.n_vertices())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0].as_f64(), v[1].as_f64())?;
        }
        for (t, o) in self.triangles.iter().zip(&self.orders) {
            writeln!(out, "{} {} {} {}", t[0], t[1], t[2], o)?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`TriMesh::write_snapshot`]. Boundary
    /// edges are recovered from connectivity with a single straight tag, and
    /// the stored vertex order (and so the refinement edge) is kept.
    pub fn read_snapshot<R: BufRead>(input: R) -> Result<Self> {
        let bad = |detail: String| Error::Parse { what: "mesh snapshot", detail };
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| bad("unexpected end of file".into()))?.map_err(Error::from)
        };
        let header = next()?;
        let mut it = header.split_whitespace().map(str::parse::<usize>);
        let (ntri, nvert) = match (it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b))) => (a, b),
            _ => return Err(bad(format!("bad header `{header}`"))),
        };
        let mut vertices = Vec::with_capacity(nvert);
        for _ in 0..nvert {
            let line = next()?;
            let xs: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad(format!("bad vertex `{line}`"))))
                .collect::<Result<_>>()?;
            if xs.len() != 2 {
                return Err(bad(format!("bad vertex `{line}`")));
            }
            vertices.push([T::lit(xs[0]), T::lit(xs[1])]);
        }
        let mut triangles = Vec::with_capacity(ntri);
        let mut orders = Vec::with_capacity(ntri);
        for _ in 0..ntri {
            let line = next()?;
            let xs: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad(format!("bad triangle `{line}`"))))
                .collect::<Result<_>>()?;
            if xs.len() != 4 || xs[..3].iter().any(|&v| v >= nvert) {
                return Err(bad(format!("bad triangle `{line}`")));
            }
            triangles.push([xs[0], xs[1], xs[2]]);
            orders.push(u8::try_from(xs[3]).map_err(|_| bad(format!("bad order `{line}`")))?);
        }
        let mut counts: BTreeMap<Edge, usize> = BTreeMap::new();
        for t in &triangles {
            for (a, b) in LOCAL_EDGES {
                *counts.entry(Edge::new(t[a], t[b])).or_default() += 1;
            }
        }
        let boundary = counts
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(e, _)| (e, BoundarySegment { id: 0, curved: false }))
            .collect();
        Ok(Self { vertices, generation: vec![0; ntri], triangles, orders, boundary })
    }
}

/// Builds the initial mesh `T_0` for a problem. `resolution` controls the
/// number of cells per unit length (square, L-shape) or the number of rings
/// (pacman). All elements get order `order`.
pub fn build_initial_mesh<T: Real>(
    spec: &ProblemSpec<T>,
    resolution: usize,
    order: u8,
) -> Result<TriMesh<T>> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be at least 1".into()));
    }
    spec.geometry.validate()?;
    match spec.geometry {
        Geometry::UnitSquare => {
            grid_mesh(resolution, [T::zero(), T::zero()], T::one(), |_, _| true, order)
        }
        Geometry::LShape => grid_mesh(
            2 * resolution,
            [-T::one(), -T::one()],
            T::lit(2.0),
            // keep cells whose centre is not in the removed quadrant x > 0, y < 0
            |cx, cy| !(cx > T::zero() && cy < T::zero()),
            order,
        ),
        Geometry::Pacman { omega } => pacman_mesh(omega, resolution, order),
    }
}

fn grid_mesh<T: Real>(
    n: usize,
    origin: [T; 2],
    width: T,
    keep_cell: impl Fn(T, T) -> bool,
    order: u8,
) -> Result<TriMesh<T>> {
    let h = width / T::from_usize_lossy(n);
    let coord = |i: usize, j: usize| {
        [origin[0] + h * T::from_usize_lossy(i), origin[1] + h * T::from_usize_lossy(j)]
    };
    let mut index = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |i: usize, j: usize, vertices: &mut Vec<[T; 2]>| {
        let slot = &mut index[j * (n + 1) + i];
        if *slot == usize::MAX {
            *slot = vertices.len();
            vertices.push(coord(i, j));
        }
        *slot
    };
    for j in 0..n {
        for i in 0..n {
            let half = T::lit(0.5);
            let c = coord(i, j);
            if !keep_cell(c[0] + half * h, c[1] + half * h) {
                continue;
            }
            let v00 = vid(i, j, &mut vertices);
            let v10 = vid(i + 1, j, &mut vertices);
            let v01 = vid(i, j + 1, &mut vertices);
            let v11 = vid(i + 1, j + 1, &mut vertices);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let eps = h * T::lit(1e-9);
    TriMesh::from_raw(vertices, triangles, order, move |a, b| {
        // side id: 0 horizontal, 1 vertical
        let id = if (a[1] - b[1]).abs() < eps { 0 } else { 1 };
        BoundarySegment { id, curved: false }
    })
}

/// Polar triangulation of the pacman domain: `sectors` fan sectors, `rings`
/// concentric rings; ring `i` carries `i * sectors` arc segments.
fn pacman_mesh<T: Real>(omega: T, rings: usize, order: u8) -> Result<TriMesh<T>> {
    let opening = T::TAU() - omega;
    let sectors = (opening / T::FRAC_PI_4()).ceil().to_usize().unwrap_or(2).max(2);
    let mut vertices: Vec<[T; 2]> = vec![[T::zero(), T::zero()]];
    // ring_start[i] = index of the first vertex on ring i (i >= 1)
    let mut ring_start = vec![0usize; rings + 1];
    for i in 1..=rings {
        ring_start[i] = vertices.len();
        let segs = i * sectors;
        let r = T::from_usize_lossy(i) / T::from_usize_lossy(rings);
        for j in 0..=segs {
            let phi = opening * T::from_usize_lossy(j) / T::from_usize_lossy(segs);
            let (s, c) = phi.sin_cos();
            if i == rings {
                vertices.push([c, s]);
            } else {
                vertices.push([r * c, r * s]);
            }
        }
    }
    let ring_vertex = |i: usize, j: usize| if i == 0 { 0 } else { ring_start[i] + j };
    let mut triangles = Vec::new();
    for k in 0..sectors {
        for i in 1..=rings {
            // inner ring i-1 has (i-1) segments per sector, outer ring i has i
            let a = |j: usize| ring_vertex(i - 1, k * (i - 1) + j);
            let b = |j: usize| ring_vertex(i, k * i + j);
            for j in 0..i {
                triangles.push([b(j), b(j + 1), a(j)]);
            }
            for j in 0..i.saturating_sub(1) {
                triangles.push([a(j), b(j + 1), a(j + 1)]);
            }
        }
    }
    let tol = T::lit(1e-12);
    TriMesh::from_raw(vertices, triangles, order, move |a, b| {
        let on_circle = |v: [T; 2]| (v[0].hypot(v[1]) - T::one()).abs() < tol;
        if on_circle(a) && on_circle(b) {
            BoundarySegment { id: 2, curved: true }
        } else {
            let first_ray = a[1].abs() < tol && b[1].abs() < tol;
            BoundarySegment { id: if first_ray { 0 } else { 1 }, curved: false }
        }
    })
}

fn orient_initial<T: Real>(vertices: &[[T; 2]], t: [usize; 3]) -> Result<[usize; 3]> {
    let p = |i: usize| vertices[t[i]];
    let area = signed_area(p(0), p(1), p(2));
    if area == T::zero() || !area.is_finite() {
        return Err(Error::InvalidArgument(format!("degenerate triangle {t:?}")));
    }
    let t = if area < T::zero() { [t[0], t[2], t[1]] } else { t };
    // longest edge becomes the refinement edge; near-ties go to the lowest
    // opposite vertex index
    let len = |i: usize| {
        let (a, b) = LOCAL_EDGES[i];
        let (pa, pb) = (vertices[t[a]], vertices[t[b]]);
        (pa[0] - pb[0]).hypot(pa[1] - pb[1])
    };
    let longest = (0..3).map(len).fold(T::zero(), T::max);
    let tie = longest * T::lit(1e-12);
    let peak = (0..3)
        .filter(|&i| longest - len(i) <= tie)
        .min_by_key(|&i| t[i])
        .expect("some edge is longest");
    // cyclic rotation keeps the orientation
    Ok([t[peak], t[(peak + 1) % 3], t[(peak + 2) % 3]])
}

pub(crate) fn signed_area<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    T::lit(0.5) * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn angle_at<T: Real>(p: [T; 2], q: [T; 2], r: [T; 2]) -> T {
    let u = [q[0] - p[0], q[1] - p[1]];
    let v = [r[0] - p[0], r[1] - p[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

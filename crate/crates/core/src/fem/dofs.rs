//! Global numbering of the variable-order conforming space.
//!
//! Vertex dofs come first (dof `v` is vertex `v`), then edge dofs, then element
//! interior dofs. A shared edge carries the minimum of its neighbours' orders.

use std::collections::HashMap;

use crate::fem::basis::{bubble_index, edge_function_index, n_bubbles};
use crate::geometry::mesh::{Edge, TriMesh, LOCAL_EDGES};
use crate::real::Real;

/// Per-element description of which reference functions are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElementLayout {
    pub order: u8,
    pub edge_orders: [u8; 3],
    /// Local edge orientation disagrees with the global (low -> high index) one.
    pub flipped: [bool; 3],
}

#[derive(Clone, Debug)]
pub struct GlobalEdge {
    pub edge: Edge,
    pub order: u8,
    /// First of `order - 1` consecutive dofs.
    pub first_dof: usize,
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub ndofs: usize,
    pub n_vertices: usize,
    pub edges: Vec<GlobalEdge>,
    pub layouts: Vec<ElementLayout>,
    offsets: Vec<usize>,
    dofs: Vec<usize>,
    /// Reference-table index of each local function.
    funcs: Vec<u16>,
    /// `-1` where an odd edge function is reflected by orientation.
    signs: Vec<i8>,
}

impl DofMap {
    pub fn new<T: Real>(mesh: &TriMesh<T>) -> Self {
        let tris = mesh.triangles();
        let orders = mesh.orders();
        let mut edge_index: HashMap<Edge, usize> = HashMap::with_capacity(tris.len() * 2);
        let mut edge_order: Vec<u8> = Vec::new();
        let mut edge_list: Vec<Edge> = Vec::new();
        for (e, t) in tris.iter().enumerate() {
            for (a, b) in LOCAL_EDGES {
                let edge = Edge::new(t[a], t[b]);
                let id = *edge_index.entry(edge).or_insert_with(|| {
                    edge_list.push(edge);
                    edge_order.push(u8::MAX);
                    edge_list.len() - 1
                });
                edge_order[id] = edge_order[id].min(orders[e]);
            }
        }
        let mut next = mesh.n_vertices();
        let edges: Vec<GlobalEdge> = edge_list
            .iter()
            .zip(&edge_order)
            .map(|(&edge, &order)| {
                let g = GlobalEdge { edge, order, first_dof: next };
                next += order as usize - 1;
                g
            })
            .collect();

        let mut layouts = Vec::with_capacity(tris.len());
        let mut offsets = Vec::with_capacity(tris.len() + 1);
        let mut dofs = Vec::new();
        let mut funcs = Vec::new();
        let mut signs = Vec::new();
        offsets.push(0);
        for (e, t) in tris.iter().enumerate() {
            let p = orders[e];
            let mut layout = ElementLayout { order: p, edge_orders: [1; 3], flipped: [false; 3] };
            for (i, &v) in t.iter().enumerate() {
                dofs.push(v);
                funcs.push(i as u16);
                signs.push(1);
            }
            for (local, (a, b)) in LOCAL_EDGES.into_iter().enumerate() {
                let ge = &edges[edge_index[&Edge::new(t[a], t[b])]];
                let flipped = t[a] > t[b];
                layout.edge_orders[local] = ge.order;
                layout.flipped[local] = flipped;
                for k in 2..=ge.order {
                    dofs.push(ge.first_dof + (k as usize - 2));
                    funcs.push(edge_function_index(p, local, k) as u16);
                    signs.push(if flipped && k % 2 == 1 { -1 } else { 1 });
                }
            }
            for b in 0..n_bubbles(p) {
                dofs.push(next);
                next += 1;
                funcs.push(bubble_index(p, b) as u16);
                signs.push(1);
            }
            layouts.push(layout);
            offsets.push(dofs.len());
        }
        Self { ndofs: next, n_vertices: mesh.n_vertices(), edges, layouts, offsets, dofs, funcs, signs }
    }

    pub fn n_elems(&self) -> usize {
        self.layouts.len()
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.dofs[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn element_funcs(&self, e: usize) -> &[u16] {
        &self.funcs[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn element_signs(&self, e: usize) -> &[i8] {
        &self.signs[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn max_local(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }
}

/// Dimension of the conforming space under the minimum rule, boundary
/// dofs included.
pub fn count_dofs<T: Real>(mesh: &TriMesh<T>) -> usize {
    let mut edge_order: HashMap<Edge, u8> = HashMap::with_capacity(mesh.n_elems() * 2);
    for (t, &p) in mesh.triangles().iter().zip(mesh.orders()) {
        for (a, b) in LOCAL_EDGES {
            let o = edge_order.entry(Edge::new(t[a], t[b])).or_insert(u8::MAX);
            *o = (*o).min(p);
        }
    }
    mesh.n_vertices()
        + edge_order.values().map(|&p| p as usize - 1).sum::<usize>()
        + mesh.orders().iter().map(|&p| n_bubbles(p)).sum::<usize>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_initial_mesh, ProblemSpec, TriMesh};

    #[test]
    fn documented_counts() {
        let mut sq = build_initial_mesh(&ProblemSpec::<f64>::unit_square_sine(), 1, 1).unwrap();
        assert_eq!(count_dofs(&sq), 4);
        sq.set_uniform_order(2);
        assert_eq!(count_dofs(&sq), 9);
        let single = TriMesh::<f64>::from_raw(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            3,
            |_, _| crate::geometry::BoundarySegment { id: 0, curved: false },
        )
        .unwrap();
        assert_eq!(count_dofs(&single), 10);
        assert_eq!(DofMap::new(&single).ndofs, 10);
    }

    #[test]
    fn minimum_rule_on_shared_edge() {
        let mut sq = build_initial_mesh(&ProblemSpec::<f64>::unit_square_sine(), 1, 1).unwrap();
        sq.set_order(0, 4);
        sq.set_order(1, 2);
        let map = DofMap::new(&sq);
        // 4 vertices; diagonal order 2 (1 dof); element 0 boundary edges order 4
        // (3 dofs each); element 1 boundary edges order 2; bubbles: 3 for p=4
        assert_eq!(map.ndofs, 4 + 1 + 2 * 3 + 2 + 3);
        assert_eq!(map.ndofs, count_dofs(&sq));
        let diag = sq.refinement_edge(0);
        let ge = map.edges.iter().find(|g| g.edge == diag).unwrap();
        assert_eq!(ge.order, 2);
        // the two elements reference the same diagonal dof
        let shared: Vec<usize> = map
            .element_dofs(0)
            .iter()
            .filter(|d| map.element_dofs(1).contains(d))
            .copied()
            .collect();
        assert_eq!(shared.len(), 3);
    }

    #[test]
    fn count_is_invariant_under_element_reordering() {
        let mut m = build_initial_mesh(&ProblemSpec::<f64>::lshape(), 2, 1).unwrap();
        for (i, p) in [3u8, 1, 5, 2, 8, 4].iter().enumerate() {
            m.set_order(i * 3, *p);
        }
        let before = count_dofs(&m);
        let mut shuffled = m.clone();
        shuffled.triangles.reverse();
        shuffled.orders.reverse();
        shuffled.generation.reverse();
        assert_eq!(count_dofs(&shuffled), before);
        assert_eq!(DofMap::new(&shuffled).ndofs, before);
    }
}

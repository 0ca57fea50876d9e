//! Newest-vertex bisection with conformity closure, and order raising.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::geometry::mesh::{Edge, TriMesh, LOCAL_EDGES, P_MAX};
use crate::real::Real;

impl<T: Real> TriMesh<T> {
    /// Bisects every marked element at least once and closes the refinement so
    /// the result is conforming.
    ///
    /// Marking works on edges: the refinement edge of each marked element is
    /// marked, and any element owning a marked edge gets its own refinement
    /// edge marked until nothing changes. Each element is then split into two,
    /// three or four children. The first child keeps the parent's index and
    /// the others are appended in element order, so indices are deterministic.
    pub fn refine_h(&self, marked: &[usize]) -> TriMesh<T> {
        self.refine_h_tracked(marked).0
    }

    /// Bisects the marked elements `times` times: after each round the
    /// children of marked elements are marked again. Two rounds halve the
    /// diameter of every marked element.
    pub fn refine_h_times(&self, marked: &[usize], times: usize) -> TriMesh<T> {
        let mut mesh = self.clone();
        let mut set = marked.to_vec();
        for round in 0..times {
            if set.is_empty() {
                break;
            }
            let (next, parent) = mesh.refine_h_tracked(&set);
            if round + 1 < times {
                let mut flagged = vec![false; mesh.n_elems()];
                for &e in &set {
                    flagged[e] = true;
                }
                set = (0..next.n_elems()).filter(|&e| flagged[parent[e]]).collect();
            }
            mesh = next;
        }
        mesh
    }

    /// As [`TriMesh::refine_h`], also returning the parent of every element
    /// of the refined mesh (the identity for untouched elements).
    pub fn refine_h_tracked(&self, marked: &[usize]) -> (TriMesh<T>, Vec<usize>) {
        let mut parent: Vec<usize> = (0..self.n_elems()).collect();
        if marked.is_empty() {
            return (self.clone(), parent);
        }
        let adjacency = self.edge_elements();
        let mut midpoint: HashMap<Edge, usize> = HashMap::new();
        let mut queue: Vec<Edge> = Vec::new();
        for &e in marked {
            let edge = self.refinement_edge(e);
            if midpoint.insert(edge, usize::MAX).is_none() {
                queue.push(edge);
            }
        }
        while let Some(edge) = queue.pop() {
            for &elem in &adjacency[&edge] {
                let r = self.refinement_edge(elem);
                if let Entry::Vacant(slot) = midpoint.entry(r) {
                    slot.insert(usize::MAX);
                    queue.push(r);
                }
            }
        }

        let mut out = self.clone();
        // new vertices in element order, local edge order
        for t in &self.triangles {
            for (a, b) in LOCAL_EDGES {
                let edge = Edge::new(t[a], t[b]);
                if let Some(slot) = midpoint.get_mut(&edge) {
                    if *slot == usize::MAX {
                        *slot = out.vertices.len();
                        out.vertices.push(self.split_point(edge));
                        if let Some(seg) = out.boundary.remove(&edge) {
                            out.boundary.insert(Edge::new(edge.0, *slot), seg);
                            out.boundary.insert(Edge::new(*slot, edge.1), seg);
                        }
                    }
                }
            }
        }

        let mid = |a: usize, b: usize| midpoint.get(&Edge::new(a, b)).copied();
        for (elem, &[v0, v1, v2]) in self.triangles.iter().enumerate() {
            let Some(m) = mid(v1, v2) else { continue };
            let mut children: Vec<[usize; 3]> = Vec::with_capacity(4);
            match mid(v0, v1) {
                Some(m1) => {
                    children.push([m1, m, v0]);
                    children.push([m1, v1, m]);
                }
                None => children.push([m, v0, v1]),
            }
            match mid(v2, v0) {
                Some(m2) => {
                    children.push([m2, m, v2]);
                    children.push([m2, v0, m]);
                }
                None => children.push([m, v2, v0]),
            }
            let order = self.orders[elem];
            let depth = |c: &[usize; 3]| {
                // grandchildren have a second-generation midpoint as their peak
                let second = c[0] != m;
                self.generation[elem] + if second { 2 } else { 1 }
            };
            out.triangles[elem] = children[0];
            out.generation[elem] = depth(&children[0]);
            for c in &children[1..] {
                out.triangles.push(*c);
                out.orders.push(order);
                out.generation.push(depth(c));
                parent.push(elem);
            }
        }
        (out, parent)
    }

    /// Raises the order of the marked elements by one, saturating at [`P_MAX`].
    pub fn refine_p(&self, marked: &[usize]) -> TriMesh<T> {
        let mut out = self.clone();
        for &e in marked {
            out.orders[e] = (out.orders[e] + 1).min(P_MAX);
        }
        out
    }

    fn split_point(&self, edge: Edge) -> [T; 2] {
        let (a, b) = (self.vertices[edge.0], self.vertices[edge.1]);
        let half = T::lit(0.5);
        let m = [half * (a[0] + b[0]), half * (a[1] + b[1])];
        match self.boundary.get(&edge) {
            Some(seg) if seg.curved => {
                let r = m[0].hypot(m[1]);
                [m[0] / r, m[1] / r]
            }
            _ => m,
        }
    }
}

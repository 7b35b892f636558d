//! Oriented, branched triangulations of the torus.
//!
//! The torus is an Lx × Ly square grid with one diagonal per cell (running
//! lower-left to upper-right). The branching structure is fixed by the global
//! vertex order: every edge points from its smaller-index endpoint to the
//! larger one, which is automatically acyclic on each triangle. Orientation
//! signs compare that branching order against the counterclockwise sense of
//! the planar chart of the cell, so paired triangles across every edge carry
//! opposite induced orientations. Parallel edges (which occur on the 2 × 2
//! torus) are kept distinct.

use crate::groups::{Elt, FiniteGroup};
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("torus needs Lx, Ly >= 2")]
    TooSmall,
    #[error("walk is not edge-connected")]
    DisconnectedWalk,
    #[error("region is not a contractible disk")]
    NonContractible,
    #[error("region interior is not connected")]
    Disconnected,
    #[error("region must be a nonempty proper subset of the vertices")]
    BadInterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Triangle {
    /// Vertices in branching order (ascending global index).
    pub verts: [usize; 3],
    /// Edge ids joining (v1,v2), (v2,v3), (v1,v3).
    pub edges: [usize; 3],
    /// +1 when the branching order runs counterclockwise in the chart.
    pub sign: i8,
}

#[derive(Clone, Debug)]
pub struct TriLattice {
    pub lx: usize,
    pub ly: usize,
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
    pub triangles: Vec<Triangle>,
    /// Per vertex: (edge id, true when the edge points into the vertex).
    incident_edges: Vec<Vec<(usize, bool)>>,
    incident_triangles: Vec<Vec<usize>>,
}

impl TriLattice {
    /// Square-grid torus with one diagonal per cell.
    pub fn torus(lx: usize, ly: usize) -> Result<Self, LatticeError> {
        if lx < 2 || ly < 2 {
            return Err(LatticeError::TooSmall);
        }
        let v = lx * ly;
        let vid = |r: usize, c: usize| (r % ly) * lx + (c % lx);
        // Edge ids: 3 per cell in kind order horizontal, vertical, diagonal.
        let mut edges = Vec::with_capacity(3 * v);
        for r in 0..ly {
            for c in 0..lx {
                for (dr, dc) in [(0usize, 1usize), (1, 0), (1, 1)] {
                    let a = vid(r, c);
                    let b = vid(r + dr, c + dc);
                    let (tail, head) = if a < b { (a, b) } else { (b, a) };
                    edges.push(Edge { tail, head });
                }
            }
        }
        let eid = |r: usize, c: usize, kind: usize| 3 * vid(r, c) + kind;
        let mut triangles = Vec::with_capacity(2 * v);
        for r in 0..ly {
            for c in 0..lx {
                let a = vid(r, c);
                let b = vid(r, c + 1);
                let cc = vid(r + 1, c);
                let d = vid(r + 1, c + 1);
                // chart positions within the cell
                let upper = [(a, (0i64, 0i64)), (b, (1, 0)), (d, (1, 1))];
                let lower = [(a, (0, 0)), (cc, (0, 1)), (d, (1, 1))];
                let upper_edges = [eid(r, c, 0), eid(r, c + 1, 1), eid(r, c, 2)];
                let lower_edges = [eid(r, c, 1), eid(r + 1, c, 0), eid(r, c, 2)];
                for (corners, tri_edges) in [(upper, upper_edges), (lower, lower_edges)] {
                    let mut order = corners;
                    order.sort_by_key(|&(id, _)| id);
                    let [(v1, p1), (v2, p2), (v3, p3)] = order;
                    let cross = (p2.0 - p1.0) * (p3.1 - p1.1) - (p2.1 - p1.1) * (p3.0 - p1.0);
                    let sign = if cross > 0 { 1 } else { -1 };
                    // match each sorted pair to the cell edge joining it
                    let pick = |x: usize, y: usize| -> usize {
                        *tri_edges
                            .iter()
                            .find(|&&e| {
                                let ed = edges[e];
                                (ed.tail == x && ed.head == y) || (ed.tail == y && ed.head == x)
                            })
                            .expect("cell edge joining the pair")
                    };
                    triangles.push(Triangle {
                        verts: [v1, v2, v3],
                        edges: [pick(v1, v2), pick(v2, v3), pick(v1, v3)],
                        sign,
                    });
                }
            }
        }
        let mut incident_edges = vec![Vec::new(); v];
        for (i, e) in edges.iter().enumerate() {
            incident_edges[e.tail].push((i, false));
            incident_edges[e.head].push((i, true));
        }
        let mut incident_triangles = vec![Vec::new(); v];
        for (i, t) in triangles.iter().enumerate() {
            for &vx in &t.verts {
                incident_triangles[vx].push(i);
            }
        }
        Ok(TriLattice {
            lx,
            ly,
            vertex_count: v,
            edges,
            triangles,
            incident_edges,
            incident_triangles,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn incident_edges(&self, v: usize) -> &[(usize, bool)] {
        &self.incident_edges[v]
    }

    pub fn incident_triangles(&self, v: usize) -> &[usize] {
        &self.incident_triangles[v]
    }

    /// Ordered product of edge values along a walk; each step names an edge
    /// and whether it is traversed along its direction. Later steps multiply
    /// on the left, so a flux-free plaquette walk composes to the identity.
    pub fn holonomy(
        &self,
        group: &FiniteGroup,
        edge_vals: &[Elt],
        walk: &[(usize, bool)],
    ) -> Result<Elt, LatticeError> {
        let mut at: Option<usize> = None;
        let mut acc = group.identity();
        for &(e, forward) in walk {
            let edge = self.edges[e];
            let (from, to) = if forward {
                (edge.tail, edge.head)
            } else {
                (edge.head, edge.tail)
            };
            if let Some(pos) = at {
                if pos != from {
                    return Err(LatticeError::DisconnectedWalk);
                }
            }
            at = Some(to);
            let val = if forward {
                edge_vals[e]
            } else {
                group.inv(edge_vals[e])
            };
            acc = group.mul(val, acc);
        }
        Ok(acc)
    }

    /// Walk around a triangle: `(e12 fwd, e23 fwd, e13 bwd)`.
    pub fn plaquette_walk(&self, t: usize) -> [(usize, bool); 3] {
        let tri = &self.triangles[t];
        [
            (tri.edges[0], true),
            (tri.edges[1], true),
            (tri.edges[2], false),
        ]
    }

    pub fn plaquette_holonomy(&self, group: &FiniteGroup, edge_vals: &[Elt], t: usize) -> Elt {
        self.holonomy(group, edge_vals, &self.plaquette_walk(t))
            .expect("plaquette walks are connected")
    }
}

/// BFS spanning tree with per-vertex paths to the root; used both to route
/// measurement-outcome corrections and to lift edge configurations.
#[derive(Clone, Debug)]
pub struct CorrectionTree {
    pub root: usize,
    /// parent[v] = (parent vertex, edge id, edge points into v) for v != root.
    pub parent: Vec<Option<(usize, usize, bool)>>,
    /// Vertices in BFS order starting with the root.
    pub order: Vec<usize>,
}

impl CorrectionTree {
    pub fn build(lattice: &TriLattice, root: usize) -> Self {
        let mut parent = vec![None; lattice.vertex_count];
        let mut seen = vec![false; lattice.vertex_count];
        seen[root] = true;
        let mut order = vec![root];
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(e, into_v) in lattice.incident_edges(v) {
                let other = if into_v {
                    lattice.edges[e].tail
                } else {
                    lattice.edges[e].head
                };
                if !seen[other] {
                    seen[other] = true;
                    // the edge points into `other` iff it does not point into v
                    parent[other] = Some((v, e, !into_v));
                    order.push(other);
                    queue.push_back(other);
                }
            }
        }
        CorrectionTree {
            root,
            parent,
            order,
        }
    }

    /// Edges from `v` to the root as (edge id, edge points toward the root).
    pub fn path_to_root(&self, mut v: usize) -> Vec<(usize, bool)> {
        let mut path = Vec::new();
        while let Some((p, e, into_v)) = self.parent[v] {
            // `into_v` means the edge points from parent into v, i.e. away
            // from the root.
            path.push((e, !into_v));
            v = p;
        }
        path
    }

    pub fn tree_edges(&self) -> BTreeSet<usize> {
        self.parent.iter().flatten().map(|&(_, e, _)| e).collect()
    }
}

/// A contractible region of the torus: interior vertices, the edges crossing
/// its boundary, and the boundary vertex cycle.
#[derive(Clone, Debug)]
pub struct Region {
    pub interior: BTreeSet<usize>,
    /// Edges with exactly one endpoint inside; flag tells whether the head is
    /// the inside endpoint.
    pub crossing_edges: Vec<(usize, bool)>,
    /// Triangles with at least one interior vertex.
    pub touched_triangles: Vec<usize>,
    /// Boundary cycle as a vertex sequence; starts at the reference vertex.
    pub boundary_cycle: Vec<usize>,
    pub reference_vertex: usize,
    /// Smallest interior vertex with a neighbor outside; phases and
    /// conjugation paths anchor here.
    pub inner_reference: usize,
}

impl TriLattice {
    pub fn region(&self, interior: &[usize]) -> Result<Region, LatticeError> {
        let set: BTreeSet<usize> = interior.iter().copied().collect();
        if set.is_empty() || set.len() >= self.vertex_count {
            return Err(LatticeError::BadInterior);
        }
        // connectivity of the interior through lattice edges
        let start = *set.iter().next().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(e, _) in self.incident_edges(v) {
                let edge = self.edges[e];
                for other in [edge.tail, edge.head] {
                    if set.contains(&other) && seen.insert(other) {
                        stack.push(other);
                    }
                }
            }
        }
        if seen.len() != set.len() {
            return Err(LatticeError::Disconnected);
        }
        let touched: Vec<usize> = (0..self.triangles.len())
            .filter(|&t| self.triangles[t].verts.iter().any(|v| set.contains(v)))
            .collect();
        // contractibility: the closed star of the region must be a disk
        let mut verts = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for &t in &touched {
            verts.extend(self.triangles[t].verts);
            edges.extend(self.triangles[t].edges);
        }
        let chi = verts.len() as i64 - edges.len() as i64 + touched.len() as i64;
        if chi != 1 {
            return Err(LatticeError::NonContractible);
        }
        let crossing_edges: Vec<(usize, bool)> = self
            .edges
            .iter()
            .enumerate()
            .filter_map(
                |(i, e)| match (set.contains(&e.tail), set.contains(&e.head)) {
                    (true, false) => Some((i, false)),
                    (false, true) => Some((i, true)),
                    _ => None,
                },
            )
            .collect();
        // boundary cycle: edges of exactly one touched triangle
        let mut edge_use = std::collections::BTreeMap::new();
        for &t in &touched {
            for &e in &self.triangles[t].edges {
                *edge_use.entry(e).or_insert(0usize) += 1;
            }
        }
        let boundary_edges: Vec<usize> = edge_use
            .iter()
            .filter(|&(_, &c)| c == 1)
            .map(|(&e, _)| e)
            .collect();
        let mut adj: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &e in &boundary_edges {
            let ed = self.edges[e];
            adj.entry(ed.tail).or_default().push(ed.head);
            adj.entry(ed.head).or_default().push(ed.tail);
        }
        for neighbors in adj.values() {
            if neighbors.len() != 2 {
                return Err(LatticeError::NonContractible);
            }
        }
        let reference_vertex = *adj.keys().next().ok_or(LatticeError::NonContractible)?;
        let mut boundary_cycle = vec![reference_vertex];
        let mut prev = reference_vertex;
        let mut cur = adj[&reference_vertex][0];
        while cur != reference_vertex {
            boundary_cycle.push(cur);
            let next = if adj[&cur][0] == prev {
                adj[&cur][1]
            } else {
                adj[&cur][0]
            };
            prev = cur;
            cur = next;
        }
        if boundary_cycle.len() != boundary_edges.len() {
            return Err(LatticeError::NonContractible);
        }
        let inner_reference = *crossing_edges
            .iter()
            .map(|&(e, head_in)| {
                if head_in {
                    &self.edges[e].head
                } else {
                    &self.edges[e].tail
                }
            })
            .min()
            .ok_or(LatticeError::BadInterior)?;
        Ok(Region {
            interior: set,
            crossing_edges,
            touched_triangles: touched,
            boundary_cycle,
            reference_vertex,
            inner_reference,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lx": self.lx,
            "ly": self.ly,
            "vertices": self.vertex_count,
            "edges": self.edges,
            "triangles": self.triangles,
        })
    }
}

//! Triangle mesh with halfedge connectivity.
//!
//! Halfedge `3 * f + k` runs from corner `k` of face `f` to corner `k + 1`,
//! so `next` and `face` are implicit. Only twins are stored.

mod cut;
mod geometry;
pub mod io;

pub use cut::{double_cover, slice_along_curve, split_along_edges, CurvePath, DoubleCover, Slice};
pub use geometry::{
    cotangent_weights, dirichlet_energy, mean_curvature_feature, surface_area, triangle_area,
    CotanWeights,
};

use std::collections::HashMap;

use thiserror::Error;

pub type Vec3 = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("non-manifold mesh: {0}")]
    NonManifold(String),
    #[error("non-orientable mesh: edge ({0}, {1}) is traversed twice in the same direction")]
    NonOrientable(usize, usize),
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("degenerate triangle {face}: area {area:e} below threshold {threshold:e}")]
    DegenerateTriangle { face: usize, area: f64, threshold: f64 },
    #[error("curve repeats vertex {0}")]
    CurveNotEmbedded(usize),
    #[error("edge ({0}, {1}) is not in the mesh")]
    EdgeNotInMesh(usize, usize),
    #[error("mesh is already closed")]
    AlreadyClosed,
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Undirected edge with its (one or two) halfedges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub halfedges: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.halfedges[1].is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub euler: i64,
    pub genus: i64,
    pub boundary_loops: Vec<Vec<usize>>,
}

/// Oriented manifold triangle mesh. Immutable once built.
#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    twin: Vec<Option<usize>>,
    halfedge_edge: Vec<usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    neighbors: Vec<Vec<usize>>,
    boundary_out: Vec<Option<usize>>,
}

impl TriMesh {
    /// Builds and validates a mesh. Every vertex must be referenced and have a
    /// disk or half-disk star.
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let nv = positions.len();
        for (f, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::Parse(format!(
                        "face {f} references vertex {v} but only {nv} vertices exist"
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::NonManifold(format!("face {f} repeats a vertex")));
            }
        }
        if let Some(p) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(MeshError::Parse(format!("vertex {p} has a non-finite coordinate")));
        }

        let nh = triangles.len() * 3;
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(nh);
        for (f, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((a, b), 3 * f + k).is_some() {
                    // Same direction twice: either a flipped neighbour or a fan of >2 faces.
                    let undirected = count_faces_on_edge(&triangles, a, b);
                    if undirected > 2 {
                        return Err(MeshError::NonManifold(format!(
                            "edge ({a}, {b}) borders {undirected} faces"
                        )));
                    }
                    return Err(MeshError::NonOrientable(a, b));
                }
            }
        }

        let mut twin = vec![None; nh];
        let mut halfedge_edge = vec![usize::MAX; nh];
        let mut edges = Vec::new();
        let mut edge_index = HashMap::new();
        for (f, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let h = 3 * f + k;
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&e) = edge_index.get(&key) {
                    let edge: &mut Edge = &mut edges[e];
                    if edge.halfedges[1].is_some() {
                        return Err(MeshError::NonManifold(format!(
                            "edge ({a}, {b}) borders more than 2 faces"
                        )));
                    }
                    let other = edge.halfedges[0].unwrap();
                    edge.halfedges[1] = Some(h);
                    twin[h] = Some(other);
                    twin[other] = Some(h);
                    halfedge_edge[h] = e;
                } else {
                    let e = edges.len();
                    edges.push(Edge { vertices: [key.0, key.1], halfedges: [Some(h), None] });
                    edge_index.insert(key, e);
                    halfedge_edge[h] = e;
                }
            }
        }
        let mut neighbors = vec![Vec::new(); nv];
        for e in &edges {
            neighbors[e.vertices[0]].push(e.vertices[1]);
            neighbors[e.vertices[1]].push(e.vertices[0]);
        }
        for (v, n) in neighbors.iter_mut().enumerate() {
            if n.is_empty() {
                return Err(MeshError::NonManifold(format!("vertex {v} is not used by any face")));
            }
            n.sort_unstable();
        }

        let mut boundary_out = vec![None; nv];
        for h in 0..nh {
            if twin[h].is_none() {
                let a = triangles[h / 3][h % 3];
                if boundary_out[a].is_some() {
                    return Err(MeshError::NonManifold(format!(
                        "vertex {a} has more than one boundary fan"
                    )));
                }
                boundary_out[a] = Some(h);
            }
        }

        let mesh = TriMesh {
            positions,
            triangles,
            twin,
            halfedge_edge,
            edges,
            edge_index,
            neighbors,
            boundary_out,
        };
        if let Some(v) = mesh.first_pinched_vertex() {
            return Err(MeshError::NonManifold(format!("vertex {v} star is not a disk")));
        }
        Ok(mesh)
    }

    /// Like [`TriMesh::new`], but first duplicates vertices whose stars fall
    /// apart into several fans, and drops unreferenced vertices. Returns the
    /// mesh and, per new vertex, the input vertex it came from.
    pub fn new_splitting_pinches(
        positions: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<(Self, Vec<usize>), MeshError> {
        let (positions, triangles, origin) = split_fans(&positions, &triangles, |_, _| false);
        let mesh = TriMesh::new(positions, triangles)?;
        Ok((mesh, origin))
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }
    pub fn num_faces(&self) -> usize {
        self.triangles.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }
    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    /// Sorted one-ring of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }
    pub fn twin(&self, h: usize) -> Option<usize> {
        self.twin[h]
    }
    pub fn halfedge_edge(&self, h: usize) -> usize {
        self.halfedge_edge[h]
    }
    /// (tail, head) of halfedge `h`.
    pub fn halfedge_vertices(&self, h: usize) -> (usize, usize) {
        let t = &self.triangles[h / 3];
        (t[h % 3], t[(h % 3 + 1) % 3])
    }
    /// Halfedge from `a` to `b`, if a face on its left exists.
    pub fn halfedge(&self, a: usize, b: usize) -> Option<usize> {
        let e = &self.edges[self.edge_id(a, b)?];
        e.halfedges.iter().flatten().copied().find(|&h| self.halfedge_vertices(h) == (a, b))
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_out[v].is_some()
    }
    pub fn is_closed(&self) -> bool {
        self.twin.iter().all(Option::is_some)
    }
    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        norm(sub(self.positions[a], self.positions[b]))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Boundary loops in face orientation, each starting at its smallest
    /// vertex, ordered by that vertex.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.num_vertices()];
        let mut loops = Vec::new();
        for start in 0..self.num_vertices() {
            if seen[start] || self.boundary_out[start].is_none() {
                continue;
            }
            let mut cycle = Vec::new();
            let mut v = start;
            loop {
                seen[v] = true;
                cycle.push(v);
                let h = self.boundary_out[v].expect("boundary vertex");
                v = self.halfedge_vertices(h).1;
                if v == start {
                    break;
                }
            }
            loops.push(cycle);
        }
        loops
    }

    pub fn topology(&self) -> Topology {
        let euler = self.euler_characteristic();
        let boundary_loops = self.boundary_loops();
        let components = self.connected_components().len() as i64;
        let b = boundary_loops.len() as i64;
        // Summed genus over components: chi = sum(2 - 2g_i - b_i).
        let genus = (2 * components - euler - b) / 2;
        Topology { euler, genus, boundary_loops }
    }

    /// Face components connected across interior edges, ordered by smallest face.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        self.face_components(|_| false)
    }

    /// Face components, treating edges for which `blocked(edge_id)` holds as cuts.
    pub fn face_components(&self, blocked: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
        let nf = self.num_faces();
        let mut label = vec![usize::MAX; nf];
        let mut comps = Vec::new();
        for seed in 0..nf {
            if label[seed] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut stack = vec![seed];
            let mut members = Vec::new();
            label[seed] = id;
            while let Some(f) = stack.pop() {
                members.push(f);
                for k in 0..3 {
                    let h = 3 * f + k;
                    if blocked(self.halfedge_edge[h]) {
                        continue;
                    }
                    if let Some(t) = self.twin[h] {
                        let g = t / 3;
                        if label[g] == usize::MAX {
                            label[g] = id;
                            stack.push(g);
                        }
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    /// Returns a copy with positions multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> TriMesh {
        self.with_positions(self.positions.iter().map(|p| scale(*p, factor)).collect())
    }

    /// Same connectivity with new positions.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> TriMesh {
        assert_eq!(positions.len(), self.positions.len());
        TriMesh { positions, ..self.clone() }
    }

    fn first_pinched_vertex(&self) -> Option<usize> {
        let (_, _, origin) = split_fans(&self.positions, &self.triangles, |_, _| false);
        let mut count = vec![0usize; self.num_vertices()];
        for &o in &origin {
            count[o] += 1;
        }
        count.iter().position(|&c| c > 1)
    }
}

fn count_faces_on_edge(triangles: &[[usize; 3]], a: usize, b: usize) -> usize {
    triangles
        .iter()
        .filter(|t| {
            (0..3).any(|k| {
                let (x, y) = (t[k], t[(k + 1) % 3]);
                (x, y) == (a, b) || (x, y) == (b, a)
            })
        })
        .count()
}

/// Groups the corners around each vertex into fans connected across edges
/// that are shared by exactly two faces and not `cut`. Each fan becomes its
/// own vertex: the fan containing the smallest face keeps the original index,
/// further fans are appended in order of (vertex, smallest face). Unreferenced
/// vertices are dropped and indices compacted.
pub(crate) fn split_fans(
    positions: &[Vec3],
    triangles: &[[usize; 3]],
    cut: impl Fn(usize, usize) -> bool,
) -> (Vec<Vec3>, Vec<[usize; 3]>, Vec<usize>) {
    let nc = triangles.len() * 3;
    let mut uf = UnionFind::new(nc);
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (f, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }
    let corner = |f: usize, v: usize| -> usize {
        let k = triangles[f].iter().position(|&x| x == v).expect("vertex in face");
        3 * f + k
    };
    let mut keys: Vec<_> = edge_faces.keys().copied().collect();
    keys.sort_unstable();
    for (a, b) in keys {
        let faces = &edge_faces[&(a, b)];
        if faces.len() != 2 || cut(a, b) {
            continue;
        }
        let (f, g) = (faces[0], faces[1]);
        uf.union(corner(f, a), corner(g, a));
        uf.union(corner(f, b), corner(g, b));
    }

    // Per vertex, fans keyed by their root, ordered by smallest corner.
    let mut fans: Vec<Vec<usize>> = vec![Vec::new(); positions.len()];
    let mut root_first: HashMap<usize, usize> = HashMap::new();
    for c in 0..nc {
        let r = uf.find(c);
        if let std::collections::hash_map::Entry::Vacant(e) = root_first.entry(r) {
            e.insert(c);
            fans[triangles[c / 3][c % 3]].push(r);
        }
    }
    let mut new_index_of_root: HashMap<usize, usize> = HashMap::new();
    let mut origin = Vec::new();
    // First pass: primary fans keep their relative order.
    for (v, roots) in fans.iter().enumerate() {
        if let Some(&r) = roots.first() {
            new_index_of_root.insert(r, origin.len());
            origin.push(v);
        }
    }
    for (v, roots) in fans.iter().enumerate() {
        for &r in roots.iter().skip(1) {
            new_index_of_root.insert(r, origin.len());
            origin.push(v);
        }
    }
    let new_positions = origin.iter().map(|&v| positions[v]).collect();
    let new_triangles = triangles
        .iter()
        .enumerate()
        .map(|(f, _)| {
            let mut out = [0; 3];
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = new_index_of_root[&uf.find(3 * f + k)];
            }
            out
        })
        .collect();
    (new_positions, new_triangles, origin)
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    /// Keeps the smaller root so representatives are deterministic.
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}
pub(crate) fn lerp(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s, a[2] + (b[2] - a[2]) * s]
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tetrahedron() -> TriMesh {
        TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn tetrahedron_counts() {
        let m = tetrahedron();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_faces()), (4, 6, 4));
        let t = m.topology();
        assert_eq!((t.euler, t.genus, t.boundary_loops.len()), (2, 0, 0));
        assert!(m.is_closed());
    }

    #[test]
    fn single_triangle_boundary() {
        let m = TriMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]])
            .unwrap();
        let t = m.topology();
        assert_eq!(t.boundary_loops, vec![vec![0, 1, 2]]);
        assert_eq!(t.genus, 0);
    }

    #[test]
    fn three_faces_on_edge_rejected() {
        let p = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let err = TriMesh::new(p, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifold(_)), "{err:?}");
    }

    #[test]
    fn flipped_neighbour_rejected() {
        let p = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]];
        let err = TriMesh::new(p, vec![[0, 1, 2], [0, 1, 3]]).unwrap_err();
        assert_eq!(err, MeshError::NonOrientable(0, 1));
    }

    #[test]
    fn pinched_vertex_rejected_then_split() {
        // Two triangles sharing only vertex 0.
        let p = vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [-1.0, -1.0, 0.0]];
        let tris = vec![[0, 1, 2], [0, 3, 4]];
        assert!(TriMesh::new(p.clone(), tris.clone()).is_err());
        let (m, origin) = TriMesh::new_splitting_pinches(p, tris).unwrap();
        assert_eq!(m.num_vertices(), 6);
        assert_eq!(origin[5], 0);
        assert_eq!(m.topology().boundary_loops.len(), 2);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(TriMesh::new(vec![], vec![]).unwrap_err(), MeshError::EmptyMesh);
    }
}

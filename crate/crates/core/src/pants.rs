//! Admissible curve sets, cutting a surface along them, and the resulting
//! decomposition graph.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{DecompositionGraph, GraphEdge};
use crate::mesh::{split_along_edges, CurvePath, MeshError, Slice, TriMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PantsError {
    #[error("no curves given")]
    NoCurves,
    #[error("{curves} curves but {heights} heights")]
    HeightCountMismatch { curves: usize, heights: usize },
    #[error("height {1} of curve {0} is not positive")]
    NonPositiveHeight(usize, f64),
    #[error("curve {0} is not closed")]
    CurveNotClosed(usize),
    #[error("curve {0} is not simple: vertex {1} repeats")]
    CurveNotSimple(usize, usize),
    #[error("curve {curve} does not lie on the mesh: {source}")]
    CurveNotOnMesh { curve: usize, source: MeshError },
    #[error("curve {0} runs along the mesh boundary")]
    CurveOnBoundary(usize),
    #[error("curves {0} and {1} share vertex {2}")]
    CurvesIntersect(usize, usize, usize),
    #[error("cut component {component} has Euler characteristic {euler}; some curve is inessential or parallel to another")]
    InessentialCurve { component: usize, euler: i64 },
    #[error("decomposition graph is disconnected")]
    DisconnectedGraph,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Validated curves with their prescribed heights.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleCurveSet {
    pub curves: Vec<CurvePath>,
    pub heights: Vec<f64>,
}

impl AdmissibleCurveSet {
    pub fn len(&self) -> usize {
        self.curves.len()
    }
    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
    /// Curve index of every mesh vertex lying on a curve.
    pub fn vertex_curves(&self, num_vertices: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; num_vertices];
        for (k, c) in self.curves.iter().enumerate() {
            for &v in &c.vertices {
                out[v] = Some(k);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// The copy bordering the faces to the left of the curve's direction.
    Left,
    Right,
}

/// One side of a cut curve as it appears on a component.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCopy {
    pub curve: usize,
    pub side: Side,
    /// Cut-mesh vertices, aligned with the curve's vertex list.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Face ids, shared by the input and the cut mesh.
    pub faces: Vec<usize>,
    /// Cut-mesh vertices used by the faces, ascending.
    pub vertices: Vec<usize>,
    pub euler: i64,
    pub copies: Vec<BoundaryCopy>,
}

#[derive(Debug, Clone)]
pub struct CutSurface {
    pub slice: Slice,
    pub components: Vec<Component>,
    pub face_component: Vec<usize>,
}

impl CutSurface {
    /// Component holding a cut-mesh vertex.
    pub fn vertex_component(&self, v: usize) -> usize {
        let f = self
            .slice
            .mesh
            .triangles()
            .iter()
            .position(|t| t.contains(&v))
            .expect("every vertex lies on a face");
        self.face_component[f]
    }

    /// Component per cut-mesh vertex.
    pub fn vertex_components(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.slice.mesh.num_vertices()];
        for (f, t) in self.slice.mesh.triangles().iter().enumerate() {
            for &v in t {
                out[v] = self.face_component[f];
            }
        }
        out
    }
}

fn curve_edges(mesh: &TriMesh, set: &[CurvePath]) -> Vec<usize> {
    set.iter()
        .flat_map(|c| c.segments().map(|(a, b)| mesh.edge_id(a, b).expect("curve edges checked")))
        .collect()
}

/// Checks curves and heights, then cuts and inspects every component.
pub fn validate_curves(
    mesh: &TriMesh,
    curves: Vec<CurvePath>,
    heights: Vec<f64>,
) -> Result<AdmissibleCurveSet, PantsError> {
    if curves.is_empty() {
        return Err(PantsError::NoCurves);
    }
    if curves.len() != heights.len() {
        return Err(PantsError::HeightCountMismatch { curves: curves.len(), heights: heights.len() });
    }
    for (k, &h) in heights.iter().enumerate() {
        if !(h > 0.0 && h.is_finite()) {
            return Err(PantsError::NonPositiveHeight(k, h));
        }
    }
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (k, c) in curves.iter().enumerate() {
        if !c.closed {
            return Err(PantsError::CurveNotClosed(k));
        }
        match c.check_embedded(mesh) {
            Ok(()) => {}
            Err(MeshError::CurveNotEmbedded(v)) => return Err(PantsError::CurveNotSimple(k, v)),
            Err(source) => return Err(PantsError::CurveNotOnMesh { curve: k, source }),
        }
        for (a, b) in c.segments() {
            let e = mesh.edge_id(a, b).expect("checked");
            if mesh.edges()[e].is_boundary() {
                return Err(PantsError::CurveOnBoundary(k));
            }
        }
        for &v in &c.vertices {
            if let Some(&j) = owner.get(&v) {
                return Err(PantsError::CurvesIntersect(j, k, v));
            }
            owner.insert(v, k);
        }
    }
    let set = AdmissibleCurveSet { curves, heights };
    let cut = cut_surface(mesh, &set)?;
    let torus_meridian = mesh.is_closed() && mesh.topology().genus == 1 && set.len() == 1;
    for (i, c) in cut.components.iter().enumerate() {
        if c.euler > 0 || (c.euler == 0 && !torus_meridian) {
            return Err(PantsError::InessentialCurve { component: i, euler: c.euler });
        }
    }
    Ok(set)
}

/// Cuts along every curve. Components are ordered by their smallest face.
pub fn cut_surface(mesh: &TriMesh, set: &AdmissibleCurveSet) -> Result<CutSurface, PantsError> {
    let slice = split_along_edges(mesh, &curve_edges(mesh, &set.curves))?;
    let cut = &slice.mesh;
    let groups = cut.connected_components();
    let mut face_component = vec![0; cut.num_faces()];
    for (i, g) in groups.iter().enumerate() {
        for &f in g {
            face_component[f] = i;
        }
    }
    let mut components: Vec<Component> = groups
        .into_iter()
        .map(|faces| {
            let mut vertices: Vec<usize> = faces.iter().flat_map(|&f| cut.triangles()[f]).collect();
            vertices.sort_unstable();
            vertices.dedup();
            let mut edges: Vec<(usize, usize)> = faces
                .iter()
                .flat_map(|&f| {
                    let t = cut.triangles()[f];
                    (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3])))
                })
                .collect();
            edges.sort_unstable();
            edges.dedup();
            let euler = vertices.len() as i64 - edges.len() as i64 + faces.len() as i64;
            Component { faces, vertices, euler, copies: Vec::new() }
        })
        .collect();

    let corner = |f: usize, original: usize| -> usize {
        let orig = mesh.triangles()[f];
        let k = orig.iter().position(|&x| x == original).expect("vertex in face");
        cut.triangles()[f][k]
    };
    for (k, curve) in set.curves.iter().enumerate() {
        let n = curve.vertices.len();
        let mut sides = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut faces = [0, 0];
        for (i, (a, b)) in curve.segments().enumerate() {
            let h = mesh.halfedge(a, b).expect("interior curve edge");
            let t = mesh.twin(h).expect("interior curve edge");
            if i == 0 {
                faces = [h / 3, t / 3];
            }
            sides[0].push(corner(h / 3, a));
            sides[1].push(corner(t / 3, a));
        }
        let [left, right] = sides;
        components[face_component[faces[0]]].copies.push(BoundaryCopy { curve: k, side: Side::Left, vertices: left });
        components[face_component[faces[1]]].copies.push(BoundaryCopy { curve: k, side: Side::Right, vertices: right });
    }
    Ok(CutSurface { slice, components, face_component })
}

/// One node per component; curve `k` becomes edge `k` from the component
/// holding its left copy (parameter 0) to the one holding its right copy.
pub fn build_decomposition_graph(cut: &CutSurface, set: &AdmissibleCurveSet) -> Result<DecompositionGraph, PantsError> {
    let mut ends = vec![[usize::MAX; 2]; set.len()];
    for (i, c) in cut.components.iter().enumerate() {
        for copy in &c.copies {
            let slot = match copy.side {
                Side::Left => 0,
                Side::Right => 1,
            };
            ends[copy.curve][slot] = i;
        }
    }
    let graph = DecompositionGraph {
        num_nodes: cut.components.len(),
        edges: ends.into_iter().zip(&set.heights).map(|(ends, &weight)| GraphEdge { ends, weight }).collect(),
    };
    if !graph.is_connected() {
        return Err(PantsError::DisconnectedGraph);
    }
    Ok(graph)
}

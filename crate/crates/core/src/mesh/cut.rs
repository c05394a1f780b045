use std::collections::HashSet;

use super::{split_fans, MeshError, TriMesh};

/// A vertex path on a mesh; `closed` joins the last vertex back to the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvePath {
    pub vertices: Vec<usize>,
    pub closed: bool,
}

impl CurvePath {
    pub fn closed(vertices: Vec<usize>) -> Self {
        CurvePath { vertices, closed: true }
    }
    pub fn open(vertices: Vec<usize>) -> Self {
        CurvePath { vertices, closed: false }
    }

    /// Consecutive vertex pairs, including the closing pair.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.vertices.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Checks the path is simple and runs along mesh edges.
    pub fn check_embedded(&self, mesh: &TriMesh) -> Result<(), MeshError> {
        let mut seen = HashSet::new();
        for &v in &self.vertices {
            if v >= mesh.num_vertices() {
                return Err(MeshError::Parse(format!("curve vertex {v} out of range")));
            }
            if !seen.insert(v) {
                return Err(MeshError::CurveNotEmbedded(v));
            }
        }
        if self.vertices.len() < 2 || (self.closed && self.vertices.len() < 3) {
            return Err(MeshError::Parse(format!(
                "curve needs at least {} vertices",
                if self.closed { 3 } else { 2 }
            )));
        }
        for (a, b) in self.segments() {
            if mesh.edge_id(a, b).is_none() {
                return Err(MeshError::EdgeNotInMesh(a, b));
            }
        }
        Ok(())
    }

    pub fn length(&self, mesh: &TriMesh) -> f64 {
        self.segments().map(|(a, b)| mesh.edge_length(a, b)).sum()
    }
}

/// Result of cutting a mesh: faces keep their indices, vertices along the
/// cut are duplicated.
#[derive(Debug, Clone)]
pub struct Slice {
    pub mesh: TriMesh,
    /// Input vertex for every output vertex.
    pub origin: Vec<usize>,
}

/// Cuts along a set of mesh edges. Around every vertex the faces are grouped
/// into fans that stay connected without crossing a cut edge; each extra fan
/// gets a new vertex appended after the originals.
pub fn split_along_edges(mesh: &TriMesh, cut_edges: &[usize]) -> Result<Slice, MeshError> {
    let cut: HashSet<(usize, usize)> = cut_edges
        .iter()
        .map(|&e| {
            let [a, b] = mesh.edges()[e].vertices;
            (a, b)
        })
        .collect();
    let (positions, triangles, origin) =
        split_fans(mesh.positions(), mesh.triangles(), |a, b| cut.contains(&(a.min(b), a.max(b))));
    let mesh = TriMesh::new(positions, triangles)?;
    Ok(Slice { mesh, origin })
}

/// Slices the mesh open along a simple path or cycle of edges.
pub fn slice_along_curve(mesh: &TriMesh, curve: &CurvePath) -> Result<Slice, MeshError> {
    curve.check_embedded(mesh)?;
    let edges: Vec<usize> =
        curve.segments().map(|(a, b)| mesh.edge_id(a, b).expect("checked")).collect();
    split_along_edges(mesh, &edges)
}

#[derive(Debug, Clone)]
pub struct DoubleCover {
    pub mesh: TriMesh,
    /// Mirror partner of every vertex; boundary vertices map to themselves.
    pub involution: Vec<usize>,
    /// The original sheet, with interior edges between two boundary
    /// vertices split at their midpoints. Its vertex and face ids are kept
    /// in the doubled mesh.
    pub sheet: TriMesh,
    /// Faces `0..n` are the original sheet, `n..2n` the mirrored one.
    pub faces_per_sheet: usize,
    /// Boundary loops of the input, which become closed curves fixed by the involution.
    pub seams: Vec<Vec<usize>>,
}

/// Splits every interior edge whose endpoints both lie on the boundary, so
/// that its mirror image does not coincide with it. New vertices are
/// appended; untouched faces keep their ids.
fn split_chords(mesh: &TriMesh) -> Result<TriMesh, MeshError> {
    let chords: Vec<usize> = (0..mesh.num_edges())
        .filter(|&e| {
            let edge = &mesh.edges()[e];
            !edge.is_boundary() && edge.vertices.iter().all(|&v| mesh.is_boundary_vertex(v))
        })
        .collect();
    if chords.is_empty() {
        return Ok(mesh.clone());
    }
    let mut positions = mesh.positions().to_vec();
    let mut mid = std::collections::HashMap::new();
    for &e in &chords {
        let [a, b] = mesh.edges()[e].vertices;
        mid.insert(e, positions.len());
        positions.push(super::lerp(mesh.position(a), mesh.position(b), 0.5));
    }
    let mut triangles = mesh.triangles().to_vec();
    for &e in &chords {
        let m = mid[&e];
        for h in mesh.edges()[e].halfedges.iter().flatten() {
            // Faces may already have been split by an earlier chord; find
            // the current piece holding this halfedge.
            let (a, b) = mesh.halfedge_vertices(*h);
            let f = triangles
                .iter()
                .position(|t| (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b))
                .expect("halfedge survives earlier splits");
            let t = triangles[f];
            let k = (0..3).find(|&k| t[k] == a).expect("corner");
            let c = t[(k + 2) % 3];
            triangles[f] = [a, m, c];
            triangles.push([m, b, c]);
        }
    }
    TriMesh::new(positions, triangles)
}

/// Glues a mirrored copy of a bordered mesh along all boundary loops.
pub fn double_cover(mesh: &TriMesh) -> Result<DoubleCover, MeshError> {
    if mesh.is_closed() {
        return Err(MeshError::AlreadyClosed);
    }
    let sheet = split_chords(mesh)?;
    let nv = sheet.num_vertices();
    let mut mirror = vec![usize::MAX; nv];
    let mut positions = sheet.positions().to_vec();
    for (v, m) in mirror.iter_mut().enumerate() {
        if sheet.is_boundary_vertex(v) {
            *m = v;
        } else {
            *m = positions.len();
            positions.push(sheet.position(v));
        }
    }
    let mut triangles = sheet.triangles().to_vec();
    triangles.extend(sheet.triangles().iter().map(|&[a, b, c]| [mirror[a], mirror[c], mirror[b]]));
    let mut involution: Vec<usize> = (0..positions.len()).collect();
    for v in 0..nv {
        involution[v] = mirror[v];
        involution[mirror[v]] = v;
    }
    let seams = sheet.boundary_loops();
    let doubled = TriMesh::new(positions, triangles)?;
    let faces_per_sheet = sheet.num_faces();
    Ok(DoubleCover { mesh: doubled, involution, sheet, faces_per_sheet, seams })
}

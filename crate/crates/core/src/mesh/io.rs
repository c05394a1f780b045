//! ASCII OFF / OBJ / PLY readers and writers, plus the curve file format.
//!
//! Curve files hold one curve per line: `closed` or `open`, then either
//! whitespace-separated vertex indices or the keyword `xyz` followed by
//! point coordinates (snapped onto the mesh when loaded). `#` starts a comment.

use std::collections::{BinaryHeap, HashSet};
use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use super::{norm, sub, CurvePath, MeshError, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "off" => Ok(MeshFormat::Off),
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            _ => Err(MeshError::Parse(format!("unknown mesh extension on {}", path.display()))),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> MeshError {
    MeshError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let text = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let text = String::from_utf8(text)
        .map_err(|_| MeshError::Parse(format!("{} is not ASCII text", path.display())))?;
    parse_mesh(&text, format)
}

/// Loads a mesh, picking the format from the file extension.
pub fn load_mesh_auto(path: &Path) -> Result<TriMesh, MeshError> {
    load_mesh(path, MeshFormat::from_path(path)?)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let (positions, faces) = match format {
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::Obj => parse_obj(text)?,
        MeshFormat::Ply => parse_ply(text)?,
    };
    TriMesh::new(positions, faces)
}

fn perr(msg: impl Into<String>) -> MeshError {
    MeshError::Parse(msg.into())
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| perr(format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(format!("bad {what}: {tok:?}")))
}

/// Fan-triangulates a polygon.
fn push_polygon(faces: &mut Vec<[usize; 3]>, poly: &[usize]) -> Result<(), MeshError> {
    if poly.len() < 3 {
        return Err(perr(format!("face with {} vertices", poly.len())));
    }
    for i in 1..poly.len() - 1 {
        faces.push([poly[0], poly[i], poly[i + 1]]);
    }
    Ok(())
}

type Parsed = (Vec<Vec3>, Vec<[usize; 3]>);

fn parse_off(text: &str) -> Result<Parsed, MeshError> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    match tokens.next() {
        Some("OFF") => {}
        other => return Err(perr(format!("expected OFF header, found {other:?}"))),
    }
    let nv: usize = num(tokens.next(), "vertex count")?;
    let nf: usize = num(tokens.next(), "face count")?;
    let _ne: usize = num(tokens.next(), "edge count")?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        positions.push([
            num(tokens.next(), "x")?,
            num(tokens.next(), "y")?,
            num(tokens.next(), "z")?,
        ]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k: usize = num(tokens.next(), "face size")?;
        let poly = (0..k).map(|_| num(tokens.next(), "face index")).collect::<Result<Vec<usize>, _>>()?;
        push_polygon(&mut faces, &poly)?;
    }
    Ok((positions, faces))
}

fn parse_obj(text: &str) -> Result<Parsed, MeshError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => positions.push([num(it.next(), "x")?, num(it.next(), "y")?, num(it.next(), "z")?]),
            Some("f") => {
                let poly = it
                    .map(|tok| {
                        let idx: i64 = num(tok.split('/').next(), "face index")?;
                        let resolved = if idx < 0 { positions.len() as i64 + idx } else { idx - 1 };
                        if resolved < 0 {
                            return Err(perr(format!("line {}: bad index {idx}", line_no + 1)));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                push_polygon(&mut faces, &poly)?;
            }
            _ => {}
        }
    }
    Ok((positions, faces))
}

fn parse_ply(text: &str) -> Result<Parsed, MeshError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(perr("missing ply magic"));
    }
    let mut nv = None;
    let mut nf = None;
    let mut current = "";
    let mut vertex_props: Vec<String> = Vec::new();
    loop {
        let line = lines.next().ok_or_else(|| perr("unterminated ply header"))?.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("format") => {
                if it.next() != Some("ascii") {
                    return Err(perr("only ascii ply is supported"));
                }
            }
            Some("element") => {
                let name = it.next().unwrap_or("");
                let count: usize = num(it.next(), "element count")?;
                match name {
                    "vertex" => {
                        nv = Some(count);
                        current = "vertex";
                    }
                    "face" => {
                        nf = Some(count);
                        current = "face";
                    }
                    _ => {
                        if count > 0 {
                            return Err(perr(format!("unsupported element {name}")));
                        }
                        current = "";
                    }
                }
            }
            Some("property") if current == "vertex" => {
                vertex_props.push(it.last().unwrap_or("").to_string());
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    let nv = nv.ok_or_else(|| perr("ply without vertex element"))?;
    let nf = nf.unwrap_or(0);
    let pos_of = |name: &str| {
        vertex_props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| perr(format!("ply vertex lacks property {name}")))
    };
    let (ix, iy, iz) = (pos_of("x")?, pos_of("y")?, pos_of("z")?);
    let mut body = lines.filter(|l| !l.trim().is_empty());
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = body.next().ok_or_else(|| perr("truncated vertex list"))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| perr(format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() < vertex_props.len() {
            return Err(perr("short vertex line"));
        }
        positions.push([vals[ix], vals[iy], vals[iz]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = body.next().ok_or_else(|| perr("truncated face list"))?;
        let mut it = line.split_whitespace();
        let k: usize = num(it.next(), "face size")?;
        let poly = (0..k).map(|_| num(it.next(), "face index")).collect::<Result<Vec<usize>, _>>()?;
        push_polygon(&mut faces, &poly)?;
    }
    Ok((positions, faces))
}

/// Serializes with `{:?}` floats so that reading back is exact.
pub fn write_mesh(mesh: &TriMesh, format: MeshFormat) -> String {
    let mut s = String::new();
    let p = mesh.positions();
    let t = mesh.triangles();
    match format {
        MeshFormat::Off => {
            let _ = writeln!(s, "OFF\n{} {} {}", p.len(), t.len(), mesh.num_edges());
            for v in p {
                let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
            }
            for f in t {
                let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
            }
        }
        MeshFormat::Obj => {
            for v in p {
                let _ = writeln!(s, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
            }
            for f in t {
                let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
        }
        MeshFormat::Ply => {
            let _ = write!(
                s,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\n\
                 property double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
                p.len(),
                t.len()
            );
            for v in p {
                let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
            }
            for f in t {
                let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
            }
        }
    }
    s
}

pub fn save_mesh(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let format = MeshFormat::from_path(path)?;
    std::fs::write(path, write_mesh(mesh, format)).map_err(|e| io_err(path, e))
}

/// A curve as written in a curve file, before being placed on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum RawCurve {
    Vertices(CurvePath),
    Polyline { points: Vec<Vec3>, closed: bool },
}

impl RawCurve {
    /// Resolves to a vertex path, snapping polylines onto `mesh`.
    pub fn resolve(&self, mesh: &TriMesh) -> Result<CurvePath, MeshError> {
        match self {
            RawCurve::Vertices(c) => Ok(c.clone()),
            RawCurve::Polyline { points, closed } => snap_polyline(mesh, points, *closed),
        }
    }
}

pub fn parse_curves(text: &str) -> Result<Vec<RawCurve>, MeshError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let closed = match it.next() {
            Some("closed") => true,
            Some("open") => false,
            other => return Err(perr(format!("curve line {}: expected open/closed, got {other:?}", i + 1))),
        };
        let rest: Vec<&str> = it.collect();
        if rest.first() == Some(&"xyz") {
            let vals = rest[1..]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| perr(format!("curve line {}: bad {t:?}", i + 1))))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() % 3 != 0 || vals.is_empty() {
                return Err(perr(format!("curve line {}: coordinates not in triples", i + 1)));
            }
            let points = vals.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            out.push(RawCurve::Polyline { points, closed });
        } else {
            let vertices = rest
                .iter()
                .map(|t| t.parse::<usize>().map_err(|_| perr(format!("curve line {}: bad index {t:?}", i + 1))))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(RawCurve::Vertices(CurvePath { vertices, closed }));
        }
    }
    Ok(out)
}

pub fn load_curves(path: &Path) -> Result<Vec<RawCurve>, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_curves(&text)
}

pub fn write_curves(curves: &[CurvePath]) -> String {
    let mut s = String::new();
    for c in curves {
        s.push_str(if c.closed { "closed" } else { "open" });
        for v in &c.vertices {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    vertex: usize,
}
impl Eq for Frontier {}
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest edge path from `from` to `to` (Dijkstra on edge lengths). Among
/// equal-length routes the predecessor with the smaller index wins.
pub fn shortest_edge_path(
    mesh: &TriMesh,
    from: usize,
    to: usize,
    forbidden: &HashSet<usize>,
) -> Option<Vec<usize>> {
    let n = mesh.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Frontier { dist: 0.0, vertex: from });
    while let Some(Frontier { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if v == to {
            break;
        }
        for &w in mesh.neighbors(v) {
            if forbidden.contains(&w) && w != to {
                continue;
            }
            let nd = d + mesh.edge_length(v, w);
            if nd < dist[w] || (nd == dist[w] && v < prev[w]) {
                dist[w] = nd;
                prev[w] = v;
                heap.push(Frontier { dist: nd, vertex: w });
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut v = to;
    while v != from {
        v = prev[v];
        path.push(v);
    }
    path.reverse();
    Some(path)
}

fn nearest_vertex(mesh: &TriMesh, p: Vec3) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, q) in mesh.positions().iter().enumerate() {
        let d = norm(sub(*q, p));
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Snaps polyline points to their nearest mesh vertices and joins consecutive
/// snapped vertices with shortest edge paths. Already-used vertices are
/// avoided so the result stays simple.
pub fn snap_polyline(mesh: &TriMesh, points: &[Vec3], closed: bool) -> Result<CurvePath, MeshError> {
    let mut anchors: Vec<usize> = points.iter().map(|&p| nearest_vertex(mesh, p)).collect();
    anchors.dedup();
    if closed && anchors.len() > 1 && anchors.first() == anchors.last() {
        anchors.pop();
    }
    if anchors.len() < 2 {
        return Err(perr("polyline snaps to fewer than 2 distinct vertices"));
    }
    let mut path = vec![anchors[0]];
    let mut used: HashSet<usize> = HashSet::from([anchors[0]]);
    let mut legs: Vec<(usize, usize)> = anchors.windows(2).map(|w| (w[0], w[1])).collect();
    if closed {
        legs.push((*anchors.last().unwrap(), anchors[0]));
    }
    let last_leg = legs.len() - 1;
    for (i, (a, b)) in legs.into_iter().enumerate() {
        let mut forbidden = used.clone();
        forbidden.remove(&a);
        let closing = closed && i == last_leg;
        if closing {
            forbidden.remove(&b);
        }
        let leg = shortest_edge_path(mesh, a, b, &forbidden)
            .ok_or_else(|| perr(format!("no simple edge path between vertices {a} and {b}")))?;
        for &v in &leg[1..] {
            if closing && v == b {
                break;
            }
            if !used.insert(v) {
                return Err(MeshError::CurveNotEmbedded(v));
            }
            path.push(v);
        }
    }
    let curve = CurvePath { vertices: path, closed };
    curve.check_embedded(mesh)?;
    Ok(curve)
}

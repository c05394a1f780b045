//! Cylinders of the horizontal foliation: slicing a surface along the
//! preimages of graph nodes, circumferences, and flat coordinates.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphPoint, MetricGraph};
use crate::mesh::{
    cross, dirichlet_energy, dot, lerp, norm, split_along_edges, sub, surface_area, MeshError, TriMesh, Vec3,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FoliationError {
    #[error("cylinder {0} received no triangles")]
    DegenerateCylinder(usize),
    #[error("cylinder {edge} is not an annulus: euler {euler}, {boundaries} boundary loops")]
    NotAnAnnulus { edge: usize, euler: i64, boundaries: usize },
    #[error("face {0} spans more than one node star; the map is too coarse to slice")]
    FaceTooLong(usize),
    #[error("cylinder {0} has non-positive circumference {1}")]
    NonPositiveCircumference(usize, f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Where a cylinder vertex comes from on the sliced surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SourcePoint {
    Vertex(usize),
    /// Point on the mesh edge between two vertices (smaller index first).
    OnEdge(usize, usize),
    /// Interior point of a face where three cylinders meet.
    InFace(usize),
}

#[derive(Debug, Clone)]
pub struct Cylinder {
    /// Graph edge, equal to the curve index.
    pub edge: usize,
    pub height: f64,
    pub mesh: TriMesh,
    /// Pullback of the edge parameter, in `[0, height]`.
    pub u: Vec<f64>,
    pub sources: Vec<SourcePoint>,
}

impl Cylinder {
    pub fn area(&self) -> f64 {
        surface_area(&self.mesh)
    }
}

#[derive(Debug, Clone, Copy)]
struct Rep {
    ray: Option<(usize, usize)>,
    r: f64,
}

fn star_reps(g: &MetricGraph, node: usize, p: GraphPoint) -> Vec<Rep> {
    let mut out = Vec::new();
    match p {
        GraphPoint::Node(m) if m == node => out.push(Rep { ray: None, r: 0.0 }),
        GraphPoint::Node(m) => {
            for &e in g.incident(node) {
                let ed = g.edge(e);
                for end in 0..2 {
                    if ed.ends[end] == node && ed.ends[1 - end] == m {
                        out.push(Rep { ray: Some((e, end)), r: ed.weight });
                    }
                }
            }
        }
        GraphPoint::Edge { edge, t } => {
            let ed = g.edge(edge);
            if ed.ends[0] == node {
                out.push(Rep { ray: Some((edge, 0)), r: t });
            }
            if ed.ends[1] == node {
                out.push(Rep { ray: Some((edge, 1)), r: ed.weight - t });
            }
        }
    }
    out
}

fn star_distance(a: Rep, b: Rep) -> f64 {
    match (a.ray, b.ray) {
        (Some(x), Some(y)) if x == y => (a.r - b.r).abs(),
        _ => a.r + b.r,
    }
}

/// Node and per-corner star coordinates that reproduce all three pairwise
/// graph distances.
fn locate(g: &MetricGraph, images: [GraphPoint; 3], tol: f64) -> Option<(usize, [Rep; 3])> {
    let d = [g.distance(images[0], images[1]), g.distance(images[1], images[2]), g.distance(images[2], images[0])];
    for node in 0..g.num_nodes() {
        let reps: Vec<Vec<Rep>> = images.iter().map(|&p| star_reps(g, node, p)).collect();
        for &a in &reps[0] {
            for &b in &reps[1] {
                for &c in &reps[2] {
                    if (star_distance(a, b) - d[0]).abs() <= tol
                        && (star_distance(b, c) - d[1]).abs() <= tol
                        && (star_distance(c, a) - d[2]).abs() <= tol
                    {
                        return Some((node, [a, b, c]));
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy)]
struct Corner {
    key: SourcePoint,
    pos: Vec3,
    r: f64,
}

#[derive(Default)]
struct Builder {
    index: HashMap<(SourcePoint, bool), usize>,
    positions: Vec<Vec3>,
    u: Vec<f64>,
    sources: Vec<SourcePoint>,
    triangles: Vec<[usize; 3]>,
}

impl Builder {
    fn vertex(&mut self, c: Corner, end: usize, w: f64) -> usize {
        let u = if end == 0 { c.r } else { w - c.r };
        let key = (c.key, u >= w);
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.positions.len();
        self.index.insert(key, i);
        self.positions.push(c.pos);
        self.u.push(u.clamp(0.0, w));
        self.sources.push(c.key);
        i
    }

    fn polygon(&mut self, corners: &[Corner], end: usize, w: f64) {
        if corners.len() < 3 {
            return;
        }
        let ids: Vec<usize> = corners.iter().map(|&c| self.vertex(c, end, w)).collect();
        for k in 1..ids.len() - 1 {
            let t = [ids[0], ids[k], ids[k + 1]];
            if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                self.triangles.push(t);
            }
        }
    }
}

fn crossing(mesh: &TriMesh, a: (usize, f64), b: (usize, f64)) -> Corner {
    let ((lo, rlo), (hi, rhi)) = if a.0 < b.0 { (a, b) } else { (b, a) };
    let s = rlo / (rlo + rhi);
    Corner { key: SourcePoint::OnEdge(lo, hi), pos: lerp(mesh.position(lo), mesh.position(hi), s), r: 0.0 }
}

/// Splits the surface into one cylinder per graph edge. A face whose images
/// lie on several rays of a node star is cut where the linearly
/// interpolated star coordinate passes through the node.
pub fn slice_cylinders(mesh: &TriMesh, points: &[GraphPoint], g: &MetricGraph) -> Result<Vec<Cylinder>, FoliationError> {
    let max_w = (0..g.num_edges()).map(|e| g.edge(e).weight).fold(0.0, f64::max);
    let tol = 1e-9 * max_w;
    let mut builders: Vec<Builder> = (0..g.num_edges()).map(|_| Builder::default()).collect();
    for (f, &tri) in mesh.triangles().iter().enumerate() {
        let images = tri.map(|v| points[v]);
        let (node, reps) = locate(g, images, tol).ok_or(FoliationError::FaceTooLong(f))?;
        let corners: [Corner; 3] =
            [0, 1, 2].map(|k| Corner { key: SourcePoint::Vertex(tri[k]), pos: mesh.position(tri[k]), r: reps[k].r });
        let mut rays: Vec<(usize, usize)> = Vec::new();
        for rep in &reps {
            if let Some(ray) = rep.ray {
                if !rays.contains(&ray) {
                    rays.push(ray);
                }
            }
        }
        match rays.len() {
            0 => {
                let e = *g.incident(node).iter().min().expect("connected graph");
                let end = if g.edge(e).ends[0] == node { 0 } else { 1 };
                builders[e].polygon(&corners, end, g.edge(e).weight);
            }
            1 => {
                let (e, end) = rays[0];
                builders[e].polygon(&corners, end, g.edge(e).weight);
            }
            2 => {
                let sign = |k: usize| match reps[k].ray {
                    None => 0.0,
                    Some(ray) if ray == rays[0] => reps[k].r,
                    Some(_) => -reps[k].r,
                };
                let gs = [sign(0), sign(1), sign(2)];
                let (mut pos, mut neg) = (Vec::new(), Vec::new());
                for k in 0..3 {
                    let j = (k + 1) % 3;
                    if gs[k] >= 0.0 {
                        pos.push(corners[k]);
                    }
                    if gs[k] <= 0.0 {
                        neg.push(corners[k]);
                    }
                    if gs[k] * gs[j] < 0.0 {
                        let c = crossing(mesh, (tri[k], reps[k].r), (tri[j], reps[j].r));
                        pos.push(c);
                        neg.push(c);
                    }
                }
                for (piece, ray, strict) in [(pos, rays[0], gs.iter().any(|&x| x > 0.0)), (neg, rays[1], gs.iter().any(|&x| x < 0.0))] {
                    if strict {
                        builders[ray.0].polygon(&piece, ray.1, g.edge(ray.0).weight);
                    }
                }
            }
            _ => {
                let cr: Vec<Corner> =
                    (0..3).map(|k| crossing(mesh, (tri[k], reps[k].r), (tri[(k + 1) % 3], reps[(k + 1) % 3].r))).collect();
                let mut centre = [0.0; 3];
                for c in &cr {
                    for i in 0..3 {
                        centre[i] += c.pos[i] / 3.0;
                    }
                }
                let mid = Corner { key: SourcePoint::InFace(f), pos: centre, r: 0.0 };
                for k in 0..3 {
                    let (e, end) = reps[k].ray.expect("three rays");
                    let piece = [corners[k], cr[k], mid, cr[(k + 2) % 3]];
                    builders[e].polygon(&piece, end, g.edge(e).weight);
                }
            }
        }
    }
    builders
        .into_iter()
        .enumerate()
        .map(|(e, b)| {
            if b.triangles.is_empty() {
                return Err(FoliationError::DegenerateCylinder(e));
            }
            let (cyl, origin) = TriMesh::new_splitting_pinches(b.positions, b.triangles)?;
            let t = cyl.topology();
            if t.euler != 0 || t.boundary_loops.len() != 2 {
                return Err(FoliationError::NotAnAnnulus { edge: e, euler: t.euler, boundaries: t.boundary_loops.len() });
            }
            Ok(Cylinder {
                edge: e,
                height: g.edge(e).weight,
                mesh: cyl,
                u: origin.iter().map(|&o| b.u[o]).collect(),
                sources: origin.iter().map(|&o| b.sources[o]).collect(),
            })
        })
        .collect()
}

/// `l = E(u) / h` with `E` the cotangent Dirichlet energy of the pullback.
pub fn circumference(cyl: &Cylinder) -> Result<f64, FoliationError> {
    let l = dirichlet_energy(&cyl.mesh, &cyl.u) / cyl.height;
    if l > 0.0 && l.is_finite() {
        Ok(l)
    } else {
        Err(FoliationError::NonPositiveCircumference(cyl.edge, l))
    }
}

/// Flat coordinates of a cylinder.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatCoords {
    pub u: Vec<f64>,
    /// In `[0, circumference)`.
    pub v: Vec<f64>,
    pub circumference: f64,
    /// Period of the integrated conjugate gradient before rescaling.
    pub raw_period: f64,
    /// Set when the raw period is more than 5% away from the circumference.
    pub period_mismatch: Option<f64>,
    /// Conjugate-gradient iterations used for the vertex coordinates.
    pub solver_iterations: usize,
}

/// Area and barycentric-coordinate gradients of a face, `None` if it has no area.
fn face_frame(mesh: &TriMesh, f: usize) -> Option<(f64, [Vec3; 3], Vec3)> {
    let [i, j, k] = mesh.triangles()[f];
    let (pi, pj, pk) = (mesh.position(i), mesh.position(j), mesh.position(k));
    let n = cross(sub(pj, pi), sub(pk, pi));
    let twice = norm(n);
    if twice <= f64::MIN_POSITIVE {
        return None;
    }
    let nh = [n[0] / twice, n[1] / twice, n[2] / twice];
    let g = [cross(nh, sub(pk, pj)), cross(nh, sub(pi, pk)), cross(nh, sub(pj, pi))].map(|e| e.map(|c| c / twice));
    Some((0.5 * twice, g, nh))
}

/// Cotangent weight per edge from faces with positive area.
fn edge_weights(mesh: &TriMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_edges()];
    for f in 0..mesh.num_faces() {
        if let Some((area, g, _)) = face_frame(mesh, f) {
            let t = mesh.triangles()[f];
            for a in 0..3 {
                let b = (a + 1) % 3;
                let e = mesh.edge_id(t[a], t[b]).expect("face edge");
                w[e] -= area * dot(g[a], g[b]);
            }
        }
    }
    w
}

/// Gauge vertex (smallest index on the `u = 0` boundary) and the edges of a
/// shortest hop path from it through the interior to the other boundary.
fn cut_path(cyl: &Cylinder) -> (usize, Vec<usize>) {
    let mesh = &cyl.mesh;
    let loops = mesh.boundary_loops();
    let mean_u = |l: &Vec<usize>| l.iter().map(|&v| cyl.u[v]).sum::<f64>() / l.len() as f64;
    let (low, high) = if mean_u(&loops[0]) <= mean_u(&loops[1]) { (0, 1) } else { (1, 0) };
    let gauge = *loops[low].iter().min().expect("nonempty loop");
    let mut on_high = vec![false; mesh.num_vertices()];
    for &v in &loops[high] {
        on_high[v] = true;
    }
    let mut prev = vec![usize::MAX; mesh.num_vertices()];
    prev[gauge] = gauge;
    let mut queue = VecDeque::from([gauge]);
    let mut end = gauge;
    while let Some(v) = queue.pop_front() {
        if on_high[v] {
            end = v;
            break;
        }
        for &w in mesh.neighbors(v) {
            if prev[w] == usize::MAX && (!mesh.is_boundary_vertex(w) || on_high[w]) {
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut path = Vec::new();
    let mut v = end;
    while v != gauge {
        path.push(mesh.edge_id(v, prev[v]).expect("path edge"));
        v = prev[v];
    }
    (gauge, path)
}

/// Preconditioned conjugate gradients for the stiffness system with the
/// `fixed` unknown held at zero.
fn solve_stiffness(
    diag: &[f64],
    off: &[(usize, usize, f64)],
    rhs: &[f64],
    fixed: usize,
    scale: f64,
) -> (Vec<f64>, usize) {
    let n = diag.len();
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            y[i] = diag[i] * x[i];
        }
        for &(i, j, k) in off {
            y[i] += k * x[j];
            y[j] += k * x[i];
        }
        y[fixed] = 0.0;
    };
    let precond: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    r[fixed] = 0.0;
    let norm_b = scale.max(f64::MIN_POSITIVE);
    if r.iter().all(|&v| v == 0.0) {
        return (x, 0);
    }
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n + 100;
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-11 * norm_b {
            return (x, it);
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, max_iter)
}

/// Flat coordinates `(u, v)` of a cylinder. The cylinder is cut from the
/// gauge vertex to the far boundary; the conjugate of `u` is integrated
/// over a spanning tree of dual edges using cotangent fluxes, which fixes
/// the period across the cut. Vertex values of `v` are then the
/// least-squares fit to the rotated gradient of `u` with that period,
/// rescaled so the period equals `circumference`.
pub fn flatten_cylinder(cyl: &Cylinder, circumference: f64) -> Result<FlatCoords, FoliationError> {
    let mesh = &cyl.mesh;
    let u = &cyl.u;
    let (gauge, path) = cut_path(cyl);
    let slice = split_along_edges(mesh, &path)?;
    let disk = &slice.mesh;
    let w = edge_weights(mesh);

    // Dual integration: crossing a -> b from its left face to its right face
    // changes the conjugate by -w_ab (u_b - u_a).
    let nf = mesh.num_faces();
    let mut dual = vec![f64::NAN; nf];
    dual[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(f) = queue.pop_front() {
        for k in 0..3 {
            let h = 3 * f + k;
            if let Some(t) = disk.twin(h) {
                let g = t / 3;
                if dual[g].is_nan() {
                    let (a, b) = mesh.halfedge_vertices(h);
                    dual[g] = dual[f] - w[mesh.halfedge_edge(h)] * (u[b] - u[a]);
                    queue.push_back(g);
                }
            }
        }
    }
    let mut jumps = Vec::new();
    for &e in &path {
        let [h0, h1] = mesh.edges()[e].halfedges;
        let (h0, h1) = (h0.expect("interior"), h1.expect("interior"));
        let (a, b) = mesh.halfedge_vertices(h0);
        jumps.push(dual[h1 / 3] - (dual[h0 / 3] - w[e] * (u[b] - u[a])));
    }
    let raw_period = jumps.iter().map(|j| j.abs()).sum::<f64>() / jumps.len().max(1) as f64;

    // Copies of the cut vertices: the one whose faces carry the larger dual
    // values sits on the far side of the period.
    let mut face_sum = vec![(0.0, 0usize); disk.num_vertices()];
    for (f, t) in disk.triangles().iter().enumerate() {
        for &dv in t {
            face_sum[dv].0 += dual[f];
            face_sum[dv].1 += 1;
        }
    }
    let mean = |dv: usize| face_sum[dv].0 / face_sum[dv].1 as f64;
    let mut copies: HashMap<usize, Vec<usize>> = HashMap::new();
    for (dv, &o) in slice.origin.iter().enumerate() {
        copies.entry(o).or_default().push(dv);
    }
    let mut offset = vec![0.0; disk.num_vertices()];
    for c in copies.values().filter(|c| c.len() == 2) {
        let plus = if mean(c[0]) > mean(c[1]) { c[0] } else { c[1] };
        offset[plus] = raw_period;
    }

    // Least-squares fit of v to the rotated gradient of u, period enforced.
    let nv = mesh.num_vertices();
    let mut diag = vec![0.0; nv];
    let mut off_by_edge = vec![0.0; mesh.num_edges()];
    let mut rhs = vec![0.0; nv];
    let mut scale = vec![0.0; nv];
    // Slivers left by slicing close to vertices carry no area but wreck the
    // conditioning, so they are left out of the fit.
    let min_area = 1e-10 * surface_area(mesh) / nf as f64;
    for f in 0..nf {
        let Some((area, g, nh)) = face_frame(mesh, f) else { continue };
        if area < min_area {
            continue;
        }
        let t = mesh.triangles()[f];
        let dt = disk.triangles()[f];
        let grad_u: Vec3 = [0, 1, 2].map(|c| u[t[0]] * g[0][c] + u[t[1]] * g[1][c] + u[t[2]] * g[2][c]);
        let target = cross(nh, grad_u);
        for a in 0..3 {
            rhs[t[a]] += area * dot(g[a], target);
            scale[t[a]] += (area * dot(g[a], target)).abs();
            for b in 0..3 {
                let k = area * dot(g[a], g[b]);
                rhs[t[a]] -= k * offset[dt[b]];
                if a == b {
                    diag[t[a]] += k;
                } else if a < b {
                    off_by_edge[mesh.edge_id(t[a], t[b]).expect("face edge")] += k;
                }
            }
        }
    }
    let off: Vec<(usize, usize, f64)> =
        mesh.edges().iter().zip(&off_by_edge).map(|(e, &k)| (e.vertices[0], e.vertices[1], k)).collect();
    let (mut x, solver_iterations) = solve_stiffness(&diag, &off, &rhs, gauge, scale.iter().map(|s| s * s).sum::<f64>().sqrt());
    let mut known: Vec<bool> = diag.iter().map(|&d| d > 0.0).collect();
    known[gauge] = true;
    let mut queue: VecDeque<usize> = (0..nv).filter(|&v| known[v]).collect();
    while let Some(v) = queue.pop_front() {
        for &w in mesh.neighbors(v) {
            if !known[w] {
                known[w] = true;
                x[w] = x[v];
                queue.push_back(w);
            }
        }
    }
    let scale = circumference / raw_period;
    let v = x.iter().map(|&x| (x * scale).rem_euclid(circumference)).collect();
    let deviation = (raw_period - circumference).abs() / circumference;
    Ok(FlatCoords {
        u: u.clone(),
        v,
        circumference,
        raw_period,
        period_mismatch: (deviation > 0.05).then_some(deviation),
        solver_iterations,
    })
}

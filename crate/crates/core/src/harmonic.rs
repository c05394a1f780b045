//! Harmonic maps from a triangle mesh to a metric graph.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, GraphPoint, MetricGraph};
use crate::mesh::{CotanWeights, TriMesh};
use crate::pants::{AdmissibleCurveSet, CutSurface, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmonicError {
    #[error("energy became non-finite in sweep {sweep} at vertex {vertex}")]
    NonFiniteEnergy { sweep: usize, vertex: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    /// Stop once a sweep lowers the energy by less than this fraction.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions { tol: 1e-9, max_sweeps: 10_000 }
    }
}

/// Image of every mesh vertex in the graph, with relaxation bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMap {
    pub points: Vec<GraphPoint>,
    /// Edge a vertex must stay on (vertices of the cut curves).
    pub constraint: Vec<Option<usize>>,
    /// Vertices that never move.
    pub pinned: Vec<bool>,
    /// Energy before the first sweep, then after every sweep.
    pub trace: Vec<f64>,
    /// Largest graph distance moved by a vertex in each sweep.
    pub max_moves: Vec<f64>,
    /// Moves skipped because the local objective was unbounded.
    pub skipped_moves: usize,
    pub converged: bool,
}

impl GraphMap {
    pub fn free(points: Vec<GraphPoint>) -> Self {
        let n = points.len();
        GraphMap {
            points,
            constraint: vec![None; n],
            pinned: vec![false; n],
            trace: Vec::new(),
            max_moves: Vec::new(),
            skipped_moves: 0,
            converged: false,
        }
    }

    pub fn sweeps(&self) -> usize {
        self.max_moves.len()
    }

    /// `sweep,energy,max_displacement` rows; sweep 0 is the input map.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("sweep,energy,max_displacement\n");
        for (s, e) in self.trace.iter().enumerate() {
            let moved = if s == 0 { 0.0 } else { self.max_moves[s - 1] };
            out.push_str(&format!("{s},{e:e},{moved:e}\n"));
        }
        out
    }
}

/// Parameters of the initial map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitOptions {
    /// Curve vertices start at `curve_fraction * h_k` along their edge.
    pub curve_fraction: f64,
}

impl Default for InitOptions {
    fn default() -> Self {
        InitOptions { curve_fraction: 0.5 }
    }
}

fn hop_distances(mesh: &TriMesh, sources: &[usize]) -> Vec<usize> {
    let mut d = vec![usize::MAX; mesh.num_vertices()];
    let mut queue = VecDeque::new();
    for &s in sources {
        d[s] = 0;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for &u in mesh.neighbors(v) {
            if d[u] == usize::MAX {
                d[u] = d[v] + 1;
                queue.push_back(u);
            }
        }
    }
    d
}

/// Initial map in the homotopy class fixed by the decomposition: each curve
/// sits inside its edge, and the rest of every component spreads over the
/// half-edges next to its node, reaching the node where it is equally far
/// (in mesh hops) from two boundary copies.
pub fn initial_map(
    mesh: &TriMesh,
    set: &AdmissibleCurveSet,
    cut: &CutSurface,
    graph: &MetricGraph,
    options: InitOptions,
) -> GraphMap {
    let phi = options.curve_fraction;
    let cut_mesh = &cut.slice.mesh;
    let n = mesh.num_vertices();
    let mut points = vec![GraphPoint::Node(0); n];
    let mut constraint = vec![None; n];
    for (k, c) in set.curves.iter().enumerate() {
        for &v in &c.vertices {
            points[v] = graph.point(k, phi * set.heights[k]);
            constraint[v] = Some(k);
        }
    }
    for (ci, comp) in cut.components.iter().enumerate() {
        let dists: Vec<Vec<usize>> = comp.copies.iter().map(|c| hop_distances(cut_mesh, &c.vertices)).collect();
        let far = comp.vertices.iter().map(|&v| dists.iter().map(|d| d[v]).min().unwrap_or(0)).max().unwrap_or(0);
        for &v in &comp.vertices {
            if v >= n || constraint[v].is_some() {
                continue;
            }
            if comp.copies.is_empty() {
                points[v] = GraphPoint::Node(ci);
                continue;
            }
            let mut order: Vec<usize> = (0..comp.copies.len()).collect();
            order.sort_by_key(|&i| (dists[i][v], i));
            let d1 = dists[order[0]][v] as f64;
            let rho = match order.get(1) {
                Some(&j) => {
                    let d2 = dists[j][v] as f64;
                    (d2 - d1) / (d1 + d2)
                }
                None => 1.0 - d1 / far.max(1) as f64,
            };
            let copy = &comp.copies[order[0]];
            let h = set.heights[copy.curve];
            let t = match copy.side {
                Side::Left => phi * h * rho,
                Side::Right => h - (1.0 - phi) * h * rho,
            };
            points[v] = graph.point(copy.curve, t);
        }
    }
    GraphMap { constraint, ..GraphMap::free(points) }
}

/// `sum over mesh edges of w_ij d(f(v_i), f(v_j))^2`.
pub fn energy(mesh: &TriMesh, graph: &MetricGraph, points: &[GraphPoint], weights: &CotanWeights) -> f64 {
    mesh.edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let [a, b] = edge.vertices;
            weights.get(e) * graph.distance(points[a], points[b]).powi(2)
        })
        .sum()
}

/// Gauss-Seidel relaxation: vertices in index order move to their local
/// barycenter until a sweep's relative energy decrease drops below `tol`.
pub fn relax(
    mesh: &TriMesh,
    graph: &MetricGraph,
    mut map: GraphMap,
    weights: &CotanWeights,
    options: RelaxOptions,
) -> Result<GraphMap, HarmonicError> {
    if !(options.tol > 0.0) {
        return Err(HarmonicError::BadTolerance(options.tol));
    }
    let star: Vec<Vec<(usize, f64)>> = (0..mesh.num_vertices())
        .map(|v| {
            mesh.neighbors(v).iter().map(|&u| (u, weights.get(mesh.edge_id(v, u).expect("neighbour edge")))).collect()
        })
        .collect();
    let mut e_prev = energy(mesh, graph, &map.points, weights);
    if map.trace.is_empty() {
        map.trace.push(e_prev);
    }
    map.converged = false;
    let mut nb = Vec::new();
    for sweep in 1..=options.max_sweeps {
        let mut max_move: f64 = 0.0;
        for v in 0..mesh.num_vertices() {
            if map.pinned[v] {
                continue;
            }
            nb.clear();
            nb.extend(star[v].iter().map(|&(u, w)| (map.points[u], w)));
            let old = map.points[v];
            let moved = match map.constraint[v] {
                Some(k) => graph.barycenter_in(old, &nb, &[k]),
                None => graph.barycenter(old, &nb),
            };
            match moved {
                Ok(p) => {
                    max_move = max_move.max(graph.distance(old, p));
                    map.points[v] = p;
                }
                Err(GraphError::UnboundedObjective(_)) => map.skipped_moves += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let e = energy(mesh, graph, &map.points, weights);
        if !e.is_finite() {
            let vertex = map
                .points
                .iter()
                .position(|p| matches!(p, GraphPoint::Edge { t, .. } if !t.is_finite()))
                .unwrap_or(0);
            return Err(HarmonicError::NonFiniteEnergy { sweep, vertex });
        }
        map.trace.push(e);
        map.max_moves.push(max_move);
        if e_prev <= 0.0 || (e_prev - e) / e_prev < options.tol {
            map.converged = true;
            break;
        }
        e_prev = e;
    }
    Ok(map)
}

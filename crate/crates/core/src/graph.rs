//! Weighted multigraphs as metric spaces: points on edges, shortest-path
//! distance, and the weighted barycenter used by harmonic relaxation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge {0} has non-positive weight {1}")]
    NonPositiveWeight(usize, f64),
    #[error("edge {edge} references node {node} but the graph has {nodes} nodes")]
    BadNode { edge: usize, node: usize, nodes: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("barycenter objective is unbounded below on edge {0}")]
    UnboundedObjective(usize),
    #[error("barycenter needs at least one neighbour")]
    NoNeighbors,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    /// `ends[0]` sits at parameter 0, `ends[1]` at the full weight.
    pub ends: [usize; 2],
    pub weight: f64,
}

impl GraphEdge {
    pub fn is_loop(&self) -> bool {
        self.ends[0] == self.ends[1]
    }
}

/// Multigraph with positive edge weights; self-loops and parallel edges allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionGraph {
    pub num_nodes: usize,
    pub edges: Vec<GraphEdge>,
}

impl DecompositionGraph {
    /// Node degree, loops counted twice.
    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().map(|e| e.ends.iter().filter(|&&n| n == node).count()).sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.num_nodes == 0 {
            return false;
        }
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for e in &self.edges {
                for k in 0..2 {
                    if e.ends[k] == n && !seen[e.ends[1 - k]] {
                        seen[e.ends[1 - k]] = true;
                        stack.push(e.ends[1 - k]);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// A point of the graph in canonical form: parameters `0` and `weight` are
/// always stored as the corresponding node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphPoint {
    Node(usize),
    Edge { edge: usize, t: f64 },
}

/// The subgraph at a node: the node and every incident edge, loops once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Star {
    pub node: usize,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MetricGraph {
    graph: DecompositionGraph,
    dist: Vec<Vec<f64>>,
    incident: Vec<Vec<usize>>,
}

/// One term of the barycenter objective restricted to an edge:
/// `d(x) = min(x + from_start, w - x + from_end, |x - direct|)`.
#[derive(Debug, Clone, Copy)]
struct Term {
    weight: f64,
    from_start: f64,
    from_end: f64,
    direct: Option<f64>,
}

impl Term {
    /// Active piece `sigma * x + c` of the distance at `x`.
    fn piece(&self, x: f64, w: f64) -> (f64, f64) {
        let mut best = (1.0, self.from_start);
        let mut value = x + self.from_start;
        let down = w - x + self.from_end;
        if down < value {
            value = down;
            best = (-1.0, w + self.from_end);
        }
        if let Some(s) = self.direct {
            let d = (x - s).abs();
            if d < value {
                best = if x >= s { (1.0, -s) } else { (-1.0, s) };
            }
        }
        best
    }

    fn breakpoints(&self, w: f64, out: &mut Vec<f64>) {
        out.push(0.5 * (w + self.from_end - self.from_start));
        if let Some(s) = self.direct {
            out.push(s);
            out.push(0.5 * (s - self.from_start));
            out.push(0.5 * (w + self.from_end + s));
        }
    }
}

impl MetricGraph {
    pub fn new(graph: DecompositionGraph) -> Result<Self, GraphError> {
        let n = graph.num_nodes;
        for (i, e) in graph.edges.iter().enumerate() {
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(GraphError::NonPositiveWeight(i, e.weight));
            }
            for &node in &e.ends {
                if node >= n {
                    return Err(GraphError::BadNode { edge: i, node, nodes: n });
                }
            }
        }
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        // Floyd-Warshall over the node set.
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in &graph.edges {
            let [a, b] = e.ends;
            if e.weight < dist[a][b] {
                dist[a][b] = e.weight;
                dist[b][a] = e.weight;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        let mut incident = vec![Vec::new(); n];
        for (i, e) in graph.edges.iter().enumerate() {
            incident[e.ends[0]].push(i);
            if !e.is_loop() {
                incident[e.ends[1]].push(i);
            }
        }
        Ok(MetricGraph { graph, dist, incident })
    }

    pub fn graph(&self) -> &DecompositionGraph {
        &self.graph
    }
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes
    }
    pub fn num_edges(&self) -> usize {
        self.graph.edges.len()
    }
    pub fn edge(&self, e: usize) -> &GraphEdge {
        &self.graph.edges[e]
    }
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a][b]
    }
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }
    pub fn min_weight(&self) -> f64 {
        self.graph.edges.iter().map(|e| e.weight).fold(f64::INFINITY, f64::min)
    }

    /// Canonical point at parameter `t` along `edge` (clamped to the edge).
    pub fn point(&self, edge: usize, t: f64) -> GraphPoint {
        let e = &self.graph.edges[edge];
        if t <= 0.0 {
            GraphPoint::Node(e.ends[0])
        } else if t >= e.weight {
            GraphPoint::Node(e.ends[1])
        } else {
            GraphPoint::Edge { edge, t }
        }
    }

    pub fn star(&self, node: usize) -> Star {
        Star { node, edges: self.incident[node].clone() }
    }

    fn node_to_point(&self, node: usize, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Node(m) => self.dist[node][m],
            GraphPoint::Edge { edge, t } => {
                let e = &self.graph.edges[edge];
                (self.dist[node][e.ends[0]] + t).min(self.dist[node][e.ends[1]] + e.weight - t)
            }
        }
    }

    /// Shortest-path distance between two points.
    pub fn distance(&self, p: GraphPoint, q: GraphPoint) -> f64 {
        match p {
            GraphPoint::Node(n) => self.node_to_point(n, q),
            GraphPoint::Edge { edge, t } => {
                let e = &self.graph.edges[edge];
                let mut d = (t + self.node_to_point(e.ends[0], q))
                    .min(e.weight - t + self.node_to_point(e.ends[1], q));
                if let GraphPoint::Edge { edge: f, t: s } = q {
                    if f == edge {
                        d = d.min((t - s).abs());
                    }
                }
                d
            }
        }
    }

    /// `sum_j w_j d(p, q_j)^2`.
    pub fn objective(&self, p: GraphPoint, neighbors: &[(GraphPoint, f64)]) -> f64 {
        neighbors.iter().map(|&(q, w)| w * self.distance(p, q).powi(2)).sum()
    }

    /// Edges a relaxation move from `current` may land on: the edge holding
    /// `current` plus every edge incident to that edge's endpoints.
    pub fn candidate_edges(&self, current: GraphPoint) -> Vec<usize> {
        let mut out = match current {
            GraphPoint::Node(n) => self.incident[n].clone(),
            GraphPoint::Edge { edge, .. } => {
                let e = &self.graph.edges[edge];
                let mut v = vec![edge];
                v.extend_from_slice(&self.incident[e.ends[0]]);
                v.extend_from_slice(&self.incident[e.ends[1]]);
                v
            }
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Weighted barycenter over the one-ring candidate region of `current`.
    pub fn barycenter(&self, current: GraphPoint, neighbors: &[(GraphPoint, f64)]) -> Result<GraphPoint, GraphError> {
        let candidates = self.candidate_edges(current);
        self.barycenter_in(current, neighbors, &candidates)
    }

    /// Minimizes the objective over the closures of `candidates` (ascending
    /// edge ids). Ties go to the smaller edge id, then the smaller parameter.
    /// Never returns a point with a larger objective than `current`.
    pub fn barycenter_in(
        &self,
        current: GraphPoint,
        neighbors: &[(GraphPoint, f64)],
        candidates: &[usize],
    ) -> Result<GraphPoint, GraphError> {
        if neighbors.is_empty() {
            return Err(GraphError::NoNeighbors);
        }
        let total: f64 = neighbors.iter().map(|n| n.1).sum();
        let mut best: Option<(f64, GraphPoint)> = None;
        let mut breaks = Vec::new();
        let mut terms = Vec::with_capacity(neighbors.len());
        for &edge in candidates {
            if total < 0.0 {
                return Err(GraphError::UnboundedObjective(edge));
            }
            let e = &self.graph.edges[edge];
            let w = e.weight;
            terms.clear();
            terms.extend(neighbors.iter().map(|&(q, weight)| Term {
                weight,
                from_start: self.node_to_point(e.ends[0], q),
                from_end: self.node_to_point(e.ends[1], q),
                direct: match q {
                    GraphPoint::Edge { edge: f, t } if f == edge => Some(t),
                    _ => None,
                },
            }));
            breaks.clear();
            breaks.push(0.0);
            breaks.push(w);
            for term in &terms {
                term.breakpoints(w, &mut breaks);
            }
            breaks.retain(|&x| (0.0..=w).contains(&x));
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            for win in breaks.windows(2) {
                let (lo, hi) = (win[0], win[1]);
                let mid = 0.5 * (lo + hi);
                let mut lin = 0.0;
                for term in &terms {
                    let (sigma, c) = term.piece(mid, w);
                    lin += term.weight * sigma * c;
                }
                let x = if total > 0.0 {
                    (-lin / total).clamp(lo, hi)
                } else if lin > 0.0 {
                    lo
                } else {
                    hi
                };
                let p = self.point(edge, x);
                let value = self.objective(p, neighbors);
                if best.map_or(true, |(b, _)| value < b) {
                    best = Some((value, p));
                }
            }
        }
        let current_value = self.objective(current, neighbors);
        match best {
            Some((value, p)) if value < current_value => Ok(p),
            _ => Ok(current),
        }
    }
}

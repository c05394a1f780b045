#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use foliate::graph::{DecompositionGraph, GraphEdge, GraphPoint, MetricGraph};
use rand::Rng;

/// Connected multigraph with at most `max_edges` edges. When `grid` is set,
/// weights are multiples of `1/grid`.
pub fn random_graph<R: Rng>(rng: &mut R, max_edges: usize, grid: Option<u32>) -> MetricGraph {
    let m = rng.gen_range(1..=max_edges);
    let n = rng.gen_range(1..=m.min(3) + 1).min(m + 1);
    let mut edges = Vec::new();
    for i in 0..m {
        let ends = if i + 1 < n {
            [rng.gen_range(0..=i), i + 1]
        } else {
            [rng.gen_range(0..n), rng.gen_range(0..n)]
        };
        let weight = match grid {
            Some(g) => rng.gen_range(4..=3 * g) as f64 / g as f64,
            None => rng.gen_range(0.25..2.0),
        };
        edges.push(GraphEdge { ends, weight });
    }
    MetricGraph::new(DecompositionGraph { num_nodes: n, edges }).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, g: &MetricGraph, grid: Option<u32>) -> GraphPoint {
    let e = rng.gen_range(0..g.num_edges());
    let w = g.edge(e).weight;
    let t = match grid {
        Some(k) => rng.gen_range(0..=(w * k as f64).round() as u32) as f64 / k as f64,
        None => rng.gen_range(0.0..=w),
    };
    g.point(e, t)
}

/// Minimizer of the barycenter objective sampled every `step` along each
/// candidate edge.
pub fn brute_barycenter(
    g: &MetricGraph,
    neighbors: &[(GraphPoint, f64)],
    candidates: &[usize],
    step: f64,
) -> (GraphPoint, f64) {
    let mut best = (GraphPoint::Node(0), f64::INFINITY);
    for &e in candidates {
        let w = g.edge(e).weight;
        let n = (w / step).floor() as usize;
        for i in 0..=n + 1 {
            let p = g.point(e, (i as f64 * step).min(w));
            let v = g.objective(p, neighbors);
            if v < best.1 {
                best = (p, v);
            }
        }
    }
    best
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Exact distances on a grid graph by subdividing every edge into unit
/// segments of length `1/grid` and running Dijkstra.
pub struct SubdividedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    /// `chain[e][j]` is the subdivision vertex at parameter `j / grid` on edge `e`.
    chain: Vec<Vec<usize>>,
    grid: f64,
}

impl SubdividedGraph {
    pub fn new(g: &MetricGraph, grid: u32) -> Self {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g.num_nodes()];
        let mut chain = Vec::new();
        let h = 1.0 / grid as f64;
        for e in 0..g.num_edges() {
            let edge = g.edge(e);
            let k = (edge.weight * grid as f64).round() as usize;
            let mut ids = vec![edge.ends[0]];
            for _ in 1..k {
                adj.push(Vec::new());
                ids.push(adj.len() - 1);
            }
            ids.push(edge.ends[1]);
            for w in ids.windows(2) {
                adj[w[0]].push((w[1], h));
                adj[w[1]].push((w[0], h));
            }
            chain.push(ids);
        }
        SubdividedGraph { adj, chain, grid: grid as f64 }
    }

    fn vertex(&self, p: GraphPoint) -> usize {
        match p {
            GraphPoint::Node(n) => n,
            GraphPoint::Edge { edge, t } => self.chain[edge][(t * self.grid).round() as usize],
        }
    }

    pub fn distance(&self, p: GraphPoint, q: GraphPoint) -> f64 {
        let (s, target) = (self.vertex(p), self.vertex(q));
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        dist[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item(0.0, s));
        while let Some(Item(d, v)) = heap.pop() {
            if v == target {
                return d;
            }
            if d > dist[v] {
                continue;
            }
            for &(u, w) in &self.adj[v] {
                if d + w < dist[u] {
                    dist[u] = d + w;
                    heap.push(Item(d + w, u));
                }
            }
        }
        f64::INFINITY
    }
}

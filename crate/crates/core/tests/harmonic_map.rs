use foliate::generate::{doubled, flat_cylinder, flat_torus, genus2, holed_sphere, Generated};
use foliate::graph::{DecompositionGraph, GraphEdge, GraphPoint, MetricGraph};
use foliate::harmonic::{energy, initial_map, relax, GraphMap, InitOptions, RelaxOptions};
use foliate::mesh::{cotangent_weights, double_cover, TriMesh};
use foliate::pants::{build_decomposition_graph, cut_surface, validate_curves};

struct Setup {
    mesh: TriMesh,
    graph: MetricGraph,
    map: GraphMap,
}

fn setup(g: &Generated, heights: Vec<f64>, phi: f64) -> Setup {
    let set = validate_curves(&g.mesh, g.curves.clone(), heights).unwrap();
    let cut = cut_surface(&g.mesh, &set).unwrap();
    let graph = MetricGraph::new(build_decomposition_graph(&cut, &set).unwrap()).unwrap();
    let map = initial_map(&g.mesh, &set, &cut, &graph, InitOptions { curve_fraction: phi });
    Setup { mesh: g.mesh.clone(), graph, map }
}

fn t_of(p: GraphPoint, w: f64) -> f64 {
    match p {
        GraphPoint::Node(0) => 0.0,
        GraphPoint::Node(_) => w,
        GraphPoint::Edge { t, .. } => t,
    }
}

fn linear_cylinder(around: usize, rings: usize, h: f64) -> (TriMesh, MetricGraph, GraphMap, f64) {
    let radius = 1.0;
    let height = 2.0;
    let mesh = flat_cylinder(around, rings, radius, height).unwrap();
    let graph = MetricGraph::new(DecompositionGraph {
        num_nodes: 2,
        edges: vec![GraphEdge { ends: [0, 1], weight: h }],
    })
    .unwrap();
    let points = (0..mesh.num_vertices()).map(|v| graph.point(0, h * mesh.position(v)[2] / height)).collect();
    let mut map = GraphMap::free(points);
    for v in 0..mesh.num_vertices() {
        map.pinned[v] = mesh.is_boundary_vertex(v);
    }
    let polygon = around as f64 * 2.0 * radius * (std::f64::consts::PI / around as f64).sin();
    (mesh, graph, map, h * h * polygon / height)
}

#[test]
fn linear_cylinder_energy_is_exact_and_stationary() {
    let (mesh, graph, map, expected) = linear_cylinder(16, 6, 0.7);
    let w = cotangent_weights(&mesh).unwrap();
    let e0 = energy(&mesh, &graph, &map.points, &w);
    assert!((e0 - expected).abs() < 1e-12 * expected, "{e0} vs {expected}");
    let out = relax(&mesh, &graph, map, &w, RelaxOptions::default()).unwrap();
    assert_eq!(out.sweeps(), 1);
    assert!(out.converged);
    assert!((out.trace[1] - e0).abs() <= 1e-12 * e0);
}

#[test]
fn energy_scales_with_edge_weights_squared() {
    let (mesh, _, map, _) = linear_cylinder(10, 4, 1.0);
    let w = cotangent_weights(&mesh).unwrap();
    let g1 = MetricGraph::new(DecompositionGraph { num_nodes: 2, edges: vec![GraphEdge { ends: [0, 1], weight: 1.0 }] })
        .unwrap();
    let g3 = MetricGraph::new(DecompositionGraph { num_nodes: 2, edges: vec![GraphEdge { ends: [0, 1], weight: 3.0 }] })
        .unwrap();
    let scaled: Vec<GraphPoint> = map
        .points
        .iter()
        .map(|&p| match p {
            GraphPoint::Edge { edge, t } => GraphPoint::Edge { edge, t: 3.0 * t },
            n => n,
        })
        .collect();
    let e1 = energy(&mesh, &g1, &map.points, &w);
    let e3 = energy(&mesh, &g3, &scaled, &w);
    assert!((e3 - 9.0 * e1).abs() < 1e-12 * e3);
}

#[test]
fn tolerance_one_stops_after_one_sweep() {
    let g = flat_torus(1.0, 1.0, 12).unwrap();
    let s = setup(&g, vec![1.0], 0.5);
    let w = cotangent_weights(&s.mesh).unwrap();
    let out = relax(&s.mesh, &s.graph, s.map.clone(), &w, RelaxOptions { tol: 1.0, max_sweeps: 100 }).unwrap();
    assert_eq!(out.sweeps(), 1);
    assert_eq!(out.trace.len(), 2);
}

#[test]
fn torus_map_is_monotone_along_longitudes() {
    let n = 24;
    let g = flat_torus(2.0, 1.0, n).unwrap();
    let s = setup(&g, vec![1.0], 0.5);
    let w = cotangent_weights(&s.mesh).unwrap();
    let out = relax(&s.mesh, &s.graph, s.map, &w, RelaxOptions::default()).unwrap();
    assert!(out.converged);
    for pair in out.trace.windows(2) {
        assert!(pair[1] <= pair[0]);
    }
    // Vertex (i, j) = i * n + j. Away from the curve (i = 0) the parameter,
    // unwrapped at the curve's position h/2, is strictly monotone in i.
    for j in 0..n {
        let ts: Vec<f64> = (1..n).map(|i| t_of(out.points[i * n + j], 1.0)).collect();
        let unwrapped: Vec<f64> = ts.iter().map(|&t| if t > 0.5 { t - 1.0 } else { t }).collect();
        let steps: Vec<f64> = unwrapped.windows(2).map(|w| w[1] - w[0]).collect();
        let up = steps.iter().all(|&d| d > 0.0);
        let down = steps.iter().all(|&d| d < 0.0);
        assert!(up || down, "ring {j}: {unwrapped:?}");
    }
}

#[test]
fn genus_two_and_doubled_sphere_relax_monotonically() {
    for g in [genus2(2).unwrap(), doubled(&holed_sphere(6, 3).unwrap().mesh).unwrap()] {
        let n = g.curves.len();
        let s = setup(&g, vec![1.0; n], 0.5);
        let w = cotangent_weights(&s.mesh).unwrap();
        let out = relax(&s.mesh, &s.graph, s.map, &w, RelaxOptions::default()).unwrap();
        assert!(out.converged, "{} sweeps", out.sweeps());
        for pair in out.trace.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        for (v, c) in out.constraint.iter().enumerate() {
            if let Some(k) = *c {
                match out.points[v] {
                    GraphPoint::Edge { edge, .. } => assert_eq!(edge, k),
                    GraphPoint::Node(node) => assert!(s.graph.edge(k).ends.contains(&node)),
                }
            }
        }
    }
}

#[test]
fn doubled_sphere_initial_map_is_mirror_symmetric() {
    let base = holed_sphere(6, 3).unwrap().mesh;
    let cover = double_cover(&base).unwrap();
    let g = doubled(&base).unwrap();
    let s = setup(&g, vec![1.0; 6], 0.5);
    let edge_of = |p: GraphPoint| match p {
        GraphPoint::Edge { edge, .. } => Some(edge),
        GraphPoint::Node(_) => None,
    };
    for (v, &m) in cover.involution.iter().enumerate() {
        let (p, q) = (s.map.points[v], s.map.points[m]);
        assert_eq!(edge_of(p), edge_of(q), "vertex {v}");
        let d0 = s.graph.distance(p, GraphPoint::Node(0));
        let d1 = s.graph.distance(q, GraphPoint::Node(1));
        assert!((d0 - d1).abs() < 1e-12, "vertex {v}: {p:?} {q:?}");
    }
}

#[test]
fn two_initializations_converge_together() {
    let g = genus2(2).unwrap();
    let a = setup(&g, vec![1.0; 3], 0.5);
    let b = setup(&g, vec![1.0; 3], 1.0 / 3.0);
    let w = cotangent_weights(&a.mesh).unwrap();
    let ra = relax(&a.mesh, &a.graph, a.map, &w, RelaxOptions::default()).unwrap();
    let rb = relax(&b.mesh, &b.graph, b.map, &w, RelaxOptions::default()).unwrap();
    let worst = ra.points.iter().zip(&rb.points).map(|(&p, &q)| a.graph.distance(p, q)).fold(0.0, f64::max);
    assert!(worst < 1e-3, "max per-vertex distance {worst}");
}

//! Browser bindings. Every entry point takes and returns plain strings so the
//! page needs no generated type glue; failures come back as the same JSON
//! error object the CLI prints.

use foliate::features::{feature_names, radar_svg, read_features_csv, FeatureError, HeightPolicy};
use foliate::generate::flat_torus;
use foliate::graph::{DecompositionGraph, GraphPoint, MetricGraph};
use foliate::pipeline::{analyze, PipelineOptions};
use foliate::Error;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusResult {
    pub exact_module: f64,
    pub module: f64,
    pub relative_error: f64,
    pub height: f64,
    pub circumference: f64,
    pub sweeps: usize,
    pub h: f64,
    pub c: f64,
    pub vertices: usize,
}

/// Runs the full pipeline on a generated torus with a single cylinder.
pub fn torus_module(circumference: f64, height: f64, res: usize) -> Result<TorusResult, Error> {
    let g = flat_torus(circumference, height, res)?;
    let options = PipelineOptions { heights: HeightPolicy::Explicit(vec![height]), ..PipelineOptions::default() };
    let a = analyze("torus", "", &g.mesh, &g.curves, &options)?;
    let cyl = &a.report.cylinders[0];
    let exact = g.module.unwrap_or(circumference / height);
    let module = cyl.circumference / cyl.height;
    Ok(TorusResult {
        exact_module: exact,
        module,
        relative_error: (module - exact).abs() / exact,
        height: cyl.height,
        circumference: cyl.circumference,
        sweeps: a.report.sweeps,
        h: a.features.features[0],
        c: a.features.features[1],
        vertices: g.mesh.num_vertices(),
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct BarycenterQuery {
    pub graph: DecompositionGraph,
    pub current: GraphPoint,
    pub neighbors: Vec<(GraphPoint, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarycenterResult {
    pub point: GraphPoint,
    pub objective: f64,
    pub start_objective: f64,
    /// Distance from each neighbour to the barycenter.
    pub distances: Vec<f64>,
}

pub fn barycenter(query: &BarycenterQuery) -> Result<BarycenterResult, Error> {
    let g = MetricGraph::new(query.graph.clone())?;
    let point = g.barycenter(query.current, &query.neighbors)?;
    Ok(BarycenterResult {
        point,
        objective: g.objective(point, &query.neighbors),
        start_objective: g.objective(query.current, &query.neighbors),
        distances: query.neighbors.iter().map(|&(q, _)| g.distance(point, q)).collect(),
    })
}

pub fn radar(csv: &str, a: &str, b: &str) -> Result<String, Error> {
    let rows = read_features_csv(csv)?;
    let find = |id: &str| rows.iter().find(|r| r.subject == id).ok_or_else(|| FeatureError::UnknownSubject(id.to_string()));
    let (ra, rb) = (find(a)?, find(b)?);
    Ok(radar_svg(ra, rb, &feature_names(ra.dim()))?)
}

fn js_error(e: Error) -> JsValue {
    JsValue::from_str(&e.to_json().to_string())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[wasm_bindgen(js_name = torusModule)]
pub fn torus_module_js(circumference: f64, height: f64, res: usize) -> Result<String, JsValue> {
    torus_module(circumference, height, res).map(|r| json(&r)).map_err(js_error)
}

#[wasm_bindgen(js_name = graphBarycenter)]
pub fn barycenter_js(query: &str) -> Result<String, JsValue> {
    let q: BarycenterQuery = serde_json::from_str(query).map_err(|e| js_error(Error::Config(e.to_string())))?;
    barycenter(&q).map(|r| json(&r)).map_err(js_error)
}

#[wasm_bindgen(js_name = radarSvg)]
pub fn radar_js(csv: &str, a: &str, b: &str) -> Result<String, JsValue> {
    radar(csv, a, b).map_err(js_error)
}

//! End-to-end analysis of one surface and batch runs driven by a JSON config.

use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::{feature_vector, prescribed_heights, write_features_csv, FeatureVector, HeightPolicy};
use crate::foliation::{circumference, flatten_cylinder, slice_cylinders, Cylinder};
use crate::graph::MetricGraph;
use crate::harmonic::{initial_map, relax, GraphMap, InitOptions, RelaxOptions};
use crate::mesh::{cotangent_weights, double_cover, CurvePath, TriMesh};
use crate::mesh::io::{load_curves, load_mesh_auto};
use crate::pants::{build_decomposition_graph, cut_surface, validate_curves};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    #[serde(default)]
    pub heights: HeightPolicy,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    /// Where curve vertices start along their edge, as a fraction of its length.
    #[serde(default = "default_curve_fraction")]
    pub curve_fraction: f64,
}

fn default_tol() -> f64 {
    RelaxOptions::default().tol
}
fn default_max_sweeps() -> usize {
    RelaxOptions::default().max_sweeps
}
fn default_curve_fraction() -> f64 {
    InitOptions::default().curve_fraction
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            heights: HeightPolicy::default(),
            tol: default_tol(),
            max_sweeps: default_max_sweeps(),
            curve_fraction: default_curve_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderReport {
    pub edge: usize,
    pub height: f64,
    pub circumference: f64,
    pub area: f64,
    pub raw_period: f64,
    pub period_mismatch: Option<f64>,
    pub euler: i64,
    pub boundary_loops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceReport {
    pub subject: String,
    pub label: String,
    /// The input had boundary and was replaced by its double cover.
    pub doubled: bool,
    pub genus: i64,
    pub num_curves: usize,
    pub heights: Vec<f64>,
    pub surface_area: f64,
    pub obtuse_fraction: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub skipped_moves: usize,
    pub energy_trace: Vec<f64>,
    pub cylinders: Vec<CylinderReport>,
    pub features: Vec<f64>,
}

/// Everything computed for one surface.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub mesh: TriMesh,
    pub graph: MetricGraph,
    pub map: GraphMap,
    pub cylinders: Vec<Cylinder>,
    pub features: FeatureVector,
    pub report: SurfaceReport,
}

/// Bordered surfaces are replaced by their double cover. The seams join the
/// curve list after the given curves, each of which is repeated on the
/// mirrored sheet.
pub fn close_surface(mesh: &TriMesh, curves: &[CurvePath]) -> Result<(TriMesh, Vec<CurvePath>, bool), Error> {
    if mesh.is_closed() {
        return Ok((mesh.clone(), curves.to_vec(), false));
    }
    let cover = double_cover(mesh)?;
    let mut out = Vec::new();
    for c in curves {
        out.push(c.clone());
        out.push(CurvePath { vertices: c.vertices.iter().map(|&v| cover.involution[v]).collect(), closed: c.closed });
    }
    out.extend(cover.seams.iter().cloned().map(CurvePath::closed));
    Ok((cover.mesh, out, true))
}

pub fn analyze(
    subject: &str,
    label: &str,
    mesh: &TriMesh,
    curves: &[CurvePath],
    options: &PipelineOptions,
) -> Result<Analysis, Error> {
    let (mesh, curves, doubled) = close_surface(mesh, curves)?;
    let heights = prescribed_heights(&mesh, &curves, &options.heights)?;
    let set = validate_curves(&mesh, curves, heights.clone())?;
    let cut = cut_surface(&mesh, &set)?;
    let graph = MetricGraph::new(build_decomposition_graph(&cut, &set)?)?;
    let map = initial_map(&mesh, &set, &cut, &graph, InitOptions { curve_fraction: options.curve_fraction });
    let weights = cotangent_weights(&mesh)?;
    let map = relax(&mesh, &graph, map, &weights, RelaxOptions { tol: options.tol, max_sweeps: options.max_sweeps })?;
    if !map.converged {
        return Err(Error::NotConverged { sweeps: map.sweeps() });
    }
    let cylinders = slice_cylinders(&mesh, &map.points, &graph)?;
    #[cfg(feature = "parallel")]
    let iter = cylinders.par_iter();
    #[cfg(not(feature = "parallel"))]
    let iter = cylinders.iter();
    let reports = iter
        .map(|c| {
            let l = circumference(c)?;
            let flat = flatten_cylinder(c, l)?;
            let t = c.mesh.topology();
            Ok(CylinderReport {
                edge: c.edge,
                height: c.height,
                circumference: l,
                area: c.area(),
                raw_period: flat.raw_period,
                period_mismatch: flat.period_mismatch,
                euler: t.euler,
                boundary_loops: t.boundary_loops.len(),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let modules: Vec<(f64, f64)> = reports.iter().map(|r| (r.height, r.circumference)).collect();
    let features = feature_vector(subject, label, &modules);
    let report = SurfaceReport {
        subject: subject.to_string(),
        label: label.to_string(),
        doubled,
        genus: mesh.topology().genus,
        num_curves: set.len(),
        heights,
        surface_area: crate::mesh::surface_area(&mesh),
        obtuse_fraction: weights.negative_fraction(),
        sweeps: map.sweeps(),
        converged: map.converged,
        skipped_moves: map.skipped_moves,
        energy_trace: map.trace.clone(),
        cylinders: reports,
        features: features.features.clone(),
    };
    Ok(Analysis { mesh, graph, map, cylinders, features, report })
}

/// One input surface of a batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub mesh: PathBuf,
    /// Curve file; may be omitted for bordered meshes, whose seams are used.
    #[serde(default)]
    pub curves: Option<PathBuf>,
    /// Defaults to the mesh file stem.
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub label: String,
}

impl SurfaceSpec {
    pub fn subject_id(&self) -> String {
        self.subject.clone().unwrap_or_else(|| {
            self.mesh.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub surfaces: Vec<SurfaceSpec>,
    #[serde(flatten)]
    pub pipeline: PipelineOptions,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_seed() -> u64 {
    crate::svm::DEFAULT_FOLD_SEED
}
fn default_c() -> f64 {
    1.0
}
fn default_folds() -> usize {
    10
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        // Relative paths are taken from the config file's directory.
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut config.surfaces {
            s.mesh = base.join(&s.mesh);
            s.curves = s.curves.as_ref().map(|c| base.join(c));
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.surfaces.is_empty() {
            return Err(Error::Config("no surfaces listed".into()));
        }
        if !(self.pipeline.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.pipeline.tol)));
        }
        if let HeightPolicy::Explicit(h) = &self.pipeline.heights {
            if let Some(bad) = h.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("explicit heights must be positive, got {bad}")));
            }
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        for s in &self.surfaces {
            for p in std::iter::once(&s.mesh).chain(&s.curves) {
                if !p.is_file() {
                    return Err(Error::io(p, "no such file"));
                }
            }
        }
        Ok(())
    }
}

/// Loads one surface and runs the pipeline on it.
pub fn run_surface(spec: &SurfaceSpec, options: &PipelineOptions) -> Result<Analysis, Error> {
    let mesh = load_mesh_auto(&spec.mesh)?;
    let curves = match &spec.curves {
        Some(path) => load_curves(path)?.iter().map(|c| c.resolve(&mesh)).collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    analyze(&spec.subject_id(), &spec.label, &mesh, &curves, options)
}

/// Feature CSV plus per-surface diagnostics. Surfaces run in parallel; the
/// output follows the config order, and the first failing surface (in
/// that order) is reported.
pub fn run_features(config: &RunConfig) -> Result<(String, serde_json::Value), Error> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    let iter = config.surfaces.par_iter();
    #[cfg(not(feature = "parallel"))]
    let iter = config.surfaces.iter();
    let results: Vec<Result<Analysis, Error>> = iter.map(|s| run_surface(s, &config.pipeline)).collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for r in results {
        let a = r?;
        rows.push(a.features);
        reports.push(a.report);
    }
    let csv = write_features_csv(&rows)?;
    let diagnostics = serde_json::json!({ "config": config, "surfaces": reports });
    Ok((csv, diagnostics))
}

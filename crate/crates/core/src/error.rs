use serde_json::json;
use thiserror::Error;

use crate::features::FeatureError;
use crate::foliation::FoliationError;
use crate::generate::GenerateError;
use crate::graph::GraphError;
use crate::harmonic::HarmonicError;
use crate::mesh::MeshError;
use crate::pants::PantsError;
use crate::svm::ClassifyError;

/// Any failure of the end-to-end pipeline, tagged with the stage it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Pants(#[from] PantsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error("relaxation did not converge in {sweeps} sweeps")]
    NotConverged { sweeps: usize },
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("config: {0}")]
    Config(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), message: e.to_string() }
    }

    /// Pipeline stage the error comes from.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Mesh(_) | Error::Io { .. } => "mesh_core",
            Error::Pants(_) => "curves_pants",
            Error::Graph(_) => "metric_graph",
            Error::Harmonic(_) | Error::NotConverged { .. } => "harmonic_map",
            Error::Foliation(_) | Error::Feature(_) => "foliation_features",
            Error::Classify(_) => "classifier",
            Error::Generate(_) | Error::Config(_) => "cli_pipeline",
        }
    }

    /// 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Harmonic(_) | Error::NotConverged { .. } | Error::Foliation(_) => 3,
            Error::Graph(GraphError::UnboundedObjective(_) | GraphError::NoNeighbors) => 3,
            _ => 2,
        }
    }

    /// Name of the innermost error variant, e.g. `NonManifold`.
    pub fn kind(&self) -> String {
        let debug = format!("{self:?}");
        let mut names = debug.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty());
        let outer = names.next().unwrap_or_default().to_string();
        let wrapped = matches!(
            self,
            Error::Mesh(_)
                | Error::Pants(_)
                | Error::Graph(_)
                | Error::Harmonic(_)
                | Error::Foliation(_)
                | Error::Feature(_)
                | Error::Classify(_)
                | Error::Generate(_)
        );
        if wrapped {
            names.next().map(str::to_string).unwrap_or(outer)
        } else {
            outer
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": self.to_string(),
            "kind": self.kind(),
            "module": self.module(),
            "exit_code": self.exit_code(),
        })
    }
}

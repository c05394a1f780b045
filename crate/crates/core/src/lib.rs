//! Conformal cylinder features of closed surfaces: a pants-type
//! decomposition along admissible curves, a harmonic map to the
//! decomposition graph, and the heights and circumferences of the flat
//! cylinders it induces.

pub mod error;
pub mod features;
pub mod foliation;
pub mod generate;
pub mod graph;
pub mod harmonic;
pub mod mesh;
pub mod pants;
pub mod pipeline;
pub mod svm;

pub use error::Error;

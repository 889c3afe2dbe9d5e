//! Forest complexity of dependency graphs, McDiarmid-type concentration
//! bounds for graph-dependent random variables, and Monte Carlo checks of
//! those bounds.

pub mod bounds;
pub mod chromatic;
pub mod complexity;
pub mod error;
pub mod graph;
pub mod simulation;
pub mod stability;

pub use error::{Error, Result};
pub use graph::{Graph, VertexPartition};

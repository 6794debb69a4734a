//! Renormalization of resistance forms on Misiurewicz-Sierpinski Julia sets
//! and on a two-cell graph-directed model.
//!
//! The crate is organised bottom-up: [`angle`] handles the exact circle
//! arithmetic, [`structure`] builds the glued vertex sets, [`network`] holds
//! conductance forms and their reductions, [`renorm`] the renormalization map
//! and eigenform solver, [`relations`] the preserved relations and the
//! existence/uniqueness criteria, and [`graph_directed`] the graph-directed
//! variant.

pub mod angle;
pub mod error;
pub mod graph_directed;
pub mod network;
pub mod partition;
pub mod refinement;
pub mod relations;
pub mod renorm;
pub mod structure;
mod unionfind;

pub use angle::{parse_ratio, Angle, AngleContext, ContextJson};
pub use error::{Error, Result};
pub use graph_directed::{Existence, GdStructure};
pub use network::{ConductanceForm, FormJson};
pub use partition::{Partition, RelationJson};
pub use refinement::Refinement;
pub use relations::{Ratios, Side, Verdict};
pub use renorm::{HarmonicStructure, NonConvergence, SolveOptions};
pub use structure::{GluedVertexSet, MsStructure};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

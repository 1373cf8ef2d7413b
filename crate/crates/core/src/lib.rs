//! Large-agent multi-agent path finding on grids: footprint geometry,
//! per-agent traversability graphs, relation-based decomposition into
//! independently solvable levels, and a conflict-based search solver.

pub mod geometry;
pub mod map;
pub mod instance;
pub mod relation;
pub mod scc;
pub mod subgraph;
pub mod decompose;
pub mod problem;
pub mod solution;
pub mod cbs;
pub mod validate;
pub mod layered;

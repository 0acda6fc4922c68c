//! Exact and heuristic tools for the degree-constrained optimum
//! communication spanning tree problem.

pub mod graph;
pub mod instance;
pub mod model;
pub mod formulations;
pub mod milp;
pub mod exact;
pub mod heuristics;
pub mod bench;

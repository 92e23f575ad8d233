//! Post-optimization of multi-agent path-finding schedules.
//!
//! Given a feasible schedule, [`pipeline::optimize`] removes as many move
//! actions as possible by collapsing closed subwalks (an agent leaving a vertex
//! and coming back) into waits, without creating collisions. The selection is an
//! exact 0/1 program solved by a built-in branch-and-bound.

pub mod candidates;
pub mod graph;
pub mod grid;
pub mod ilp;
pub mod instance;
pub mod interval;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod planner;
pub mod reduction;
pub mod relations;
pub mod schedule;

#[cfg(test)]
mod testing;

pub use candidates::{
    aba_prefilter, generate_candidates, CandidateMode, CandidateSet, CollapseAction,
};
pub use graph::{Graph, GraphError, GraphJson, Vertex, VertexId};
pub use grid::{grid_to_graph, load_map, GridMap, MapParseError};
pub use ilp::{apply_solution, build_model, solve_exact, solve_greedy, CollapseSolution, IlpModel};
pub use instance::{Instance, InstanceError};
pub use metrics::{agent_density, cost_moves, isr, soc, CostMetrics};
pub use oracle::{brute_force_collapse, brute_force_mis, OracleError, OracleResult};
pub use pipeline::{optimize, OptimizeConfig, OptimizeError, OptimizeOutcome, OptimizeStats};
pub use planner::{
    noisy_rollout, prioritized_plan, random_grid, sample_endpoints, PlanError, PlanRequest,
};
pub use reduction::{reduce, verify_roundtrip, ReductionError, ReductionOutput, RoundtripReport};
pub use relations::{build_relations, RelationSet};
pub use schedule::{
    validate, AgentRecord, FeasibilityReport, Schedule, ValidationMode, Violation, ViolationKind,
};

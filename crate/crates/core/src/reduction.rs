//! Independent Set to collapse-instance compiler.
//!
//! For a graph `H = (U, F)` with `m = |F|` edges and a target `K`, every vertex
//! `u` becomes a vertex-agent that walks `x_u -> p_u -> ... -> p_u -> x_u`, and
//! every edge `e_r = (u, v)` becomes an edge-agent that idles at `a_e`, runs the
//! block `a_e, x_u, b_e, c_e, a_e, x_v, b_e` starting at `7r - 7`, then idles at
//! `b_e`. Collapsing a vertex-agent saves 2 moves and parks it on `x_u` for the
//! whole horizon; each edge-agent can save 4 moves by collapsing either half of
//! its block, and the half it keeps must avoid the parked endpoint. Hence `H` has
//! an independent set of size `K` iff the optimum costs at most
//! `c0 - 4m - 2K`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{generate_candidates, CandidateMode};
use crate::graph::{Graph, GraphError, VertexId};
use crate::ilp::{build_model, solve_exact};
use crate::metrics::cost_moves;
use crate::oracle::{brute_force_mis, OracleError};
use crate::relations::{build_relations, RelationError};
use crate::schedule::{AgentRecord, Schedule, ScheduleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("input graph has no edges; the answer is trivially |U| >= K")]
    NoEdges,
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("solver did not prove optimality within {0:?}")]
    NotCertified(Duration),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Relations(#[from] RelationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionOutput {
    pub graph: Graph,
    pub schedule: Schedule,
    pub beta: usize,
    pub c0: usize,
    pub m: usize,
    pub k: usize,
    /// `(H vertex, agent index)` for every vertex-agent.
    pub vertex_agents: Vec<(VertexId, usize)>,
    /// `((u, v), agent index)` for every edge-agent, in edge order.
    pub edge_agents: Vec<((VertexId, VertexId), usize)>,
}

impl ReductionOutput {
    pub fn horizon(&self) -> usize {
        self.schedule.horizon()
    }

    /// Block start of the edge-agent for edge index `r` (1-based).
    pub fn block_start(r: usize) -> usize {
        7 * r - 7
    }
}

fn id(name: String) -> VertexId {
    VertexId::new(name).expect("generated names are non-empty")
}

pub fn reduce(h: &Graph, k: usize) -> Result<ReductionOutput, ReductionError> {
    let m = h.edge_count();
    if m == 0 {
        return Err(ReductionError::NoEdges);
    }
    if k == 0 || k > h.len() {
        return Err(ReductionError::KOutOfRange { k, n: h.len() });
    }
    let horizon = 7 * m - 1;
    let x = |u: &VertexId| id(format!("x_{u}"));
    let p = |u: &VertexId| id(format!("p_{u}"));
    let [a, b, c] = ["a", "b", "c"].map(|tag| move |r: usize| id(format!("{tag}_e{r}")));

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for u in h.vertices().map(|v| h.name(v)) {
        vertices.extend([x(u), p(u)]);
        edges.push((x(u), p(u)));
    }
    for (r, &(u, v)) in h.edges().iter().enumerate() {
        let r = r + 1;
        let (xu, xv) = (x(h.name(u)), x(h.name(v)));
        vertices.extend([a(r), b(r), c(r)]);
        edges.extend([
            (a(r), xu.clone()),
            (xu, b(r)),
            (b(r), c(r)),
            (c(r), a(r)),
            (a(r), xv.clone()),
            (xv, b(r)),
        ]);
    }
    let graph = Graph::new(vertices, edges)?;
    let vid = |name: &VertexId| graph.vertex(name);

    let mut agents = Vec::new();
    let mut vertex_agents = Vec::new();
    for u in h.vertices().map(|v| h.name(v)) {
        let (xu, pu) = (vid(&x(u))?, vid(&p(u))?);
        let mut path = vec![pu; horizon + 1];
        path[0] = xu;
        path[horizon] = xu;
        vertex_agents.push((u.clone(), agents.len()));
        agents.push(AgentRecord::new(format!("A_{u}"), xu, xu, path));
    }
    let mut edge_agents = Vec::new();
    for (r, &(u, v)) in h.edges().iter().enumerate() {
        let r = r + 1;
        let theta = ReductionOutput::block_start(r);
        let (ar, br) = (vid(&a(r))?, vid(&b(r))?);
        let block = [
            ar,
            vid(&x(h.name(u)))?,
            br,
            vid(&c(r))?,
            ar,
            vid(&x(h.name(v)))?,
            br,
        ];
        let path: Vec<_> = (0..=horizon)
            .map(|t| match t {
                t if t <= theta => ar,
                t if t >= theta + 6 => br,
                t => block[t - theta],
            })
            .collect();
        edge_agents.push(((h.name(u).clone(), h.name(v).clone()), agents.len()));
        agents.push(AgentRecord::new(format!("B_e{r}"), ar, br, path));
    }

    let schedule = Schedule::new(horizon, agents)?;
    let c0 = cost_moves(&schedule);
    debug_assert_eq!(c0, 2 * h.len() + 6 * m);
    Ok(ReductionOutput {
        graph,
        schedule,
        beta: c0 - 4 * m - 2 * k,
        c0,
        m,
        k,
        vertex_agents,
        edge_agents,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub k: usize,
    pub alpha: usize,
    pub opt: usize,
    pub beta: usize,
    pub c0: usize,
    pub m: usize,
    /// `(opt <= beta) == (alpha >= k)`.
    pub decision_agrees: bool,
    /// `alpha == (c0 - opt - 4m) / 2`.
    pub alpha_recovered: bool,
}

impl RoundtripReport {
    pub fn agrees(&self) -> bool {
        self.decision_agrees && self.alpha_recovered
    }
}

/// Solves the compiled instance exactly and compares against brute-force independence number.
pub fn verify_roundtrip(
    h: &Graph,
    k: usize,
    time_limit: Duration,
) -> Result<RoundtripReport, ReductionError> {
    let out = reduce(h, k)?;
    let alpha = brute_force_mis(h)?;
    let set = generate_candidates(&out.schedule, CandidateMode::Reduced);
    let relations = build_relations(&out.schedule, &set)?;
    let model = build_model(&relations, &set);
    let solution = solve_exact(&model, time_limit);
    if !solution.optimal {
        return Err(ReductionError::NotCertified(time_limit));
    }
    let opt = out.c0 - solution.saving as usize;
    let recovered = (out.c0 as i64 - opt as i64 - 4 * out.m as i64) as f64 / 2.0;
    Ok(RoundtripReport {
        k,
        alpha,
        opt,
        beta: out.beta,
        c0: out.c0,
        m: out.m,
        decision_agrees: (opt <= out.beta) == (alpha >= k),
        alpha_recovered: recovered == alpha as f64,
    })
}

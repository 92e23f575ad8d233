//! Hand-written fixtures shared by unit tests.

use crate::graph::{Graph, Vertex, VertexId};
use crate::schedule::{AgentRecord, Schedule};

pub(crate) fn named_graph(vertices: &[&str], edges: &[(&str, &str)]) -> Graph {
    Graph::new(
        vertices.iter().map(|v| VertexId::new(*v).unwrap()),
        edges
            .iter()
            .map(|(u, v)| (VertexId::new(*u).unwrap(), VertexId::new(*v).unwrap())),
    )
    .unwrap()
}

/// Path graph v0 - v1 - ... - v(n-1).
pub(crate) fn line_graph(n: usize) -> Graph {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let vs: Vec<&str> = names.iter().map(String::as_str).collect();
    let es: Vec<(&str, &str)> = vs.windows(2).map(|w| (w[0], w[1])).collect();
    named_graph(&vs, &es)
}

/// Schedule over named vertices; start = first, goal = last.
pub(crate) fn schedule_of(g: &Graph, paths: &[&[&str]]) -> Schedule {
    let paths: Vec<Vec<Vertex>> = paths
        .iter()
        .map(|p| p.iter().map(|v| g.vertex_by_name(v).unwrap()).collect())
        .collect();
    Schedule::from_paths(paths).unwrap()
}

pub(crate) fn with_names(s: Schedule, names: &[&str]) -> Schedule {
    let agents: Vec<AgentRecord> = s
        .agents()
        .iter()
        .zip(names)
        .map(|(a, n)| AgentRecord::new(*n, a.start, a.goal, a.path.clone()))
        .collect();
    Schedule::new(s.horizon(), agents).unwrap()
}

/// The two-vertex Independent Set construction, agents A1, A2, B.
pub(crate) fn fig2() -> (Graph, Schedule) {
    let g = named_graph(
        &["x_1", "p_1", "x_2", "p_2", "a_e1", "b_e1", "c_e1"],
        &[
            ("x_1", "p_1"),
            ("x_2", "p_2"),
            ("a_e1", "x_1"),
            ("x_1", "b_e1"),
            ("b_e1", "c_e1"),
            ("c_e1", "a_e1"),
            ("a_e1", "x_2"),
            ("x_2", "b_e1"),
        ],
    );
    let s = schedule_of(
        &g,
        &[
            &["x_1", "p_1", "p_1", "p_1", "p_1", "p_1", "x_1"],
            &["x_2", "p_2", "p_2", "p_2", "p_2", "p_2", "x_2"],
            &["a_e1", "x_1", "b_e1", "c_e1", "a_e1", "x_2", "b_e1"],
        ],
    );
    (g, with_names(s, &["A1", "A2", "B_e1"]))
}

/// Graph A-B, C-A, A-D used by the two-agent dependency examples.
pub(crate) fn star_graph() -> Graph {
    named_graph(&["A", "B", "C", "D"], &[("A", "B"), ("C", "A"), ("A", "D")])
}

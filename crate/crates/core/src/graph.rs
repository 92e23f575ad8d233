//! Undirected workspace graph with implicit self-loops.
//!
//! Vertices are interned: every [`VertexId`] gets a dense [`Vertex`] handle, and
//! schedules store handles rather than names. Waiting is always allowed, so
//! self-loop edges are never stored.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex name must be non-empty")]
    EmptyVertexName,
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex handle {0} is out of range")]
    VertexOutOfRange(u32),
}

/// Name of a vertex. Grid vertices use the canonical form `r<row>c<col>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(name: impl Into<String>) -> Result<Self, GraphError> {
        let name = name.into();
        if name.is_empty() {
            return Err(GraphError::EmptyVertexName);
        }
        Ok(Self(name))
    }

    pub fn grid(row: usize, col: usize) -> Self {
        Self(format!("r{row}c{col}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Parses the `r<row>c<col>` form back into grid coordinates.
    pub fn grid_coords(&self) -> Option<(usize, usize)> {
        let rest = self.0.strip_prefix('r')?;
        let (row, col) = rest.split_once('c')?;
        let valid = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !valid(row) || !valid(col) {
            return None;
        }
        Some((row.parse().ok()?, col.parse().ok()?))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Dense handle of a vertex inside one [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(pub u32);

impl Vertex {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    names: Vec<VertexId>,
    lookup: HashMap<VertexId, Vertex>,
    // Sorted neighbour lists, no self entries.
    adjacency: Vec<Vec<Vertex>>,
    // Edges in insertion order, deduplicated, each stored once.
    edges: Vec<(Vertex, Vertex)>,
}

impl Graph {
    /// Builds a graph from vertex names and unordered edges.
    ///
    /// Duplicate edges collapse to one and explicit self-loops are dropped,
    /// since waiting is implicit. Edge order is preserved otherwise.
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Self, GraphError>
    where
        V: IntoIterator<Item = VertexId>,
        E: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut names = Vec::new();
        let mut lookup = HashMap::new();
        for name in vertices {
            if lookup.contains_key(&name) {
                return Err(GraphError::DuplicateVertex(name.0));
            }
            lookup.insert(name.clone(), Vertex(names.len() as u32));
            names.push(name);
        }
        let mut graph = Self {
            adjacency: vec![Vec::new(); names.len()],
            names,
            lookup,
            edges: Vec::new(),
        };
        let mut seen = HashSet::new();
        for (u, v) in edges {
            let u = graph.vertex(&u)?;
            let v = graph.vertex(&v)?;
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                graph.edges.push((u, v));
                graph.adjacency[u.index()].push(v);
                graph.adjacency[v.index()].push(u);
            }
        }
        for list in &mut graph.adjacency {
            list.sort_unstable();
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.names.len() as u32).map(Vertex)
    }

    pub fn vertex(&self, name: &VertexId) -> Result<Vertex, GraphError> {
        self.lookup
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(name.0.clone()))
    }

    /// Looks a vertex up by its raw name.
    pub fn vertex_by_name(&self, name: &str) -> Result<Vertex, GraphError> {
        self.vertex(&VertexId(name.to_string()))
    }

    pub fn name(&self, v: Vertex) -> &VertexId {
        &self.names[v.index()]
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.index() < self.names.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v.index()]
    }

    /// Edges in insertion order as `(first, second)` of the original pair.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    /// True iff a single timestep can take an agent from `u` to `v`.
    #[inline]
    pub fn adjacent(&self, u: Vertex, v: Vertex) -> bool {
        u == v || self.adjacency[u.index()].binary_search(&v).is_ok()
    }

    pub fn has_edge(&self, u: &VertexId, v: &VertexId) -> Result<bool, GraphError> {
        let u = self.vertex(u)?;
        let v = self.vertex(v)?;
        Ok(self.adjacent(u, v))
    }

    /// Breadth-first hop distances from `source`; `None` marks unreachable vertices.
    pub fn bfs_distances(&self, source: Vertex) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[source.index()] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u.index()].unwrap_or(0);
            for &w in self.neighbors(u) {
                if dist[w.index()].is_none() {
                    dist[w.index()] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.names.iter().map(|n| n.0.clone()).collect(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| [self.name(u).0.clone(), self.name(v).0.clone()])
                .collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self, GraphError> {
        let vertices = json
            .vertices
            .iter()
            .map(|v| VertexId::new(v.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let edges = json
            .edges
            .iter()
            .map(|[u, v]| Ok((VertexId::new(u.clone())?, VertexId::new(v.clone())?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Self::new(vertices, edges)
    }
}

/// Serialized form: `{"vertices":[..], "edges":[[u,v],..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

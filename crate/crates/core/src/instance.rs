//! Instance files: a graph (inline or via a map file) plus a schedule.
//!
//! ```json
//! {"graph": {"vertices": [...], "edges": [[u, v], ...]} | {"map_file": "path"},
//!  "horizon": T,
//!  "agents": [{"name": "...", "start": "...", "goal": "...", "path": ["...", ...]}]}
//! ```
//! Relative map paths resolve against the directory of the instance file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, GraphJson};
use crate::grid::{load_map, GridMap, MapParseError};
use crate::schedule::{AgentRecord, Schedule, ScheduleError};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("map file {path}: {source}")]
    Map {
        path: PathBuf,
        #[source]
        source: MapParseError,
    },
    #[error("agent `{agent}`: {source}")]
    Vertex {
        agent: String,
        #[source]
        source: GraphError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    MapFile { map_file: String },
    Inline(GraphJson),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentJson {
    pub name: String,
    pub start: String,
    pub goal: String,
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub graph: GraphSource,
    pub horizon: usize,
    pub agents: Vec<AgentJson>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub graph: Graph,
    /// Present when the graph came from a map file.
    pub grid: Option<GridMap>,
    /// The map reference as written in the file, kept for re-serialization.
    pub map_file: Option<String>,
    pub schedule: Schedule,
}

impl Instance {
    pub fn on_graph(graph: Graph, schedule: Schedule) -> Self {
        Self {
            graph,
            grid: None,
            map_file: None,
            schedule,
        }
    }

    pub fn on_map(grid: GridMap, map_file: impl Into<String>, schedule: Schedule) -> Self {
        Self {
            graph: grid.to_graph(),
            grid: Some(grid),
            map_file: Some(map_file.into()),
            schedule,
        }
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self, InstanceError> {
        let json: InstanceJson = serde_json::from_str(text)?;
        Self::from_json(&json, base_dir)
    }

    pub fn from_json(json: &InstanceJson, base_dir: &Path) -> Result<Self, InstanceError> {
        let (graph, grid, map_file) = match &json.graph {
            GraphSource::Inline(g) => (Graph::from_json(g)?, None, None),
            GraphSource::MapFile { map_file } => {
                let path = base_dir.join(map_file);
                let text = fs::read_to_string(&path).map_err(|source| InstanceError::Io {
                    path: path.clone(),
                    source,
                })?;
                let grid = load_map(&text).map_err(|source| InstanceError::Map { path, source })?;
                (grid.to_graph(), Some(grid), Some(map_file.clone()))
            }
        };
        let agents = json
            .agents
            .iter()
            .map(|a| {
                let lookup = |name: &str| {
                    graph
                        .vertex_by_name(name)
                        .map_err(|source| InstanceError::Vertex {
                            agent: a.name.clone(),
                            source,
                        })
                };
                Ok(AgentRecord::new(
                    a.name.clone(),
                    lookup(&a.start)?,
                    lookup(&a.goal)?,
                    a.path.iter().map(|v| lookup(v)).collect::<Result<_, _>>()?,
                ))
            })
            .collect::<Result<Vec<_>, InstanceError>>()?;
        let schedule = Schedule::new(json.horizon, agents)?;
        Ok(Self {
            graph,
            grid,
            map_file,
            schedule,
        })
    }

    pub fn to_json(&self) -> InstanceJson {
        let name = |v| self.graph.name(v).to_string();
        InstanceJson {
            graph: match &self.map_file {
                Some(map_file) => GraphSource::MapFile {
                    map_file: map_file.clone(),
                },
                None => GraphSource::Inline(self.graph.to_json()),
            },
            horizon: self.schedule.horizon(),
            agents: self
                .schedule
                .agents()
                .iter()
                .map(|a| AgentJson {
                    name: a.name.clone(),
                    start: name(a.start),
                    goal: name(a.goal),
                    path: a.path.iter().map(|&v| name(v)).collect(),
                })
                .collect(),
        }
    }

    /// Same instance with a different schedule over the same graph.
    pub fn with_schedule(&self, schedule: Schedule) -> Self {
        Self {
            schedule,
            ..self.clone()
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("instance JSON serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        fs::write(path, self.to_json_string() + "\n").map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

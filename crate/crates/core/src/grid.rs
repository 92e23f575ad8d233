//! Grid maps in the octile text format and their 4-connected graphs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("map line {line}: {message}")]
pub struct MapParseError {
    pub line: usize,
    pub message: String,
}

impl MapParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GridMap {
    pub height: usize,
    pub width: usize,
    pub blocked: BTreeSet<(usize, usize)>,
}

impl GridMap {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            blocked: BTreeSet::new(),
        }
    }

    pub fn in_bounds(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width
    }

    pub fn is_free(&self, row: usize, col: usize) -> bool {
        self.in_bounds(row, col) && !self.blocked.contains(&(row, col))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height)
            .flat_map(move |r| (0..self.width).map(move |c| (r, c)))
            .filter(|&(r, c)| !self.blocked.contains(&(r, c)))
    }

    pub fn free_count(&self) -> usize {
        self.height * self.width - self.blocked.len()
    }

    /// Renders the map in the same format [`load_map`] reads.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "type octile");
        let _ = writeln!(out, "height {}", self.height);
        let _ = writeln!(out, "width {}", self.width);
        let _ = writeln!(out, "map");
        for r in 0..self.height {
            for c in 0..self.width {
                out.push(if self.blocked.contains(&(r, c)) {
                    '@'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    /// Free cells become `r<row>c<col>` vertices in row-major order; every
    /// pair of horizontally or vertically adjacent free cells is an edge.
    pub fn to_graph(&self) -> Graph {
        let vertices: Vec<VertexId> = self
            .free_cells()
            .map(|(r, c)| VertexId::grid(r, c))
            .collect();
        let mut edges = Vec::new();
        for (r, c) in self.free_cells() {
            if self.is_free(r, c + 1) {
                edges.push((VertexId::grid(r, c), VertexId::grid(r, c + 1)));
            }
            if self.is_free(r + 1, c) {
                edges.push((VertexId::grid(r, c), VertexId::grid(r + 1, c)));
            }
        }
        Graph::new(vertices, edges)
            .expect("grid vertices are unique and edges reference free cells")
    }
}

pub fn grid_to_graph(map: &GridMap) -> Graph {
    map.to_graph()
}

fn header_value(
    line: Option<(usize, &str)>,
    key: &str,
    expected_line: usize,
) -> Result<usize, MapParseError> {
    let (no, text) =
        line.ok_or_else(|| MapParseError::new(expected_line, format!("missing `{key}` header")))?;
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v
            .parse()
            .map_err(|_| MapParseError::new(no, format!("invalid {key} `{v}`"))),
        _ => Err(MapParseError::new(
            no,
            format!("expected `{key} <n>`, found `{text}`"),
        )),
    }
}

/// Parses a map file: `type octile`, `height H`, `width W`, `map`, then H rows
/// of W cells where `.` is free and `@` or `T` is an obstacle.
pub fn load_map(text: &str) -> Result<GridMap, MapParseError> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .enumerate()
        .map(|(i, l)| (i + 1, l));

    match lines.next() {
        Some((_, l)) if l.split_whitespace().eq(["type", "octile"]) => {}
        Some((no, l)) => {
            return Err(MapParseError::new(
                no,
                format!("expected `type octile`, found `{l}`"),
            ))
        }
        None => return Err(MapParseError::new(1, "empty map file")),
    }
    let height = header_value(lines.next(), "height", 2)?;
    let width = header_value(lines.next(), "width", 3)?;
    match lines.next() {
        Some((_, "map")) => {}
        Some((no, l)) => {
            return Err(MapParseError::new(
                no,
                format!("expected `map`, found `{l}`"),
            ))
        }
        None => return Err(MapParseError::new(4, "missing `map` line")),
    }

    let mut map = GridMap::new(height, width);
    for row in 0..height {
        let (no, l) = lines.next().ok_or_else(|| {
            MapParseError::new(5 + row, format!("expected {height} rows, found {row}"))
        })?;
        let cells: Vec<char> = l.chars().collect();
        if cells.len() != width {
            return Err(MapParseError::new(
                no,
                format!("row has {} cells, expected {width}", cells.len()),
            ));
        }
        for (col, ch) in cells.into_iter().enumerate() {
            match ch {
                '.' => {}
                '@' | 'T' => {
                    map.blocked.insert((row, col));
                }
                other => {
                    return Err(MapParseError::new(
                        no,
                        format!("unknown cell character `{other}`"),
                    ))
                }
            }
        }
    }
    if let Some((no, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(MapParseError::new(
            no,
            format!("unexpected content after {height} rows: `{l}`"),
        ));
    }
    Ok(map)
}

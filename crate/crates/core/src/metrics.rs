//! Cost and quality metrics of a schedule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::grid::GridMap;
use crate::schedule::Schedule;

pub const DEFAULT_FOV: usize = 11;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("agent density needs grid vertices: `{0}` is not a free cell of the map")]
    NotGrid(String),
    #[error("field of view must be a positive odd cell count, got {0}")]
    BadFov(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMetrics {
    pub moves: usize,
    pub soc: usize,
    pub isr: f64,
    pub agent_density: Option<f64>,
}

impl CostMetrics {
    pub fn of(s: &Schedule) -> Self {
        Self {
            moves: cost_moves(s),
            soc: soc(s),
            isr: isr(s),
            agent_density: None,
        }
    }
}

/// Number of (agent, t) with a position change between t and t+1. Waits are free.
pub fn cost_moves(s: &Schedule) -> usize {
    s.agents().iter().map(|a| a.moves()).sum()
}

/// Sum of arrival times.
pub fn soc(s: &Schedule) -> usize {
    s.agents().iter().map(|a| a.arrival_time()).sum()
}

/// Fraction of agents resting at their goal at the horizon. Empty schedules count as solved.
pub fn isr(s: &Schedule) -> f64 {
    if s.is_empty() {
        return 1.0;
    }
    s.agents().iter().filter(|a| a.rests_at_goal()).count() as f64 / s.len() as f64
}

/// Mean over (agent, timestep) of agents inside the agent's `fov` x `fov` window
/// (self included) divided by free cells inside it. Windows are clipped at the border.
pub fn agent_density(
    s: &Schedule,
    g: &Graph,
    m: &GridMap,
    fov: usize,
) -> Result<f64, MetricsError> {
    if fov == 0 || fov.is_multiple_of(2) {
        return Err(MetricsError::BadFov(fov));
    }
    if s.is_empty() {
        return Ok(0.0);
    }
    let cells: Vec<(usize, usize)> = g
        .vertices()
        .map(|v| {
            g.name(v)
                .grid_coords()
                .filter(|&(r, c)| m.is_free(r, c))
                .ok_or_else(|| MetricsError::NotGrid(g.name(v).to_string()))
        })
        .collect::<Result<_, _>>()?;

    // Free-cell prefix sums over the map.
    let w = m.width;
    let mut free = vec![0usize; (m.height + 1) * (w + 1)];
    for r in 0..m.height {
        for c in 0..w {
            free[(r + 1) * (w + 1) + c + 1] =
                free[r * (w + 1) + c + 1] + free[(r + 1) * (w + 1) + c] - free[r * (w + 1) + c]
                    + usize::from(m.is_free(r, c));
        }
    }
    let half = fov / 2;
    let window = |r: usize, c: usize| {
        (
            r.saturating_sub(half),
            (r + half).min(m.height - 1),
            c.saturating_sub(half),
            (c + half).min(w - 1),
        )
    };

    let mut total = 0.0;
    let mut samples = 0usize;
    let mut positions = Vec::with_capacity(s.len());
    for t in 0..=s.horizon() {
        positions.clear();
        positions.extend(s.paths().map(|p| cells[p[t].index()]));
        for &(r, c) in &positions {
            let (r0, r1, c0, c1) = window(r, c);
            let free_here = free[(r1 + 1) * (w + 1) + c1 + 1] + free[r0 * (w + 1) + c0]
                - free[r0 * (w + 1) + c1 + 1]
                - free[(r1 + 1) * (w + 1) + c0];
            let agents_here = positions
                .iter()
                .filter(|&&(ar, ac)| (r0..=r1).contains(&ar) && (c0..=c1).contains(&ac))
                .count();
            total += agents_here as f64 / free_here as f64;
            samples += 1;
        }
    }
    Ok(total / samples as f64)
}

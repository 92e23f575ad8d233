use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mapf_collapse::planner::{
    noisy_rollout, prioritized_plan, random_grid, sample_endpoints, PlanRequest, RNG_NAME,
};
use mapf_collapse::{cost_moves, isr, load_map, soc, GridMap, Instance};
use serde::Serialize;

use crate::{emit, to_json, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    Plan,
    Rollout,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Map file, or `random:HxW[:obstacle_ratio]` (ratio defaults to 0.2).
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub agents: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability of a random action per step (rollout mode).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Horizon cap.
    #[arg(long, default_value_t = 256)]
    pub horizon: usize,
    #[arg(long, value_enum, default_value_t = GenMode::Rollout)]
    pub mode: GenMode,
    /// Instance output path; a random map is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomMapSpec {
    pub height: usize,
    pub width: usize,
    pub obstacle_ratio: f64,
}

impl RandomMapSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let bad = || format!("expected random:HxW[:ratio], got `{s}`");
        let rest = s.strip_prefix("random:").ok_or_else(bad)?;
        let mut parts = rest.split(':');
        let dims = parts.next().ok_or_else(bad)?;
        let (h, w) = dims.split_once('x').ok_or_else(bad)?;
        let height = h.parse().map_err(|_| bad())?;
        let width = w.parse().map_err(|_| bad())?;
        let obstacle_ratio = match parts.next() {
            Some(r) => r.parse().map_err(|_| bad())?,
            None => 0.2,
        };
        if parts.next().is_some()
            || !(0.0..1.0).contains(&obstacle_ratio)
            || height == 0
            || width == 0
        {
            return Err(bad());
        }
        Ok(Self {
            height,
            width,
            obstacle_ratio,
        })
    }

    pub fn file_name(&self, seed: u64) -> String {
        let pct = (self.obstacle_ratio * 100.0).round() as u32;
        format!("random-{}-{}-{pct}-seed{seed}.map", self.height, self.width)
    }
}

#[derive(Debug, Serialize)]
struct GenSummary<'a> {
    rng: &'static str,
    seed: u64,
    mode: GenMode,
    noise: f64,
    agents: usize,
    horizon: usize,
    cost: usize,
    soc: usize,
    isr: f64,
    map_file: Option<&'a str>,
}

fn map_reference(map: &Path, out: Option<&Path>) -> String {
    let canon = |p: &Path| fs::canonicalize(p).ok();
    let map_dir = map
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if let Some(out) = out {
        let out_dir = out
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if canon(map_dir).is_some() && canon(map_dir) == canon(out_dir) {
            if let Some(name) = map.file_name() {
                return name.to_string_lossy().into_owned();
            }
        }
    }
    canon(map)
        .unwrap_or_else(|| map.to_path_buf())
        .to_string_lossy()
        .into_owned()
}

/// Builds the instance described by `args`; random maps are written when `args.out` is set.
pub fn generate(args: &GenArgs) -> Result<Instance, CliError> {
    let (grid, map_file): (GridMap, Option<String>) = if args.map.starts_with("random:") {
        let spec = RandomMapSpec::parse(&args.map).map_err(CliError::Usage)?;
        let grid = random_grid(spec.height, spec.width, spec.obstacle_ratio, args.seed);
        let name = match &args.out {
            Some(out) => {
                let name = spec.file_name(args.seed);
                let path = out.parent().unwrap_or(Path::new(".")).join(&name);
                fs::write(&path, grid.serialize())
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                Some(name)
            }
            None => None,
        };
        (grid, name)
    } else {
        let path = Path::new(&args.map);
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let grid =
            load_map(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        (grid, Some(map_reference(path, args.out.as_deref())))
    };
    let g = grid.to_graph();
    let (starts, goals) = sample_endpoints(&g, args.agents, args.seed)
        .map_err(|e| CliError::Refused(e.to_string()))?;
    let req = PlanRequest {
        starts,
        goals,
        horizon_cap: args.horizon,
        seed: args.seed,
        noise: args.noise,
    };
    let planned = match args.mode {
        GenMode::Plan => prioritized_plan(&g, &req),
        GenMode::Rollout => noisy_rollout(&g, &req),
    };
    let schedule = planned.map_err(|e| CliError::Refused(e.to_string()))?;
    Ok(match map_file {
        Some(name) => Instance::on_map(grid, name, schedule),
        None => Instance::on_graph(g, schedule),
    })
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let inst = generate(args)?;
    match &args.out {
        Some(path) => {
            inst.save(path)?;
            let s = &inst.schedule;
            let summary = GenSummary {
                rng: RNG_NAME,
                seed: args.seed,
                mode: args.mode,
                noise: args.noise,
                agents: s.len(),
                horizon: s.horizon(),
                cost: cost_moves(s),
                soc: soc(s),
                isr: isr(s),
                map_file: inst.map_file.as_deref(),
            };
            emit(&to_json(&summary), None, out)
        }
        None => emit(&(inst.to_json_string() + "\n"), None, out),
    }
}

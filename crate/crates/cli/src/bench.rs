use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use mapf_collapse::metrics::DEFAULT_FOV;
use mapf_collapse::pipeline::{optimize, OptimizeConfig};
use mapf_collapse::{agent_density, isr, Instance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{emit, to_json, CliError, OptimizeOpts};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Directory of instance JSON files.
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV output path; without it the CSV goes to stdout and the summary to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub opts: OptimizeOpts,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub n_agents: Option<usize>,
    pub horizon: Option<usize>,
    pub map_type: Option<String>,
    pub cost_before: Option<usize>,
    pub cost_after: Option<usize>,
    pub soc_before: Option<usize>,
    pub soc_after: Option<usize>,
    pub saving_ratio: Option<f64>,
    pub isr: Option<f64>,
    pub agent_density: Option<f64>,
    pub n_actions: Option<usize>,
    pub n_mutex: Option<usize>,
    pub n_implications: Option<usize>,
    pub build_time_ms: Option<f64>,
    pub solve_time_ms: Option<f64>,
    pub optimal: Option<bool>,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn total_time_ms(&self) -> Option<f64> {
        Some(self.build_time_ms? + self.solve_time_ms?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub instances: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub mean_saving_ratio: Option<f64>,
    pub median_saving_ratio: Option<f64>,
    /// Share of succeeded instances whose build plus solve time is at most 1000 ms.
    pub within_1s_fraction: Option<f64>,
    pub optimal_fraction: Option<f64>,
    pub config: OptimizeConfig,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

fn map_type(inst: &Instance) -> String {
    match &inst.map_file {
        Some(f) => Path::new(f)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| f.clone()),
        None => "graph".to_string(),
    }
}

pub fn bench_one(path: &Path, config: &OptimizeConfig) -> BenchRow {
    let instance_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut row = BenchRow {
        instance_id,
        ..BenchRow::default()
    };
    let inst = match Instance::load(path) {
        Ok(inst) => inst,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let s = &inst.schedule;
    row.n_agents = Some(s.len());
    row.horizon = Some(s.horizon());
    row.map_type = Some(map_type(&inst));
    row.isr = Some(isr(s));
    if let Some(grid) = &inst.grid {
        row.agent_density = agent_density(s, &inst.graph, grid, DEFAULT_FOV).ok();
    }
    match optimize(s, &inst.graph, config) {
        Ok(out) => {
            let st = out.stats;
            row.cost_before = Some(st.cost_before);
            row.cost_after = Some(st.cost_after);
            row.soc_before = Some(st.soc_before);
            row.soc_after = Some(st.soc_after);
            row.saving_ratio = Some(st.saving_ratio);
            row.n_actions = Some(st.n_actions);
            row.n_mutex = Some(st.n_mutex);
            row.n_implications = Some(st.n_implications);
            row.build_time_ms = Some(st.build_time_ms);
            row.solve_time_ms = Some(st.solve_time_ms);
            row.optimal = Some(st.optimal);
        }
        Err(e) => row.error = Some(CliError::from(e).to_string().replace('\n', "; ")),
    }
    row
}

/// Optimizes every `*.json` file in `dir` on `jobs` threads; rows come back sorted by instance id.
pub fn run_bench(
    dir: &Path,
    config: &OptimizeConfig,
    jobs: usize,
) -> Result<(Vec<BenchRow>, BenchSummary), CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut rows: Vec<BenchRow> =
        pool.install(|| files.par_iter().map(|p| bench_one(p, config)).collect());
    rows.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let summary = summarize(&rows, config);
    Ok((rows, summary))
}

pub fn summarize(rows: &[BenchRow], config: &OptimizeConfig) -> BenchSummary {
    let ok: Vec<&BenchRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let ratios: Vec<f64> = ok.iter().filter_map(|r| r.saving_ratio).collect();
    let fraction = |pred: &dyn Fn(&BenchRow) -> bool| {
        (!ok.is_empty()).then(|| ok.iter().filter(|r| pred(r)).count() as f64 / ok.len() as f64)
    };
    BenchSummary {
        instances: rows.len(),
        succeeded: ok.len(),
        failed: rows.len() - ok.len(),
        mean_saving_ratio: (!ratios.is_empty())
            .then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        median_saving_ratio: median(&ratios),
        within_1s_fraction: fraction(&|r| r.total_time_ms().is_some_and(|t| t <= 1000.0)),
        optimal_fraction: fraction(&|r| r.optimal == Some(true)),
        config: *config,
    }
}

pub fn write_csv(rows: &[BenchRow], out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 18] = [
    "instance_id",
    "n_agents",
    "horizon",
    "map_type",
    "cost_before",
    "cost_after",
    "soc_before",
    "soc_after",
    "saving_ratio",
    "isr",
    "agent_density",
    "n_actions",
    "n_mutex",
    "n_implications",
    "build_time_ms",
    "solve_time_ms",
    "optimal",
    "error",
];

pub fn read_csv(text: &str) -> Result<Vec<BenchRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.opts.config();
    let (rows, summary) = run_bench(&args.dir, &config, args.jobs)?;
    let mut csv_bytes = Vec::new();
    write_csv(&rows, &mut csv_bytes)?;
    let csv_text = String::from_utf8(csv_bytes).expect("csv output is utf-8");
    match &args.out {
        Some(path) => {
            emit(&csv_text, Some(path), out)?;
            emit(&to_json(&summary), None, out)
        }
        None => {
            emit(&csv_text, None, out)?;
            eprint!("{}", to_json(&summary));
            Ok(())
        }
    }
}

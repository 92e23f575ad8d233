//! Command-line front end: argument types, command implementations and exit codes.

pub mod bench;
pub mod gen;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mapf_collapse::candidates::{CandidateMode, DEFAULT_ABA_PASSES};
use mapf_collapse::oracle::{brute_force_collapse, OracleError, DEFAULT_CANDIDATE_CAP};
use mapf_collapse::pipeline::{optimize, OptimizeConfig, OptimizeError, DEFAULT_TIME_LIMIT_MS};
use mapf_collapse::reduction::{reduce, verify_roundtrip, ReductionError};
use mapf_collapse::{validate, Graph, GraphJson, Instance, InstanceError, ValidationMode};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
    #[error("{0}")]
    Refused(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Infeasible(_) => 2,
            Self::Internal(_) => 3,
            Self::Refused(_) => 4,
        }
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Infeasible(report) => {
                let mut msg = String::from("input schedule is infeasible:");
                for v in &report.violations {
                    msg.push_str(&format!("\n  {v}"));
                }
                Self::Infeasible(msg)
            }
            OptimizeError::Schedule(e) => Self::Usage(e.to_string()),
            OptimizeError::Internal(msg) => Self::Internal(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mapf-collapse",
    version,
    about = "Remove redundant moves from multi-agent path schedules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance for collisions and malformed paths.
    Validate {
        instance: PathBuf,
        #[arg(long, default_value_t = ValidationMode::Strict)]
        mode: ValidationMode,
    },
    /// Collapse closed subwalks into waits and report statistics.
    Optimize {
        instance: PathBuf,
        /// Write the optimized instance here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write stats JSON here instead of stdout.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Write the relation set (canonical action indices) here.
        #[arg(long)]
        dump_relations: Option<PathBuf>,
        #[command(flatten)]
        opts: OptimizeOpts,
    },
    /// Exhaustive optimum for small instances.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = ValidationMode::Strict)]
        mode: ValidationMode,
        /// Refuse instances with more exhaustive candidates than this.
        #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
        cap: usize,
    },
    /// Compile an Independent Set instance into a collapse instance.
    Reduce {
        /// Graph JSON file.
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        /// Write the compiled instance here instead of embedding it in the output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also solve the instance and compare with the brute-force independence number.
        #[arg(long)]
        verify: bool,
    },
    /// Generate an instance with the prioritized planner or a noisy rollout.
    Gen(gen::GenArgs),
    /// Optimize every instance in a directory and write a CSV table.
    Bench(bench::BenchArgs),
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(format!("expected on|off, got `{other}`")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeOpts {
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_MS)]
    pub time_limit_ms: u64,
    #[arg(long, default_value = "on", value_parser = parse_switch, action = clap::ArgAction::Set)]
    pub aba_filter: bool,
    #[arg(long, default_value_t = DEFAULT_ABA_PASSES)]
    pub aba_passes: usize,
    #[arg(long, default_value_t = CandidateMode::Reduced)]
    pub candidates: CandidateMode,
    #[arg(long, default_value_t = ValidationMode::Strict)]
    pub mode: ValidationMode,
}

impl Default for OptimizeOpts {
    fn default() -> Self {
        OptimizeOpts::from(OptimizeConfig::default())
    }
}

impl From<OptimizeConfig> for OptimizeOpts {
    fn from(c: OptimizeConfig) -> Self {
        Self {
            time_limit_ms: c.time_limit_ms,
            aba_filter: c.aba_filter,
            aba_passes: c.aba_max_passes,
            candidates: c.candidates,
            mode: c.mode,
        }
    }
}

impl OptimizeOpts {
    pub fn config(&self) -> OptimizeConfig {
        OptimizeConfig {
            aba_filter: self.aba_filter,
            aba_max_passes: self.aba_passes,
            candidates: self.candidates,
            mode: self.mode,
            time_limit_ms: self.time_limit_ms,
        }
    }
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

pub(crate) fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(CliError::from),
    }
}

fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let json: GraphJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Graph::from_json(&json).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn cmd_validate(
    instance: &Path,
    mode: ValidationMode,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let inst = Instance::load(instance)?;
    let report =
        validate(&inst.schedule, &inst.graph, mode).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(&to_json(&report), None, out)?;
    if report.feasible {
        Ok(())
    } else {
        let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        Err(CliError::Infeasible(format!(
            "infeasible:\n  {}",
            lines.join("\n  ")
        )))
    }
}

pub fn cmd_optimize(
    instance: &Path,
    out_instance: Option<&Path>,
    stats: Option<&Path>,
    dump_relations: Option<&Path>,
    opts: &OptimizeOpts,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let inst = Instance::load(instance)?;
    let result = optimize(&inst.schedule, &inst.graph, &opts.config())?;
    if let Some(p) = dump_relations {
        emit(&to_json(&result.relations.to_dump()), Some(p), out)?;
    }
    if let Some(p) = out_instance {
        let optimized = inst.with_schedule(result.schedule);
        let rebased = rebase_map(&optimized, instance, p);
        rebased.save(p)?;
    }
    emit(&to_json(&result.stats), stats, out)
}

/// Rewrites a relative map reference so it still resolves from `to`'s directory.
fn rebase_map(inst: &Instance, from: &Path, to: &Path) -> Instance {
    let Some(map_file) = &inst.map_file else {
        return inst.clone();
    };
    let from_dir = from.parent().unwrap_or(Path::new("."));
    let to_dir = to.parent().unwrap_or(Path::new("."));
    let canon = |p: &Path| {
        fs::canonicalize(if p.as_os_str().is_empty() {
            Path::new(".")
        } else {
            p
        })
        .ok()
    };
    if Path::new(map_file).is_absolute() || canon(from_dir) == canon(to_dir) {
        return inst.clone();
    }
    let absolute = canon(&from_dir.join(map_file)).unwrap_or_else(|| from_dir.join(map_file));
    Instance {
        map_file: Some(absolute.to_string_lossy().into_owned()),
        ..inst.clone()
    }
}

pub fn cmd_oracle(
    instance: &Path,
    mode: ValidationMode,
    cap: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let inst = Instance::load(instance)?;
    let report =
        validate(&inst.schedule, &inst.graph, mode).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(v) = report.first() {
        return Err(CliError::Infeasible(format!(
            "input schedule is infeasible: {v}"
        )));
    }
    match brute_force_collapse(&inst.schedule, &inst.graph, mode, cap) {
        Ok(result) => emit(&to_json(&result), None, out),
        Err(e @ OracleError::TooManyCandidates { .. }) => Err(CliError::Refused(e.to_string())),
        Err(e) => Err(CliError::Internal(e.to_string())),
    }
}

#[derive(Debug, Serialize)]
struct ReduceOutput {
    k: usize,
    m: usize,
    horizon: usize,
    agents: usize,
    c0: usize,
    beta: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    instance: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roundtrip: Option<mapf_collapse::RoundtripReport>,
}

pub fn cmd_reduce(
    graph: &Path,
    k: usize,
    out_instance: Option<&Path>,
    verify: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let h = load_graph(graph)?;
    let refuse = |e: ReductionError| match e {
        ReductionError::NoEdges
        | ReductionError::KOutOfRange { .. }
        | ReductionError::Oracle(_) => CliError::Refused(e.to_string()),
        other => CliError::Internal(other.to_string()),
    };
    let compiled = reduce(&h, k).map_err(refuse)?;
    let inst = Instance::on_graph(compiled.graph.clone(), compiled.schedule.clone());
    let embedded = match out_instance {
        Some(p) => {
            inst.save(p)?;
            None
        }
        None => Some(serde_json::to_value(inst.to_json()).expect("instance serializes")),
    };
    let roundtrip = if verify {
        Some(verify_roundtrip(&h, k, std::time::Duration::from_secs(60)).map_err(refuse)?)
    } else {
        None
    };
    let result = ReduceOutput {
        k,
        m: compiled.m,
        horizon: compiled.horizon(),
        agents: compiled.schedule.len(),
        c0: compiled.c0,
        beta: compiled.beta,
        instance: embedded,
        roundtrip,
    };
    emit(&to_json(&result), None, out)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { instance, mode } => cmd_validate(&instance, mode, out),
        Command::Optimize {
            instance,
            out: out_instance,
            stats,
            dump_relations,
            opts,
        } => cmd_optimize(
            &instance,
            out_instance.as_deref(),
            stats.as_deref(),
            dump_relations.as_deref(),
            &opts,
            out,
        ),
        Command::Oracle {
            instance,
            mode,
            cap,
        } => cmd_oracle(&instance, mode, cap, out),
        Command::Reduce {
            graph,
            k,
            out: out_instance,
            verify,
        } => cmd_reduce(&graph, k, out_instance.as_deref(), verify, out),
        Command::Gen(args) => gen::cmd_gen(&args, out),
        Command::Bench(args) => bench::cmd_bench(&args, out),
    }
}

/// Parses `args`, runs the command and maps the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

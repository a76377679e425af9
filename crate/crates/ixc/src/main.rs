//! `ixc`: static clearance solving, capacity probes, scheduling
//! simulations and sweep matrices for broadcast index coding.
//!
//! Graph and spec arguments accept either a file path or a bundled preset
//! name (`fig1`, `fig4a`, `fig5a`, `fig5b` for graphs, `paper-3user` for
//! specs). Exit code is 0 on success and 2 on any validation error.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use index_coding::actions::{generate_action_set, ActionSetOptions, TrafficSpec};
use index_coding::capacity::{in_capacity_region, max_scaled_rate};
use index_coding::clearance::{
    acyclic_subgraph_bound, disjoint_cycle_clearance, is_relay_structured, optimal_cyclic_plan,
    solve_auto, three_user_relay_clearance, two_user_clearance, BoundMode, ClearanceResult,
};
use index_coding::experiment::{append_csv, csv_row, fmt_sig, run_sweep, SweepPlan, CSV_HEADER};
use index_coding::graph::DemandGraph;
use index_coding::scheduler::{run_simulation, Algorithm, SimConfig};
use index_coding::workloads;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "IXC_OUT_DIR";

#[derive(Parser)]
#[command(name = "ixc", version, about = "Broadcast index coding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Auto,
    Bound,
    Disjoint,
    TwoUser,
    Relay3,
    Exhaustive,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Mw1,
    Mw2,
    Uncoded,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum clearance time of a static batch, with a coding plan.
    SolveStatic {
        /// Graph file or preset name.
        #[arg(long)]
        graph: String,
        #[arg(long, value_enum, default_value_t = Solver::Auto)]
        solver: Solver,
        /// Longest user cycle considered by the exhaustive solver.
        #[arg(long, default_value_t = 8)]
        max_cycle_len: usize,
    },
    /// Boundary of the code-constrained capacity region along a direction.
    Capacity {
        /// Traffic spec file or preset name.
        #[arg(long)]
        spec: String,
        /// Comma-separated direction weights; defaults to the spec's rates.
        #[arg(long)]
        direction: Option<String>,
        #[arg(long, default_value = "direct,2cycle,3cycle,double")]
        action_kinds: String,
        #[arg(long)]
        max_cycle_len: Option<usize>,
        #[arg(long)]
        relay_mode: bool,
    },
    /// Simulate one rate point, one row of CSV per seed.
    Simulate {
        /// Traffic spec file or preset name (must carry rate weights).
        #[arg(long)]
        spec: String,
        #[arg(long, value_enum)]
        algorithm: Algo,
        /// Scale applied to the spec's rate weights.
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 200_000)]
        frames: usize,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "direct,2cycle,3cycle,double")]
        action_kinds: String,
        #[arg(long)]
        max_cycle_len: Option<usize>,
        #[arg(long)]
        relay_mode: bool,
    },
    /// Run a sweep matrix described by a TOML config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a free-form linear message plan against a demand graph.
    VerifyCode {
        #[arg(long)]
        graph: String,
        /// One message per line: comma-separated packet ids.
        #[arg(long)]
        messages: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::SolveStatic {
            graph,
            solver,
            max_cycle_len,
        } => cmd_solve_static(&graph, solver, max_cycle_len),
        Command::Capacity {
            spec,
            direction,
            action_kinds,
            max_cycle_len,
            relay_mode,
        } => cmd_capacity(&spec, direction.as_deref(), &action_kinds, max_cycle_len, relay_mode),
        Command::Simulate {
            spec,
            algorithm,
            lambda,
            frames,
            seeds,
            out,
            action_kinds,
            max_cycle_len,
            relay_mode,
        } => cmd_simulate(
            &spec,
            algorithm,
            lambda,
            frames,
            &seeds,
            out,
            &action_kinds,
            max_cycle_len,
            relay_mode,
        ),
        Command::Sweep { config, out } => cmd_sweep(&config, out),
        Command::VerifyCode { graph, messages } => cmd_verify_code(&graph, &messages),
    }
}

fn load_graph(arg: &str) -> Result<DemandGraph, String> {
    if let Some(g) = workloads::preset_graph(arg) {
        return Ok(g);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| format!("cannot read graph {arg:?}: {e}"))?;
    DemandGraph::from_text(&text).map_err(|e| format!("{arg}: {e}"))
}

fn load_spec(arg: &str) -> Result<TrafficSpec, String> {
    if let Some(s) = workloads::preset_spec(arg) {
        return Ok(s);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| format!("cannot read spec {arg:?}: {e}"))?;
    TrafficSpec::from_text(&text).map_err(|e| format!("{arg}: {e}"))
}

/// Build action-set options from a kind list like `direct,2cycle,double`.
fn parse_options(
    kinds: &str,
    max_cycle_len: Option<usize>,
    relay_mode: bool,
    template: bool,
) -> Result<ActionSetOptions, String> {
    let mut cycle_cap = 1usize;
    let mut doubles = false;
    for token in kinds.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token {
            "direct" => {}
            "double" | "double-cycle" => doubles = true,
            other => {
                let k = other
                    .strip_suffix("-cycle")
                    .or_else(|| other.strip_suffix("cycle"))
                    .and_then(|p| p.parse::<usize>().ok())
                    .ok_or_else(|| format!("unknown action kind {other:?}"))?;
                if k < 2 {
                    return Err(format!("cycle length {k} below 2"));
                }
                cycle_cap = cycle_cap.max(k);
            }
        }
    }
    if let Some(cap) = max_cycle_len {
        if cap < 1 {
            return Err("max cycle length must be at least 1".into());
        }
        cycle_cap = cap;
    }
    Ok(ActionSetOptions {
        max_cycle_len: cycle_cap,
        double_cycles: doubles,
        relay_mode,
        template,
    })
}

fn cmd_solve_static(graph: &str, solver: Solver, max_cycle_len: usize) -> Result<(), String> {
    let g = load_graph(graph)?;
    let result: ClearanceResult = match solver {
        Solver::Auto => solve_auto(&g, max_cycle_len).map_err(|e| e.to_string())?.0,
        Solver::Bound => {
            let (bound, exact) = match acyclic_subgraph_bound(&g, BoundMode::Exact) {
                Ok(b) => (b, true),
                Err(_) => (acyclic_subgraph_bound(&g, BoundMode::Greedy).unwrap(), false),
            };
            ClearanceResult {
                lower_bound: bound,
                plan: None,
                plan_slots: None,
                exact,
            }
        }
        Solver::Disjoint => disjoint_cycle_clearance(&g).map_err(|e| e.to_string())?,
        Solver::TwoUser => two_user_clearance(&g).map_err(|e| e.to_string())?,
        Solver::Relay3 => {
            if g.num_users() != 3 || !is_relay_structured(&g) {
                return Err("relay3 needs a 3-user graph with one holder and one wanter per packet".into());
            }
            let weights = g.compress().weights().to_vec();
            three_user_relay_clearance(&weights).map_err(|e| e.to_string())?
        }
        Solver::Exhaustive => optimal_cyclic_plan(&g, max_cycle_len).map_err(|e| e.to_string())?,
    };
    println!("{}", result.summary());
    if let Some(plan) = &result.plan {
        for action in plan {
            println!("{}", action.dump_line());
        }
    }
    Ok(())
}

fn parse_direction(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad direction entry {t:?}"))
        })
        .collect()
}

fn cmd_capacity(
    spec: &str,
    direction: Option<&str>,
    action_kinds: &str,
    max_cycle_len: Option<usize>,
    relay_mode: bool,
) -> Result<(), String> {
    let spec = load_spec(spec)?;
    let direction = match direction {
        Some(text) => parse_direction(text)?,
        None => spec
            .rates()
            .ok_or("spec carries no rates; pass --direction")?
            .to_vec(),
    };
    if direction.len() != spec.num_types() {
        return Err(format!(
            "direction has {} entries for {} types",
            direction.len(),
            spec.num_types()
        ));
    }
    let options = parse_options(action_kinds, max_cycle_len, relay_mode, false)?;
    let actions = generate_action_set(&spec, options);
    let theta = max_scaled_rate(&actions, &direction).map_err(|e| e.to_string())?;
    println!("theta={}", fmt_sig(theta));
    let probe: Vec<f64> = direction.iter().map(|d| d * theta * 0.99).collect();
    match in_capacity_region(&actions, &probe).map_err(|e| e.to_string())? {
        Some(cert) => {
            println!("feasible=true");
            for (id, p) in &cert.probabilities {
                println!("{id}:{}", fmt_sig(*p));
            }
        }
        None => println!("feasible=false"),
    }
    Ok(())
}

/// Resolve an output path against the default output directory.
fn resolve_out(path: PathBuf) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            return PathBuf::from(dir).join(path);
        }
    }
    path
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    spec: &str,
    algorithm: Algo,
    lambda: f64,
    frames: usize,
    seeds: &[u64],
    out: Option<PathBuf>,
    action_kinds: &str,
    max_cycle_len: Option<usize>,
    relay_mode: bool,
) -> Result<(), String> {
    let spec = load_spec(spec)?;
    let direction = spec
        .rates()
        .ok_or("spec carries no rates; add rate weights to scale")?
        .to_vec();
    if seeds.is_empty() {
        return Err("need at least one seed".into());
    }
    let template = !matches!(algorithm, Algo::Uncoded);
    let options = parse_options(action_kinds, max_cycle_len, relay_mode, template)?;
    let actions = generate_action_set(&spec, options);
    let algorithm = match algorithm {
        Algo::Mw1 => Algorithm::Mw1,
        Algo::Mw2 => Algorithm::Mw2,
        Algo::Uncoded => Algorithm::Uncoded,
    };
    let mut rows = Vec::new();
    for &seed in seeds {
        let config = SimConfig {
            spec: spec.clone(),
            actions: actions.clone(),
            algorithm: algorithm.clone(),
            rates: direction.iter().map(|d| d * lambda).collect(),
            frames,
            seed,
            lambda_label: lambda,
        };
        let stats = run_simulation(&config).map_err(|e| e.to_string())?;
        eprintln!(
            "lambda={} algorithm={} seed={} stability={}",
            fmt_sig(stats.lambda),
            stats.algorithm,
            seed,
            stats.stability.label()
        );
        rows.push(stats);
    }
    match out {
        Some(path) => {
            let path = resolve_out(path);
            append_csv(&path, &rows).map_err(|e| e.to_string())?;
            println!("{}", path.display());
        }
        None => {
            println!("{CSV_HEADER}");
            for s in &rows {
                println!("{}", csv_row(s));
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfigFile {
    spec: String,
    algorithms: Vec<String>,
    lambda_grid: Option<Vec<f64>>,
    /// Load factors scaled by the LP boundary of the concrete action set.
    rho_grid: Option<Vec<f64>>,
    frames: usize,
    seeds: Vec<u64>,
    out: Option<PathBuf>,
    action_kinds: Option<Vec<String>>,
    max_cycle_len: Option<usize>,
    relay_mode: Option<bool>,
    template: Option<bool>,
}

fn cmd_sweep(config: &Path, out_override: Option<PathBuf>) -> Result<(), String> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| format!("cannot read config {config:?}: {e}"))?;
    let file: SweepConfigFile = toml::from_str(&text).map_err(|e| format!("{config:?}: {e}"))?;
    let spec = load_spec(&file.spec)?;
    let kinds = file
        .action_kinds
        .map(|v| v.join(","))
        .unwrap_or_else(|| "direct,2cycle,3cycle,double".into());
    let relay = file.relay_mode.unwrap_or(false);
    let template = file.template.unwrap_or(true);
    let options = parse_options(&kinds, file.max_cycle_len, relay, template)?;
    let algorithms = file
        .algorithms
        .iter()
        .map(|name| match name.as_str() {
            "mw1" => Ok(Algorithm::Mw1),
            "mw2" => Ok(Algorithm::Mw2),
            "uncoded" => Ok(Algorithm::Uncoded),
            other => Err(format!("unknown algorithm {other:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let lambda_grid = match (file.lambda_grid, file.rho_grid) {
        (Some(grid), None) => grid,
        (None, Some(rhos)) => {
            let direction = spec
                .rates()
                .ok_or("spec carries no rates; rho_grid needs a direction")?
                .to_vec();
            let concrete = generate_action_set(
                &spec,
                ActionSetOptions {
                    template: false,
                    ..options
                },
            );
            let theta = max_scaled_rate(&concrete, &direction).map_err(|e| e.to_string())?;
            eprintln!("boundary theta={}", fmt_sig(theta));
            rhos.iter().map(|r| r * theta).collect()
        }
        (Some(_), Some(_)) => return Err("give lambda_grid or rho_grid, not both".into()),
        (None, None) => return Err("config needs lambda_grid or rho_grid".into()),
    };
    let plan = SweepPlan {
        spec,
        options,
        algorithms,
        lambda_grid,
        frames: file.frames,
        seeds: file.seeds,
    };
    let stats = run_sweep(&plan).map_err(|e| e.to_string())?;
    let out = out_override
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let out = resolve_out(out);
    append_csv(&out, &stats).map_err(|e| e.to_string())?;
    for s in &stats {
        eprintln!(
            "lambda={} algorithm={} seed={} stability={}",
            fmt_sig(s.lambda),
            s.algorithm,
            s.seed,
            s.stability.label()
        );
    }
    println!("{}", out.display());
    Ok(())
}

fn cmd_verify_code(graph: &str, messages: &Path) -> Result<(), String> {
    let g = load_graph(graph)?;
    let text = std::fs::read_to_string(messages)
        .map_err(|e| format!("cannot read messages {messages:?}: {e}"))?;
    let mut parsed: Vec<BTreeSet<u32>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ids = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| format!("line {}: bad packet id {t:?}", i + 1))
            })
            .collect::<Result<BTreeSet<u32>, _>>()?;
        for &p in &ids {
            if p == 0 || p > g.num_packets() {
                return Err(format!("line {}: packet {p} out of range", i + 1));
            }
        }
        parsed.push(ids);
    }
    if index_coding::actions::verify_linear_code(&g, &parsed) {
        let bound = acyclic_subgraph_bound(&g, BoundMode::Exact)
            .unwrap_or_else(|_| acyclic_subgraph_bound(&g, BoundMode::Greedy).unwrap());
        println!("decodable=true slots={} bound={}", parsed.len(), bound);
    } else {
        println!("decodable=false");
    }
    Ok(())
}

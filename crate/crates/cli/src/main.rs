//! `cellplan`: generate worlds, decompose them, plan paths, run benchmarks
//! and export geometry.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad arguments, 3 I/O or
//! file-format error, 4 infeasible query, 5 goal unreachable, 6 solver or
//! search-limit failure.

mod config;
mod export;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cellplan::baseline::theta_star;
use cellplan::bench::{
    fit_quadratic, run_bench, trace_file_name, write_results_csv, write_timings_csv, write_trace_csv, Planner,
    PlannerOptions,
};
use cellplan::cellgraph::{build_weighted_graph, compute_margins, load_graph, save_graph, ConnectivityGraph, GraphDoc};
use cellplan::decomp::{decompose, load_decomposition, save_decomposition, verify_decomposition, DecompositionDoc};
use cellplan::geom::Point3;
use cellplan::grid::{generate_city_world, load_grid, save_grid, WorldSpec};
use cellplan::manifest::RunManifest;
use cellplan::optimize::engine::ClarabelEngine;
use cellplan::optimize::{
    astar_socp, exact_shortest_path, ksp_socp, save_path, ExactOptions, KspOptions, PathDoc, PlanContext, StopRule,
};
use config::{output_path, Config};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn io(message: String) -> Self {
        Self { code: 3, message }
    }
}

impl From<cellplan::Error> for CliError {
    fn from(e: cellplan::Error) -> Self {
        use cellplan::Error as E;
        let code = match &e {
            E::InvalidArgument(_) => 2,
            E::Format { .. } | E::Document(_) | E::Io(_) | E::Json(_) => 3,
            E::Query(_) => 4,
            E::Numeric { .. } | E::Resource { .. } => 6,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "cellplan", version, about = "Box-cell decomposition and conic path planning on 3D occupancy grids")]
struct Cli {
    /// Print a machine-readable summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// TOML file with option defaults (per-command tables or top-level keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random city world and write it as a grid file.
    Gen(GenArgs),
    /// Decompose a grid into cells, optionally building the cell graph.
    Decompose(DecomposeArgs),
    /// Plan a path between two points.
    Plan(PlanArgs),
    /// Run the decomposition and planner benchmark on generated worlds.
    Bench(BenchArgs),
    /// Convert a decomposition or path file into viewer geometry.
    Export(ExportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Side length in voxels.
    #[arg(long = "L")]
    side: Option<usize>,
    /// Height in voxels.
    #[arg(long = "H")]
    height: Option<usize>,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_boxes: Option<usize>,
    #[arg(long)]
    street: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    grid: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also build the weighted cell graph and write it here.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Safety margin in meters used for the graph.
    #[arg(long)]
    eps: Option<f64>,
    /// Store the per-voxel coverage map in the output.
    #[arg(long)]
    coverage: bool,
    /// Run the independent verifier and report per-property results.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    decomposition: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// theta, astar-socp, ksp-socp or exact.
    #[arg(long)]
    planner: Option<String>,
    /// Start point in meters, `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Goal point in meters, `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    goal: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    /// Maximum number of cell sequences for ksp-socp.
    #[arg(long)]
    kmax: Option<usize>,
    /// Time budget in seconds for ksp-socp and exact.
    #[arg(long)]
    deadline: Option<f64>,
    /// Node cap for exact.
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Side lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long = "H")]
    height: Option<usize>,
    #[arg(long)]
    block: Option<usize>,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Planners to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    planners: Option<Vec<String>>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    deadline: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Directory receiving results.csv, timings.csv and traces/.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    input: PathBuf,
    /// json or obj.
    #[arg(long)]
    format: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_out = cli.json;
    match run(cli) {
        Ok(summary) => {
            if json_out {
                println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            } else {
                print_human(&summary);
            }
            let code = summary.get("exit_code").and_then(Value::as_u64).unwrap_or(0);
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            if json_out {
                println!("{}", json!({"error": e.message, "exit_code": e.code}));
            }
            ExitCode::from(e.code)
        }
    }
}

fn print_human(v: &Value) {
    if let Value::Object(map) = v {
        for (k, val) in map {
            match val {
                Value::Object(_) | Value::Array(_) => println!("{k}: {val}"),
                Value::String(s) => println!("{k}: {s}"),
                other => println!("{k}: {other}"),
            }
        }
    }
}

fn run(cli: Cli) -> CliResult<Value> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Gen(a) => cmd_gen(a, &Config::load(config, "gen")?),
        Command::Decompose(a) => cmd_decompose(a, &Config::load(config, "decompose")?),
        Command::Plan(a) => cmd_plan(a, &Config::load(config, "plan")?),
        Command::Bench(a) => cmd_bench(a, &Config::load(config, "bench")?),
        Command::Export(a) => cmd_export(a, &Config::load(config, "export")?),
    }
}

fn io_err(what: &str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(format!("{what} {}: {e}", path.display()))
}

/// Maps library errors on file operations to messages naming the file.
fn file_err<'a>(what: &str, path: &'a Path) -> impl Fn(cellplan::Error) -> CliError + 'a {
    let what = what.to_string();
    move |e| {
        let mut c = CliError::from(e);
        c.message = format!("{what} {}: {}", path.display(), c.message);
        c
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or("out").split('.').next().unwrap_or("out").to_string()
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| io_err("cannot serialize", path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err("cannot write", path, e))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| io_err("cannot create directory", dir, e))
        }
        _ => Ok(()),
    }
}

fn cmd_gen(a: GenArgs, cfg: &Config) -> CliResult<Value> {
    let mut spec = WorldSpec::new(
        cfg.require(a.side, "L")?,
        cfg.require(a.height, "H")?,
        cfg.get(a.block, "block", 50)?,
        cfg.get(a.seed, "seed", 0)?,
    );
    spec.max_boxes = cfg.get(a.max_boxes, "max_boxes", spec.max_boxes)?;
    spec.street = cfg.get(a.street, "street", spec.street)?;
    let grid = generate_city_world(&spec)?;
    let out = output_path(cfg.opt(a.output, "output")?, "world.og3d");
    ensure_parent(&out)?;
    save_grid(&grid, &out).map_err(file_err("cannot write", &out))?;
    let manifest = RunManifest {
        outputs: vec![out.display().to_string()],
        seed: Some(spec.seed),
        ..RunManifest::new("gen")
            .param("L", spec.side)
            .param("H", spec.height)
            .param("block", spec.block)
            .param("max_boxes", spec.max_boxes)
            .param("street", spec.street)
    };
    let sidecar = PathBuf::from(format!("{}.manifest.json", out.display()));
    write_json(&sidecar, &manifest)?;
    Ok(json!({
        "command": "gen",
        "output": out.display().to_string(),
        "manifest": sidecar.display().to_string(),
        "dims": grid.dims(),
        "buildings": spec.tiles_per_side() * spec.tiles_per_side(),
        "occupied_voxels": grid.occupied_count(),
    }))
}

fn cmd_decompose(a: DecomposeArgs, cfg: &Config) -> CliResult<Value> {
    let grid = load_grid(&a.grid).map_err(file_err("cannot read grid", &a.grid))?;
    let started = Instant::now();
    let d = decompose(&grid);
    let seconds = started.elapsed().as_secs_f64();
    let out = output_path(cfg.opt(a.output, "output")?, &format!("{}.decomp.json", stem(&a.grid)));
    ensure_parent(&out)?;
    let with_coverage = a.coverage || cfg.get(None, "coverage", false)?;
    let mut doc = DecompositionDoc::new(&d, with_coverage);
    let mut manifest = RunManifest::new("decompose").param("coverage", with_coverage);
    manifest.inputs = vec![a.grid.display().to_string()];
    manifest.outputs = vec![out.display().to_string()];
    doc.manifest = Some(manifest);
    save_decomposition(&doc, &out).map_err(file_err("cannot write", &out))?;

    let mut summary = json!({
        "command": "decompose",
        "output": out.display().to_string(),
        "cells": d.cell_count(),
        "free_cells": d.free_cells().count(),
        "seconds": seconds,
    });
    if let Some(graph_path) = cfg.opt(a.graph, "graph")? {
        let eps = cfg.get(a.eps, "eps", 1.0)?;
        let margins = compute_margins(&d, eps)?;
        let graph = build_weighted_graph(&d, &grid, &margins, &ClarabelEngine)?;
        let mut gdoc = GraphDoc::new(&graph, d.cell_count(), eps);
        let mut manifest = RunManifest::new("decompose").param("eps", eps);
        manifest.inputs = vec![a.grid.display().to_string(), out.display().to_string()];
        manifest.outputs = vec![graph_path.display().to_string()];
        gdoc.manifest = Some(manifest);
        ensure_parent(&graph_path)?;
        save_graph(&gdoc, &graph_path).map_err(file_err("cannot write", &graph_path))?;
        summary["graph"] = json!(graph_path.display().to_string());
        summary["edges"] = json!(graph.edge_count());
    }
    if a.verify || cfg.get(None, "verify", false)? {
        let report = verify_decomposition(&grid, &d);
        let passed = report.all_passed();
        summary["verification"] = serde_json::to_value(&report).expect("report serializes");
        summary["verified"] = json!(passed);
        if !passed {
            summary["exit_code"] = json!(1);
        }
    }
    Ok(summary)
}

fn parse_point(s: &str, what: &str) -> CliResult<Point3> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::usage(format!("--{what} expects x,y,z in meters, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut p: Point3 = [0.0; 3];
    for (k, part) in parts.iter().enumerate() {
        p[k] = part.parse().map_err(|_| bad())?;
        if !p[k].is_finite() {
            return Err(bad());
        }
    }
    Ok(p)
}

fn parse_deadline(v: Option<f64>) -> CliResult<Option<Duration>> {
    match v {
        None => Ok(None),
        Some(s) if s >= 0.0 && s.is_finite() => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(CliError::usage(format!("--deadline must be a nonnegative number of seconds, got {s}"))),
    }
}

fn parse_planner(s: &str) -> CliResult<Planner> {
    Planner::parse(s).ok_or_else(|| {
        CliError::usage(format!("unknown planner '{s}' (expected theta, astar-socp, ksp-socp or exact)"))
    })
}

fn cmd_plan(a: PlanArgs, cfg: &Config) -> CliResult<Value> {
    let planner = parse_planner(&cfg.get(a.planner, "planner", "astar-socp".to_string())?)?;
    let start = parse_point(&cfg.require(a.start, "start")?, "start")?;
    let goal = parse_point(&cfg.require(a.goal, "goal")?, "goal")?;
    let eps = cfg.get(a.eps, "eps", 1.0)?;
    let k_max = cfg.opt(a.kmax, "kmax")?;
    let deadline = parse_deadline(cfg.opt(a.deadline, "deadline")?)?;
    let max_nodes = cfg.get(a.max_nodes, "max_nodes", ExactOptions::default().max_nodes)?;
    let grid_path: PathBuf = cfg.require(a.grid, "grid")?;
    let grid = load_grid(&grid_path).map_err(file_err("cannot read grid", &grid_path))?;
    let out = output_path(cfg.opt(a.output, "output")?, "path.json");
    let mut manifest = RunManifest::new("plan")
        .param("planner", planner.name())
        .param("start", start)
        .param("goal", goal)
        .param("eps", eps)
        .param("kmax", k_max)
        .param("deadline", deadline.map(|d| d.as_secs_f64()))
        .param("max_nodes", max_nodes);
    manifest.inputs.push(grid_path.display().to_string());
    manifest.outputs.push(out.display().to_string());

    let started = Instant::now();
    let mut summary = json!({"command": "plan", "planner": planner.name()});
    let doc = if planner == Planner::Theta {
        let p = theta_star(&grid, start, goal)?
            .ok_or_else(|| CliError { code: 5, message: "goal is unreachable from start".into() })?;
        summary["expansions"] = json!(p.expansions);
        PathDoc::new(planner.name(), p.points, vec![], p.length, &[])
    } else {
        let dpath: PathBuf = cfg.require(a.decomposition, "decomposition")?;
        let d = load_decomposition(&dpath)
            .and_then(|doc| doc.to_decomposition())
            .map_err(file_err("cannot read decomposition", &dpath))?;
        if d.dims != grid.dims() {
            return Err(CliError::io(format!(
                "decomposition {} covers {:?} but the grid is {:?}",
                dpath.display(),
                d.dims,
                grid.dims()
            )));
        }
        manifest.inputs.push(dpath.display().to_string());
        let margins = compute_margins(&d, eps)?;
        let mut graph: Option<ConnectivityGraph> = None;
        if let Some(gpath) = cfg.opt::<PathBuf>(a.graph, "graph")? {
            let gdoc = load_graph(&gpath).map_err(file_err("cannot read graph", &gpath))?;
            manifest.inputs.push(gpath.display().to_string());
            if gdoc.eps == eps {
                graph = Some(gdoc.to_graph(&d).map_err(file_err("cannot read graph", &gpath))?);
            } else {
                summary["graph_rebuilt"] = json!(format!("graph built with eps {} but {eps} requested", gdoc.eps));
            }
        }
        let graph = match graph {
            Some(g) => g,
            None => build_weighted_graph(&d, &grid, &margins, &ClarabelEngine)?,
        };
        let ctx = PlanContext {
            decomposition: &d,
            graph: &graph,
            margins: &margins,
            engine: &ClarabelEngine,
        };
        let unreachable = || CliError { code: 5, message: "goal is unreachable from start".into() };
        let (path, trace) = match planner {
            Planner::AstarSocp | Planner::KspSocp => {
                let r = if planner == Planner::AstarSocp {
                    astar_socp(&ctx, start, goal)?
                } else {
                    ksp_socp(&ctx, start, goal, &KspOptions { stop: StopRule { k_max, deadline } })?
                }
                .ok_or_else(unreachable)?;
                summary["sequences"] = json!(r.sequences);
                summary["best_k"] = json!(r.best_k);
                summary["truncated"] = json!(r.truncated());
                (r.path, r.trace)
            }
            _ => {
                let opts = ExactOptions { max_nodes, deadline, ..ExactOptions::default() };
                let r = exact_shortest_path(&ctx, start, goal, &opts)?.ok_or_else(unreachable)?;
                summary["nodes"] = json!(r.nodes);
                summary["sequences"] = json!(r.sequences);
                (r.path, r.trace)
            }
        };
        PathDoc::new(planner.name(), path.waypoints, path.cells, path.length, &trace)
    };
    summary["seconds"] = json!(started.elapsed().as_secs_f64());
    let mut doc = doc;
    doc.manifest = Some(manifest);
    ensure_parent(&out)?;
    save_path(&doc, &out).map_err(file_err("cannot write", &out))?;
    summary["output"] = json!(out.display().to_string());
    summary["length"] = json!(doc.length);
    summary["waypoints"] = json!(doc.waypoints.len());
    Ok(summary)
}

fn cmd_bench(a: BenchArgs, cfg: &Config) -> CliResult<Value> {
    let sizes: Vec<usize> = cfg.get(a.sizes, "sizes", vec![100])?;
    let height = cfg.get(a.height, "H", 200)?;
    let block = cfg.get(a.block, "block", 50)?;
    let seeds: Vec<u64> = cfg.get(a.seeds, "seeds", vec![0])?;
    let names: Vec<String> = cfg.get(
        a.planners,
        "planners",
        Planner::ALL.iter().map(|p| p.name().to_string()).collect(),
    )?;
    let planners = names.iter().map(|s| parse_planner(s)).collect::<CliResult<Vec<_>>>()?;
    let deadline = parse_deadline(cfg.opt(a.deadline, "deadline")?)?;
    let opts = PlannerOptions {
        eps: cfg.get(a.eps, "eps", 1.0)?,
        k_max: Some(cfg.get(a.kmax, "kmax", 10)?),
        deadline,
        exact_max_nodes: cfg.get(a.max_nodes, "max_nodes", ExactOptions::default().max_nodes)?,
    };
    if sizes.is_empty() || seeds.is_empty() || planners.is_empty() {
        return Err(CliError::usage("bench needs at least one size, seed and planner".into()));
    }
    let worlds: Vec<WorldSpec> = sizes
        .iter()
        .flat_map(|&l| seeds.iter().map(move |&s| WorldSpec::new(l, height, block, s)))
        .collect();
    for w in &worlds {
        w.validate()?;
    }
    let dir = output_path(cfg.opt(a.out_dir, "out_dir")?, "bench");
    fs::create_dir_all(dir.join("traces")).map_err(|e| io_err("cannot create directory", &dir, e))?;

    let reports = run_bench(&worlds, &planners, &opts, &ClarabelEngine)?;

    let results = dir.join("results.csv");
    let f = fs::File::create(&results).map_err(|e| io_err("cannot write", &results, e))?;
    write_results_csv(&reports, deadline.is_some(), f)?;
    let timings = dir.join("timings.csv");
    let f = fs::File::create(&timings).map_err(|e| io_err("cannot write", &timings, e))?;
    write_timings_csv(&reports, f)?;
    for r in &reports {
        for p in r.planners.iter().filter(|p| !p.trace.is_empty()) {
            let path = dir.join("traces").join(trace_file_name(&r.decomposition.world, p.planner));
            let f = fs::File::create(&path).map_err(|e| io_err("cannot write", &path, e))?;
            write_trace_csv(&p.trace, f)?;
        }
    }
    let manifest = RunManifest {
        outputs: vec![results.display().to_string(), timings.display().to_string()],
        ..RunManifest::new("bench")
            .param("sizes", &sizes)
            .param("H", height)
            .param("block", block)
            .param("seeds", &seeds)
            .param("planners", &names)
            .param("kmax", opts.k_max)
            .param("deadline", deadline.map(|d| d.as_secs_f64()))
            .param("eps", opts.eps)
            .param("max_nodes", opts.exact_max_nodes)
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    let mut summary = json!({
        "command": "bench",
        "out_dir": dir.display().to_string(),
        "worlds": reports.len(),
        "rows": reports.iter().map(|r| r.planners.len()).sum::<usize>(),
        "chain_holds": reports.iter().all(|r| r.chain_holds),
    });
    let mut distinct = sizes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() >= 2 {
        let x: Vec<f64> = reports.iter().map(|r| r.decomposition.world.side as f64).collect();
        let y: Vec<f64> = reports.iter().map(|r| r.decomposition.cells as f64).collect();
        summary["cell_fit"] = serde_json::to_value(fit_quadratic(&x, &y)).expect("fit serializes");
    }
    Ok(summary)
}

fn cmd_export(a: ExportArgs, cfg: &Config) -> CliResult<Value> {
    let format = cfg.get(a.format, "format", "json".to_string())?;
    if format != "json" && format != "obj" {
        return Err(CliError::usage(format!("unknown export format '{format}' (expected json or obj)")));
    }
    let text = fs::read_to_string(&a.input).map_err(|e| io_err("cannot read", &a.input, e))?;
    let doc = export::parse(&text).map_err(|e| CliError::io(format!("{}: {}", a.input.display(), e.message)))?;
    let out = output_path(cfg.opt(a.output, "output")?, &format!("{}.{format}", stem(&a.input)));
    ensure_parent(&out)?;
    let (kind, items) = match &doc {
        export::Exportable::Decomposition(d) => ("boxes", d.cells.iter().filter(|c| !c.obstacle).count()),
        export::Exportable::Path(p) => ("polyline", p.waypoints.len()),
    };
    if format == "obj" {
        fs::write(&out, export::to_obj(&doc)).map_err(|e| io_err("cannot write", &out, e))?;
    } else {
        write_json(&out, &export::to_json(&doc))?;
    }
    Ok(json!({
        "command": "export",
        "output": out.display().to_string(),
        "kind": kind,
        "items": items,
    }))
}

//! Command-line driver: workload generation, walk runs, statistics, and
//! benchmark sweeps over the algorithm variants.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for runtime failures.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fn2v::algo::{run_walks, write_trigger_csv, RunOutput, Variant};
use fn2v::graph::{load_edge_list, read_adjacency_cache, Graph, PartitionedGraph};
use fn2v::rmat::{self, Preset};
use fn2v::walk::stats::{degree_frequency_histogram, write_histogram_csv, DEFAULT_BUCKET_WIDTH};
use fn2v::walk::{read_walks, write_walks, WalkConfig};

/// Environment variable holding the directory against which relative data
/// paths are resolved.
const DATA_DIR_ENV: &str = "FN2V_DATA_DIR";

#[derive(Parser)]
#[command(name = "fn2v", version, about = "Second-order random walk workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic workload and write it as an edge list.
    Generate(GenerateArgs),
    /// Run walks for every vertex with a chosen algorithm variant.
    Walk(WalkArgs),
    /// Summarize a walks file: degree-frequency histogram and memory report.
    Stats(StatsArgs),
    /// Sweep variants x graphs x (p,q) pairs into a consolidated CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Workload family: er, wec, or skew.
    #[arg(long)]
    preset: String,
    /// Size parameter: scale for er/wec, skew factor S for skew.
    #[arg(long)]
    size: f64,
    /// Explicit log2 vertex count (defaults: the size for er/wec, 22 for skew).
    #[arg(long)]
    scale: Option<u32>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output prefix: writes <out>.edges and <out>.meta.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphSource {
    /// Edge-list or binary adjacency file to load.
    #[arg(long, conflicts_with = "preset")]
    graph: Option<PathBuf>,
    /// Treat the third edge-list column as weights.
    #[arg(long, default_value_t = false)]
    weighted: bool,
    /// Generate the graph in memory instead: preset spec like
    /// "er-14", "wec-10", or "skew-3@14" (skew scale defaults to 22).
    #[arg(long)]
    preset: Option<String>,
    /// Seed for in-memory generation.
    #[arg(long, default_value_t = 42)]
    graph_seed: u64,
}

#[derive(Args)]
struct WalkArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value = "base")]
    variant: String,
    /// Return parameter.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// In-out parameter.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Steps per walk.
    #[arg(long, default_value_t = 80)]
    l: usize,
    /// Walks per start vertex.
    #[arg(long, default_value_t = 10)]
    r: usize,
    /// Rounds: split starts into k sets to bound peak memory.
    #[arg(long = "k-rounds", default_value_t = 1)]
    k_rounds: usize,
    /// Logical workers (defaults to available cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "popular-threshold", default_value_t = 1000)]
    popular_threshold: usize,
    /// Bound-gap threshold for the approximate variant.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Per-worker cache budget for popular neighbor lists, in bytes.
    #[arg(long = "cache-cap-bytes")]
    cache_cap_bytes: Option<u64>,
    /// Abort if the estimated peak working set exceeds this many bytes.
    #[arg(long = "memory-guard-bytes")]
    memory_guard_bytes: Option<u64>,
    /// Output prefix: writes <out>.walks, <out>.metrics.csv,
    /// <out>.summary.json, and <out>.triggers.csv for the approx variant.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Walks file produced by the walk command.
    #[arg(long)]
    walks: PathBuf,
    #[command(flatten)]
    source: GraphSource,
    #[arg(long = "bucket-width", default_value_t = DEFAULT_BUCKET_WIDTH)]
    bucket_width: usize,
    /// Run summary JSON to fold peak message bytes into the report.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Output prefix: writes <out>.hist.csv and <out>.stats.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated variant names.
    #[arg(long, default_value = "base,cache,approx")]
    variants: String,
    /// Comma-separated preset specs, e.g. "skew-2@14,skew-3@14".
    #[arg(long)]
    graphs: String,
    /// Comma-separated p:q pairs, e.g. "0.5:2,2:0.5".
    #[arg(long, default_value = "0.5:2,2:0.5")]
    pq: String,
    #[arg(long, default_value_t = 80)]
    l: usize,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long = "k-rounds", default_value_t = 1)]
    k_rounds: usize,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "popular-threshold", default_value_t = 1000)]
    popular_threshold: usize,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Consolidated CSV output path.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn runtime(err: impl std::fmt::Display) -> CliError {
        CliError::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help and version requests are not usage errors
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Walk(args) => cmd_walk(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Resolve a path against $FN2V_DATA_DIR when it is relative.
fn resolve(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn parse_preset_spec(spec: &str) -> Result<Preset, CliError> {
    let (name_size, scale) = match spec.split_once('@') {
        Some((head, scale)) => {
            let scale: u32 = scale
                .parse()
                .map_err(|_| CliError::Usage(format!("bad scale in preset spec '{spec}'")))?;
            (head, Some(scale))
        }
        None => (spec, None),
    };
    let (name, size) = name_size
        .split_once('-')
        .ok_or_else(|| CliError::Usage(format!("preset spec '{spec}' is not NAME-SIZE[@SCALE]")))?;
    let size: f64 = size
        .parse()
        .map_err(|_| CliError::Usage(format!("bad size in preset spec '{spec}'")))?;
    Preset::parse(name, size, scale).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_graph(source: &GraphSource) -> Result<Graph, CliError> {
    if let Some(spec) = &source.preset {
        let preset = parse_preset_spec(spec)?;
        let params = preset.params(source.graph_seed).map_err(CliError::runtime)?;
        let (graph, _) = rmat::generate(&params).map_err(CliError::runtime)?;
        return Ok(graph);
    }
    let path = source
        .graph
        .as_ref()
        .ok_or_else(|| CliError::Usage("one of --graph or --preset is required".into()))?;
    let path = resolve(path);
    let mut file = File::open(&path)
        .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    // sniff the binary adjacency cache magic, fall back to edge-list text
    let mut magic = [0u8; 8];
    let is_cache = file.read(&mut magic).map_err(CliError::runtime)? == 8 && &magic == b"FN2VADJ\x01";
    file.seek(SeekFrom::Start(0)).map_err(CliError::runtime)?;
    if is_cache {
        read_adjacency_cache(BufReader::new(file)).map_err(CliError::runtime)
    } else {
        load_edge_list(BufReader::new(file), source.weighted)
            .map(|loaded| loaded.graph)
            .map_err(CliError::runtime)
    }
}

fn write_edge_list<W: Write>(mut out: W, graph: &Graph) -> std::io::Result<()> {
    for u in graph.vertices() {
        for &(v, w) in graph.neighbors_unchecked(u) {
            if v > u {
                if w == 1.0 {
                    writeln!(out, "{u} {v}")?;
                } else {
                    writeln!(out, "{u} {v} {w}")?;
                }
            }
        }
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let preset = Preset::parse(&args.preset, args.size, args.scale)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let params = preset.params(args.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let (graph, meta) = rmat::generate(&params).map_err(CliError::runtime)?;

    let out = resolve(&args.out);
    let mut edges = create(&out.with_extension("edges"))?;
    write_edge_list(&mut edges, &graph).map_err(CliError::runtime)?;
    edges.flush().map_err(CliError::runtime)?;

    let meta_json = serde_json::json!({
        "preset": args.preset,
        "size": args.size,
        "params": params,
        "achieved": meta,
    });
    let mut meta_out = create(&out.with_extension("meta.json"))?;
    serde_json::to_writer_pretty(&mut meta_out, &meta_json).map_err(CliError::runtime)?;
    meta_out.flush().map_err(CliError::runtime)?;
    println!(
        "generated {} vertices, {} edges (max degree {}) -> {}.edges",
        meta.vertices,
        meta.edges,
        meta.max_degree,
        out.display()
    );
    Ok(())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Rough peak working set for one round: adjacency, per-round walk state,
/// and one superstep of in-flight neighbor-list messages.
fn estimate_round_bytes(graph: &Graph, l: usize, rounds: usize) -> u64 {
    let n = graph.vertex_count();
    let adjacency: u64 = graph
        .vertices()
        .map(|v| 16 * graph.degree(v) as u64)
        .sum();
    let per_round = n.div_ceil(rounds as u64);
    let avg_degree = if n > 0 { 2 * graph.edge_count() / n.max(1) } else { 0 };
    let walk_state = per_round * 8 * l as u64;
    let in_flight = per_round * (17 + 8 * avg_degree);
    adjacency + walk_state + in_flight
}

fn cmd_walk(args: WalkArgs) -> Result<(), CliError> {
    let variant = Variant::parse(&args.variant)
        .ok_or_else(|| CliError::Usage(format!("unknown variant '{}'", args.variant)))?;
    let graph = load_graph(&args.source)?;
    let config = WalkConfig {
        p: args.p,
        q: args.q,
        walk_length: args.l,
        walks_per_vertex: args.r,
        rounds: args.k_rounds,
        popular_threshold: args.popular_threshold,
        epsilon: args.epsilon,
        cache_cap_bytes: args.cache_cap_bytes,
        seed: args.seed,
    };
    config
        .validate(graph.vertex_count())
        .map_err(|e| CliError::Usage(e.to_string()))?;

    if let Some(guard) = args.memory_guard_bytes {
        let estimate = estimate_round_bytes(&graph, args.l, args.k_rounds);
        if estimate > guard {
            return Err(CliError::Runtime(format!(
                "estimated peak working set {estimate} bytes exceeds the {guard}-byte guard; \
                 rerun with a larger --k-rounds to simulate fewer walks per round \
                 (currently {} rounds)",
                args.k_rounds
            )));
        }
    }

    let workers = args.workers.unwrap_or_else(default_workers);
    let pg = PartitionedGraph::new(graph, workers).map_err(CliError::runtime)?;
    let output = run_walks(&pg, &config, variant).map_err(CliError::runtime)?;
    write_walk_outputs(&resolve(&args.out), &output, variant)?;
    println!(
        "{} walks in {:.3}s over {} engine runs (peak message bytes {})",
        output.walks.len(),
        output.summary.wall_time_secs,
        output.summary.engine_runs,
        output.summary.peak_message_bytes
    );
    Ok(())
}

fn write_walk_outputs(out: &Path, output: &RunOutput, variant: Variant) -> Result<(), CliError> {
    let mut walks = create(&out.with_extension("walks"))?;
    write_walks(&mut walks, &output.walks).map_err(CliError::runtime)?;
    walks.flush().map_err(CliError::runtime)?;

    let mut metrics = create(&out.with_extension("metrics.csv"))?;
    writeln!(
        metrics,
        "run,superstep,step_msgs,neig_msgs,local_bytes,remote_bytes,remote_neig_bytes,active_vertices,base_bytes"
    )
    .map_err(CliError::runtime)?;
    for (run, rows) in output.runs.iter().enumerate() {
        for m in rows {
            writeln!(
                metrics,
                "{run},{},{},{},{},{},{},{},{}",
                m.superstep,
                m.step_msgs,
                m.neig_msgs,
                m.local_bytes,
                m.remote_bytes,
                m.remote_neig_bytes,
                m.active_vertices,
                m.base_bytes
            )
            .map_err(CliError::runtime)?;
        }
    }
    metrics.flush().map_err(CliError::runtime)?;

    let mut summary = create(&out.with_extension("summary.json"))?;
    serde_json::to_writer_pretty(&mut summary, &output.summary).map_err(CliError::runtime)?;
    summary.flush().map_err(CliError::runtime)?;

    if variant == Variant::Approx {
        let mut triggers = create(&out.with_extension("triggers.csv"))?;
        write_trigger_csv(&mut triggers, &output.triggers).map_err(CliError::runtime)?;
        triggers.flush().map_err(CliError::runtime)?;
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let graph = load_graph(&args.source)?;
    let walks_path = resolve(&args.walks);
    let file = File::open(&walks_path)
        .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", walks_path.display())))?;
    let walks = read_walks(BufReader::new(file)).map_err(CliError::runtime)?;
    let histogram = degree_frequency_histogram(&walks, &graph, args.bucket_width)
        .map_err(CliError::runtime)?;

    let out = resolve(&args.out);
    let mut hist = create(&out.with_extension("hist.csv"))?;
    write_histogram_csv(&mut hist, &histogram).map_err(CliError::runtime)?;
    hist.flush().map_err(CliError::runtime)?;

    let peak_message_bytes = match &args.summary {
        Some(path) => {
            let path = resolve(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
            let summary: serde_json::Value =
                serde_json::from_str(&text).map_err(CliError::runtime)?;
            summary.get("peak_message_bytes").cloned()
        }
        None => None,
    };
    let estimate = graph.estimate_transprob_memory();
    let report = serde_json::json!({
        "vertices": graph.vertex_count(),
        "edges": graph.edge_count(),
        "max_degree": graph.max_degree(),
        "walks": walks.len(),
        "buckets": histogram.len(),
        // bytes to precompute every second-order transition probability,
        // versus what the on-demand runs actually moved
        "transprob_precompute_bytes": estimate.to_string(),
        "peak_message_bytes": peak_message_bytes,
    });
    let mut stats = create(&out.with_extension("stats.json"))?;
    serde_json::to_writer_pretty(&mut stats, &report).map_err(CliError::runtime)?;
    stats.flush().map_err(CliError::runtime)?;
    println!(
        "{} buckets -> {}.hist.csv; transition-table precompute estimate {} bytes",
        histogram.len(),
        out.display(),
        estimate
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let variants: Vec<Variant> = args
        .variants
        .split(',')
        .map(|name| {
            Variant::parse(name.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown variant '{name}'")))
        })
        .collect::<Result<_, _>>()?;
    let graph_specs: Vec<&str> = args.graphs.split(',').map(str::trim).collect();
    let pq_pairs: Vec<(f64, f64)> = args
        .pq
        .split(',')
        .map(|pair| {
            let (p, q) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("p:q pair '{pair}' malformed")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad number in p:q pair '{pair}'")))
            };
            Ok((parse(p)?, parse(q)?))
        })
        .collect::<Result<_, _>>()?;

    // generate each graph once, shared across the sweep
    let mut graphs: HashMap<&str, PartitionedGraph> = HashMap::new();
    let workers = args.workers.unwrap_or_else(default_workers);
    for spec in &graph_specs {
        let preset = parse_preset_spec(spec)?;
        let params = preset.params(args.seed).map_err(CliError::runtime)?;
        let (graph, _) = rmat::generate(&params).map_err(CliError::runtime)?;
        let pg = PartitionedGraph::new(graph, workers).map_err(CliError::runtime)?;
        graphs.insert(spec, pg);
    }

    let out = resolve(&args.out);
    let mut csv = create(&out)?;
    writeln!(
        csv,
        "variant,graph,p,q,wall_time_secs,supersteps,peak_bytes,remote_neig_bytes,error"
    )
    .map_err(CliError::runtime)?;
    for spec in &graph_specs {
        let pg = &graphs[spec];
        for &(p, q) in &pq_pairs {
            for &variant in &variants {
                let config = WalkConfig {
                    p,
                    q,
                    walk_length: args.l,
                    walks_per_vertex: args.r,
                    rounds: args.k_rounds,
                    popular_threshold: args.popular_threshold,
                    epsilon: args.epsilon,
                    cache_cap_bytes: None,
                    seed: args.seed,
                };
                match run_walks(pg, &config, variant) {
                    Ok(output) => {
                        let supersteps: usize =
                            output.summary.supersteps_per_run.iter().sum();
                        let remote_neig: u64 = output
                            .runs
                            .iter()
                            .flatten()
                            .map(|m| m.remote_neig_bytes)
                            .sum();
                        writeln!(
                            csv,
                            "{},{spec},{p},{q},{:.6},{supersteps},{},{remote_neig},",
                            variant.name(),
                            output.summary.wall_time_secs,
                            output.summary.peak_message_bytes
                        )
                        .map_err(CliError::runtime)?;
                    }
                    Err(err) => {
                        // record the failure and keep sweeping
                        let msg = err.to_string().replace(',', ";");
                        writeln!(csv, "{},{spec},{p},{q},,,,,{msg}", variant.name())
                            .map_err(CliError::runtime)?;
                    }
                }
            }
        }
    }
    csv.flush().map_err(CliError::runtime)?;
    println!("bench sweep written to {}", out.display());
    Ok(())
}

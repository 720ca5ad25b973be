use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use topotrack::eval::{restrict, scores};
use topotrack::export::{export_tracking_graph, serve, StaticSite, TrackingGraphDoc};
use topotrack::field::{add_noise, gaussian_mixture, load_field, save_raw, FieldFormat, GaussianSpec, ScalarField};
use topotrack::fixtures;
use topotrack::mergetree::{
    build_merge_tree, persistence_graph, persistence_graph_csv, simplify, Connectivity, Direction, MergeTree,
};
use topotrack::network::{encode, AttributeStrategy, EdgeStrategy, MeasureNetwork, NodeStrategy, StrategyConfig};
use topotrack::stability::{run_stability_experiment, StabilityConfig};
use topotrack::tracking::{detect, grid, run_pipeline, tune_curves, KindFilter, MPolicy, PipelineOutput, TrackingConfig};
use topotrack::transport::{solve_pfgw, AttributeMode, SolverParams};

#[derive(Parser)]
#[command(name = "topotrack", version, about = "Merge-tree feature tracking with partial fused GW couplings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Gaussian mixture on a regular grid.
    Gen(GenArgs),
    /// Write one of the built-in synthetic scenes.
    Scene(SceneArgs),
    /// Add uniform noise scaled by the field range.
    Noise(NoiseArgs),
    /// Build and simplify a merge tree.
    Tree(TreeArgs),
    /// Encode a merge tree as a measure network.
    Encode(EncodeArgs),
    /// Partial fused GW coupling between two networks.
    Dist(DistArgs),
    /// Track features through a directory of fields.
    Track(TrackArgs),
    /// Compare trajectories of a full and a strided run.
    Eval(EvalArgs),
    /// Noise sweep checking the GW stability bounds.
    Stability(StabilityArgs),
    /// Tracking-graph document for the explorer.
    Export(ExportArgs),
    /// Serve the tracking graph and the UI bundle.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// JSON list of {center, amplitude, sigma}.
    #[arg(long)]
    specs: PathBuf,
    /// Comma-separated grid extent, e.g. 64,64.
    #[arg(long)]
    dims: String,
    #[arg(long)]
    origin: Option<String>,
    #[arg(long)]
    spacing: Option<String>,
    #[arg(long, default_value_t = 0)]
    time: i64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SceneArgs {
    /// removal, split or rotating.
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 5)]
    steps: usize,
    #[arg(long, default_value_t = 2)]
    merge_step: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    iota: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "split")]
    direction: Direction,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long)]
    connectivity: Option<Connectivity>,
    #[arg(long)]
    out: PathBuf,
    /// Also write node counts over an epsilon grid (0..1 step 0.01).
    #[arg(long)]
    persistence: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, default_value = "sp")]
    edge: EdgeStrategy,
    #[arg(long, default_value = "uniform")]
    node: NodeStrategy,
    #[arg(long, default_value = "coords")]
    attr: AttributeStrategy,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value = "literal")]
    attribute_mode: AttributeMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrackArgs {
    /// Directory of .raw (with sidecars) or .csv fields.
    #[arg(long)]
    fields: PathBuf,
    #[arg(long, default_value_t = 0.06)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// fixed or adaptive.
    #[arg(long, default_value = "fixed")]
    m_policy: String,
    #[arg(long, default_value_t = 0.9)]
    m: f64,
    #[arg(long)]
    lstar: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value = "split")]
    direction: Direction,
    #[arg(long)]
    connectivity: Option<Connectivity>,
    #[arg(long, default_value = "sp")]
    edge: EdgeStrategy,
    #[arg(long, default_value = "uniform")]
    node: NodeStrategy,
    #[arg(long, default_value = "coords")]
    attr: AttributeStrategy,
    #[arg(long, default_value = "leaves")]
    filter: KindFilter,
    #[arg(long, default_value = "literal")]
    attribute_mode: AttributeMode,
    /// Skip the (alpha, m) grid search behind curves.csv.
    #[arg(long)]
    no_curves: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    subsampled: PathBuf,
    /// Inferred from the subsampled run's time steps when omitted.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long, default_value = "16x16")]
    grid: String,
    /// `lo..hi` (step given by --iota-step) or a comma list.
    #[arg(long, default_value = "0.01..0.10")]
    iotas: String,
    #[arg(long, default_value_t = 0.01)]
    iota_step: f64,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    gaussians: usize,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
    /// Mean and quartiles per noise level.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    doc: PathBuf,
    #[arg(long)]
    ui: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number {x:?}")))
        .collect()
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split([',', 'x'])
        .map(|x| x.trim().parse::<usize>().with_context(|| format!("bad extent {x:?}")))
        .collect()
}

fn parse_iotas(s: &str, step: f64) -> Result<Vec<f64>> {
    match s.split_once("..") {
        Some((lo, hi)) => Ok(grid(lo.parse()?, hi.parse()?, step)),
        None => parse_list(s),
    }
}

fn write_or_print(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{body}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

fn read_field(path: &Path) -> Result<ScalarField<f64>> {
    Ok(load_field(path, FieldFormat::from_path(path))?)
}

/// Fields of a directory ordered by time index, then file name.
fn read_series(dir: &Path) -> Result<Vec<ScalarField<f64>>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("raw" | "csv")))
        .collect();
    paths.sort();
    let mut fields = Vec::with_capacity(paths.len());
    for (k, p) in paths.iter().enumerate() {
        let f = read_field(p)?;
        // csv fields carry no time index
        let f = if p.extension().is_some_and(|e| e == "csv") {
            f.with_time_index(k as i64)
        } else {
            f
        };
        fields.push(f);
    }
    fields.sort_by_key(ScalarField::time_index);
    if fields.is_empty() {
        bail!("no .raw or .csv fields in {}", dir.display());
    }
    Ok(fields)
}

fn gen(args: GenArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.specs).with_context(|| format!("reading {}", args.specs.display()))?;
    let specs: Vec<GaussianSpec<f64>> = serde_json::from_str(&text)?;
    let dims = parse_dims(&args.dims)?;
    let origin = args.origin.as_deref().map(parse_list).transpose()?.unwrap_or(vec![0.0; dims.len()]);
    let spacing = args.spacing.as_deref().map(parse_list).transpose()?.unwrap_or(vec![1.0; dims.len()]);
    let field = gaussian_mixture(&specs, &dims, &origin, &spacing)?.with_time_index(args.time);
    save_raw(&field, &args.out)?;
    Ok(())
}

fn scene(args: SceneArgs) -> Result<()> {
    let fields = match args.name.as_str() {
        "removal" => {
            let (a, b) = fixtures::removal_pair()?;
            vec![a, b]
        }
        "split" => {
            let (a, b) = fixtures::split_pair()?;
            vec![a, b]
        }
        "rotating" => fixtures::rotating_cycle(args.steps, args.merge_step)?,
        other => bail!("unknown scene {other:?}; expected removal, split or rotating"),
    };
    std::fs::create_dir_all(&args.out)?;
    for f in &fields {
        save_raw(f, &args.out.join(format!("t{:04}.raw", f.time_index())))?;
    }
    Ok(())
}

fn noise(args: NoiseArgs) -> Result<()> {
    let field = read_field(&args.input)?;
    save_raw(&add_noise(&field, args.iota, args.seed)?, &args.out)?;
    Ok(())
}

fn tree(args: TreeArgs) -> Result<()> {
    let field = read_field(&args.input)?;
    let conn = args.connectivity.unwrap_or_else(|| Connectivity::default_for(field.dimension()));
    let full = build_merge_tree(&field, args.direction, conn)?;
    if let Some(path) = &args.persistence {
        let rows = persistence_graph(&full, &grid(0.0, 1.0, 0.01))?;
        std::fs::write(path, persistence_graph_csv(&rows))?;
    }
    let t = simplify(&full, args.eps)?;
    std::fs::write(&args.out, t.to_json()?)?;
    log::info!("{} nodes after simplification", t.len());
    Ok(())
}

fn encode_cmd(args: EncodeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.tree)?;
    let tree = MergeTree::<f64>::from_json(&text)?;
    let cfg = StrategyConfig {
        edge: args.edge,
        node: args.node,
        attribute: args.attr,
    };
    write_or_print(args.out.as_deref(), &encode(&tree, &cfg)?.to_json()?)
}

fn dist(args: DistArgs) -> Result<()> {
    let a = MeasureNetwork::<f64>::from_json(&std::fs::read_to_string(&args.a)?)?;
    let b = MeasureNetwork::<f64>::from_json(&std::fs::read_to_string(&args.b)?)?;
    let params = SolverParams::new(args.alpha, args.m)
        .with_q(args.q)
        .with_max_iters(args.max_iters)
        .with_attribute_mode(args.attribute_mode);
    let report = solve_pfgw(&a, &b, &params)?;
    if !report.converged {
        log::warn!("solver stopped at the iteration limit");
    }
    write_or_print(args.out.as_deref(), &report.to_json()?)
}

fn track(args: TrackArgs) -> Result<()> {
    let fields = read_series(&args.fields)?;
    let m_policy = match args.m_policy.as_str() {
        "fixed" => MPolicy::Fixed { m: args.m },
        "adaptive" => MPolicy::Adaptive {
            l_star: args.lstar.context("--m-policy adaptive needs --lstar")?,
        },
        other => bail!("unknown m policy {other:?}"),
    };
    let config = TrackingConfig {
        epsilon: args.eps,
        strategy: StrategyConfig {
            edge: args.edge,
            node: args.node,
            attribute: args.attr,
        },
        alpha: args.alpha,
        m_policy,
        q: args.q,
        direction: args.direction,
        connectivity: args.connectivity,
        filter: args.filter,
        attribute_mode: args.attribute_mode,
        ..TrackingConfig::default()
    };
    let out = run_pipeline(&fields, &config)?;
    for w in &out.warnings {
        log::warn!("{w}");
    }
    out.write(&args.out)?;
    if !args.no_curves {
        let networks = fields.iter().map(|f| detect(f, &config)).collect::<topotrack::Result<Vec<_>>>()?;
        let diagonal = out.frames.first().map_or(1.0, |f| f.diagonal);
        let curves = tune_curves(
            &networks,
            &out.frames,
            &config.alpha_grid,
            &config.m_grid,
            &config.options(diagonal),
        )?;
        std::fs::write(args.out.join("curves.csv"), curves.to_csv()?)?;
        for (alpha, e) in &curves.elbows {
            log::info!("alpha {alpha}: L elbow at m = {} (L = {})", e.x, e.y);
        }
    }
    println!("N = {}, L = {}", out.metrics.n, out.metrics.l);
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let full = PipelineOutput::read(&args.original)?;
    let strided = PipelineOutput::read(&args.subsampled)?;
    let t0 = strided.frames.first().map_or(0, |f| f.t);
    let stride = match args.stride {
        Some(s) => s,
        None => match strided.frames.as_slice() {
            [a, b, ..] => usize::try_from(b.t - a.t).context("subsampled time steps are not increasing")?,
            _ => bail!("cannot infer the stride from fewer than two subsampled steps; pass --stride"),
        },
    };
    let a = restrict(&full.trajectories, stride, t0);
    let s = scores(&a, &strided.trajectories);
    write_or_print(args.out.as_deref(), &serde_json::to_string_pretty(&s)?)
}

fn stability(args: StabilityArgs) -> Result<()> {
    let config = StabilityConfig {
        dims: parse_dims(&args.grid)?,
        iotas: parse_iotas(&args.iotas, args.iota_step)?,
        instances: args.instances,
        seed: args.seed,
        gaussians: args.gaussians,
        q: args.q,
        max_iters: args.max_iters,
    };
    let report = run_stability_experiment(&config)?;
    report.write_csv(&args.out)?;
    if let Some(p) = &args.summary {
        std::fs::write(p, report.summary_csv()?)?;
    }
    let violations: usize = report.records.iter().map(|r| r.violations(1e-9).len()).sum();
    println!("{} records, {} bound violations", report.records.len(), violations);
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    let run = PipelineOutput::read(&args.run)?;
    export_tracking_graph(&run)?.write(&args.out)?;
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.doc).with_context(|| format!("reading {}", args.doc.display()))?;
    TrackingGraphDoc::from_json(&text)?;
    let site = StaticSite::new(&args.doc, args.ui.as_deref())?;
    let server = serve(site, &format!("{}:{}", args.host, args.port))?;
    println!("serving on http://{}", server.addr());
    let (tx, rx) = mpsc::channel();
    ctrlc::set_handler(move || {
        let _ = tx.send(());
    })?;
    let _ = rx.recv();
    server.shutdown();
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Gen(a) => gen(a),
        Command::Scene(a) => scene(a),
        Command::Noise(a) => noise(a),
        Command::Tree(a) => tree(a),
        Command::Encode(a) => encode_cmd(a),
        Command::Dist(a) => dist(a),
        Command::Track(a) => track(a),
        Command::Eval(a) => eval(a),
        Command::Stability(a) => stability(a),
        Command::Export(a) => export(a),
        Command::Serve(a) => serve_cmd(a),
    }
}

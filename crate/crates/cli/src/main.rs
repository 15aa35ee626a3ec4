use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use shapegraph::io::{self, SummaryFormat};
use shapegraph::metrics::segment_report;
use shapegraph::scaling::scaling_run;
use shapegraph::synth::{gen_annulus, gen_blobs, gen_sphere};
use shapegraph::{run_pipeline_detailed, PipelineConfig, PointCloud};

#[derive(Parser)]
#[command(name = "shapegraph", version, about = "Summarize a point cloud as a small topology-preserving graph")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a summary graph from a point file.
    Run(RunArgs),
    /// Write a synthetic point cloud.
    Gen(GenArgs),
    /// Score the segments of a summary graph on its points.
    Metrics(MetricsArgs),
    /// Time the pipeline on sphere samples of growing size.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PointFormat {
    Csv,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Graphml,
    Dot,
}

impl From<OutFormat> for SummaryFormat {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => SummaryFormat::Json,
            OutFormat::Graphml => SummaryFormat::Graphml,
            OutFormat::Dot => SummaryFormat::Dot,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Point file (CSV or SVPC binary).
    #[arg(long)]
    input: PathBuf,
    /// Defaults to `bin` for .bin/.svpc files, `csv` otherwise.
    #[arg(long, value_enum)]
    format: Option<PointFormat>,
    /// CSV column holding integer labels.
    #[arg(long)]
    label_col: Option<usize>,
    /// First CSV row is a header.
    #[arg(long)]
    has_header: bool,
}

impl InputArgs {
    fn load(&self) -> Result<PointCloud> {
        let binary = match self.format {
            Some(PointFormat::Bin) => true,
            Some(PointFormat::Csv) => false,
            None => matches!(
                self.input.extension().and_then(|e| e.to_str()),
                Some("bin" | "svpc")
            ),
        };
        let read = if binary {
            io::read_binary(&self.input)
        } else {
            io::read_csv(&self.input, self.has_header, self.label_col)
        };
        let pc = match read {
            Ok(pc) => pc,
            // I/O errors already carry the path
            Err(err @ shapegraph::Error::Io { .. }) => return Err(err.into()),
            Err(err) => return Err(anyhow::Error::new(err).context(self.input.display().to_string())),
        };
        log::info!("read {} points in R^{} from {}", pc.len(), pc.dim(), self.input.display());
        Ok(pc)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    walk_len: Option<String>,
    #[arg(long)]
    th: Option<String>,
    #[arg(long)]
    m_cap: Option<String>,
    /// Sample fraction, e.g. `0.25` or `1/3`.
    #[arg(long)]
    m_frac: Option<String>,
    #[arg(long)]
    hops: Option<String>,
    #[arg(long)]
    level: Option<String>,
    /// paper (c = 2 ln Q) | fixed:<c> | all | none
    #[arg(long)]
    tearing: Option<String>,
    /// euclidean | cosine
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<String>,
    /// sequential | parallel
    #[arg(long)]
    execution: Option<String>,
    /// Count walks ending in their own landmark's cell in the row totals.
    #[arg(long)]
    retain_self: bool,
    /// Summary graph destination.
    #[arg(long, default_value = "summary.json")]
    out: PathBuf,
    /// Defaults to the extension of --out, then json.
    #[arg(long, value_enum)]
    out_format: Option<OutFormat>,
    /// Write the run report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the landmark graph as `i,j,w` lines here.
    #[arg(long)]
    dump_weights: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_kv(&text).with_context(|| format!("in {}", path.display()))?;
        }
        let flags = [
            ("k", &self.k),
            ("beta", &self.beta),
            ("walk-len", &self.walk_len),
            ("th", &self.th),
            ("m-cap", &self.m_cap),
            ("m-frac", &self.m_frac),
            ("hops", &self.hops),
            ("level", &self.level),
            ("tearing", &self.tearing),
            ("metric", &self.metric),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("execution", &self.execution),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.retain_self {
            cfg.retain_self_transitions = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Sphere,
    Blobs,
    Annulus,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    shape: Shape,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Ambient dimension (sphere, blobs).
    #[arg(long, default_value_t = 25)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    centers: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 20.0)]
    separation: f64,
    /// Radial half-width of the annulus.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `bin` for .bin/.svpc files, `csv` otherwise.
    #[arg(long, value_enum)]
    format: Option<PointFormat>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Summary graph JSON written by `run`.
    #[arg(long)]
    summary: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Ascending, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 20_000, 40_000, 80_000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 25)]
    d: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    let pc = args.input.load()?;
    let output = run_pipeline_detailed(&pc, &cfg)?;
    let format = args
        .out_format
        .map(SummaryFormat::from)
        .or_else(|| SummaryFormat::from_path(&args.out))
        .unwrap_or(SummaryFormat::Json);
    io::write_summary(&output.summary, format, &args.out)?;
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(&output.report)?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.dump_weights {
        io::write_weight_triplets(&output.landmark_graph, path)?;
    }
    eprintln!(
        "{} nodes, {} edges ({} reinstated), {} components -> {}",
        output.summary.node_count(),
        output.summary.edge_count(),
        output.report.edges_reinstated,
        output.summary.component_count(),
        args.out.display()
    );
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    let pc = match args.shape {
        Shape::Sphere => gen_sphere(args.n, args.d, args.seed)?,
        Shape::Blobs => gen_blobs(args.n, args.d, args.centers, args.sigma, args.separation, args.seed)?,
        Shape::Annulus => gen_annulus(args.n, args.noise, args.seed)?,
    };
    let binary = match args.format {
        Some(PointFormat::Bin) => true,
        Some(PointFormat::Csv) => false,
        None => matches!(args.out.extension().and_then(|e| e.to_str()), Some("bin" | "svpc")),
    };
    if binary {
        io::write_binary(&pc, &args.out)?;
    } else {
        io::write_csv(&pc, &args.out)?;
    }
    Ok(())
}

fn metrics(args: &MetricsArgs) -> Result<()> {
    let pc = args.input.load()?;
    let g = io::read_summary_json(&args.summary)?;
    if g.point_assignment.len() != pc.len() {
        bail!(
            "{} assigns {} points but {} has {}",
            args.summary.display(),
            g.point_assignment.len(),
            args.input.input.display(),
            pc.len()
        );
    }
    let report = segment_report(&pc, &g, args.seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let cfg = PipelineConfig {
        threads: args.threads,
        seed: args.seed,
        ..PipelineConfig::default()
    };
    let table = scaling_run(&args.sizes, args.d, &cfg, args.seed)?;
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            table.write_csv(file)?;
        }
        None => {
            let stdout = std::io::stdout();
            table.write_csv(stdout.lock())?;
        }
    }
    for (n, err) in &table.failures {
        eprintln!("n = {n} failed: {err}");
    }
    match table.slope {
        Some(s) => eprintln!("log-log slope: {s:.3}"),
        None => eprintln!("log-log slope: null"),
    }
    Ok(())
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Gen(a) => gen(a),
        Command::Metrics(a) => metrics(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let _ = writeln!(std::io::stderr(), "error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

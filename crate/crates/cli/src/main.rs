//! `ddclust`: dataset generation, protocol runs, sweeps and spanner queries.
//!
//! Exit codes: 0 success, 1 bad arguments or configuration, 2 failure while
//! computing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddclust::datasets::{self, GaussiansConfig, PointCloud, RgbRaster, ScheduleConfig, SimilarityGraphConfig};
use ddclust::experiment::{self, DatasetSpec, ExperimentConfig, SweepAxis};
use ddclust::io::{read_edge_list, write_edge_list};
use ddclust::protocols::{Algorithm, StreamSchedule};
use ddclust::spanner;
use ddclust::Graph;

#[derive(Parser)]
#[command(name = "ddclust", version, about = "Distributed dynamic graph clustering experiments")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate datasets and arrival schedules.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run the configured algorithms and write per-run CSVs plus summary.json.
    Run(RunArgs),
    /// Vary s or t and write sweep_<axis>.csv.
    Sweep(SweepArgs),
    /// Turn a run directory into long-format plot CSVs.
    Plotdata {
        /// Directory written by `run`.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Distributed (2k-1)-spanner over a schedule with coordinator queries.
    Spanner(SpannerArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Four 2-D Gaussian clusters and their kNN similarity graph.
    Gaussians {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge list output.
        #[arg(long)]
        out: PathBuf,
        /// Point CSV output.
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        per_cluster: Option<usize>,
    },
    /// Pixel similarity graph of a PNG or PPM image.
    Image {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 80)]
        k: usize,
        #[arg(long, default_value_t = 20.0)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
    /// Arrival schedule for a graph whose points order the stream.
    Schedule {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 10)]
        t: usize,
        #[arg(long, default_value_t = 30)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        delete_frac: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags that override fields of the JSON config.
#[derive(Args, Default)]
struct Overrides {
    /// JSON config file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    oversampling_factor: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    delete_frac: Option<f64>,
    #[arg(long)]
    cluster_every: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Use an edge list instead of generated Gaussians (needs --points).
    #[arg(long, requires = "points")]
    graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    points: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Parameter to vary.
    #[arg(long, value_parser = parse_axis)]
    axis: SweepAxis,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
}

#[derive(Args)]
struct SpannerArgs {
    /// Stretch parameter; the spanner has stretch 2k-1.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    schedule: PathBuf,
    /// CSV with header `u,v`, one query per row.
    #[arg(long)]
    queries: PathBuf,
    /// Node count; defaults to one past the largest index in the schedule.
    #[arg(long)]
    n: Option<usize>,
    /// Output CSV `tau,u,v,approx_dist,comm_cumulative`; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    match s {
        "s" => Ok(SweepAxis::S),
        "t" => Ok(SweepAxis::T),
        _ => Err(format!("axis must be `s` or `t`, got `{s}`")),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

type Outcome = Result<(), Failure>;

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p).map_err(config)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.algorithms {
            c.algorithms = v.clone();
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = &self.$f { c.$f = v.clone(); })* };
        }
        set!(t, s, k, epsilon, delta, oversampling_factor, seeds, delete_frac, cluster_every, out_dir);
        if let (Some(graph), Some(points)) = (&self.graph, &self.points) {
            c.dataset = DatasetSpec::Files {
                graph: graph.clone(),
                points: points.clone(),
            };
        }
        c.validate().map_err(config)?;
        Ok(c)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(runtime)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_dataset(g: &Graph, pc: &PointCloud, out: &Path, points: &Path) -> Outcome {
    write_edge_list(g, create(out)?).map_err(runtime)?;
    pc.write_csv(create(points)?).map_err(runtime)?;
    eprintln!("wrote {} nodes, {} edges", g.n(), g.m());
    Ok(())
}

fn load_raster(path: &Path) -> Result<RgbRaster, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(b"P3") || bytes.starts_with(b"P6") {
        return datasets::parse_ppm(&bytes).map_err(config);
    }
    let img = image::load_from_memory(&bytes).map_err(config)?.to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    RgbRaster::new(w as usize, h as usize, pixels).map_err(config)
}

fn gen(cmd: GenCommand) -> Outcome {
    match cmd {
        GenCommand::Gaussians {
            seed,
            out,
            points,
            per_cluster,
        } => {
            let mut gc = GaussiansConfig::default();
            if let Some(p) = per_cluster {
                if p == 0 {
                    return Err(Failure::Config("--per-cluster must be positive".into()));
                }
                gc.per_cluster = p;
            }
            let (pc, g) = datasets::gen_gaussians_with(&gc, seed).map_err(runtime)?;
            write_dataset(&g, &pc, &out, &points)
        }
        GenCommand::Image {
            input,
            k,
            sigma,
            out,
            points,
        } => {
            let raster = load_raster(&input)?;
            let sim = SimilarityGraphConfig::new(k, sigma).map_err(config)?;
            let (pc, g) = datasets::gen_image_graph(&raster, &sim).map_err(runtime)?;
            write_dataset(&g, &pc, &out, &points)
        }
        GenCommand::Schedule {
            graph,
            points,
            t,
            s,
            seed,
            delete_frac,
            out,
        } => {
            let g = read_edge_list(open(&graph)?).map_err(config)?;
            let pc = PointCloud::read_csv(open(&points)?).map_err(config)?;
            if pc.len() != g.n() {
                return Err(Failure::Config(format!(
                    "{} points for a graph on {} nodes",
                    pc.len(),
                    g.n()
                )));
            }
            let cfg = ScheduleConfig {
                t,
                s,
                seed,
                delete_frac,
            };
            let sch = datasets::gen_schedule(&g, &pc, &cfg).map_err(config)?;
            sch.write_csv(create(&out)?).map_err(runtime)?;
            eprintln!("wrote {} inserts, {} deletes", sch.insert_count(), sch.delete_count());
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Outcome {
    let cfg = args.overrides.resolve()?;
    let report = experiment::run_experiment(&cfg).map_err(runtime)?;
    for r in &report.runs {
        let nc = r.final_ncut.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:<7} seed {:<4} comm {:>8}  ncut {nc}", r.algorithm.name(), r.seed, r.final_comm);
    }
    eprintln!("results in {}", cfg.out_dir.display());
    Ok(())
}

fn sweep(args: SweepArgs) -> Outcome {
    let cfg = args.overrides.resolve()?;
    if args.values.contains(&0) {
        return Err(Failure::Config("sweep values must be positive".into()));
    }
    let rows = experiment::run_sweep(&cfg, args.axis, &args.values).map_err(runtime)?;
    for r in &rows {
        println!("{}={:<4} {:<7} comm {:>10.1}", args.axis.name(), r.value, r.algorithm.name(), r.mean_comm);
    }
    Ok(())
}

fn read_queries(path: &Path) -> Result<Vec<(usize, usize)>, Failure> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<(usize, usize)>().enumerate() {
        out.push(rec.map_err(|e| Failure::Config(format!("{} line {}: {e}", path.display(), i + 2)))?);
    }
    Ok(out)
}

fn spanner_cmd(args: SpannerArgs) -> Outcome {
    let sch = StreamSchedule::read_csv(open(&args.schedule)?, args.n, None, None).map_err(config)?;
    let queries = read_queries(&args.queries)?;
    for &(u, v) in &queries {
        if u >= sch.n() || v >= sch.n() {
            return Err(Failure::Config(format!("query ({u}, {v}) outside {} nodes", sch.n())));
        }
    }
    if args.k < 2 {
        return Err(Failure::Config("--k must be at least 2".into()));
    }
    let (records, _) = spanner::run_spanner(&sch, args.k, &queries).map_err(runtime)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["tau", "u", "v", "approx_dist", "comm_cumulative"]).map_err(runtime)?;
    for r in records {
        w.write_record([
            r.tau.to_string(),
            r.u.to_string(),
            r.v.to_string(),
            r.approx_dist.to_string(),
            r.comm_cumulative.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let outcome = match cli.command {
        Command::Gen(g) => gen(g),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Plotdata { dir } => match experiment::emit_plotdata(&dir) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                Ok(())
            }
            Err(e) => Err(config(e)),
        },
        Command::Spanner(a) => spanner_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

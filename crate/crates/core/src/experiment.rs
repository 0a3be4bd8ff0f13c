//! Experiment harness: JSON configs, protocol runs over several seeds,
//! parameter sweeps and long-format plot data.
//!
//! Output layout of [`run_experiment`] in `out_dir`:
//!
//! ```text
//! runs/<algorithm>-seed<seed>.csv   tau,comm_cumulative,ncut
//! summary.json                      config echo, sizes, seeds, version, timestamp
//! ```
//!
//! [`run_sweep`] writes `sweep_s.csv` or `sweep_t.csv` and [`emit_plotdata`]
//! turns a finished run directory into `plot_comm.csv` and `plot_ncut.csv`.
//! Only `summary.json` carries a timestamp, so every CSV is reproducible
//! byte for byte from the config.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::datasets::{self, GaussiansConfig, PointCloud, ScheduleConfig};
use crate::graph::Graph;
use crate::io::read_edge_list;
use crate::protocols::{self, Algorithm, ProtocolRun, RunParams, StreamSchedule};
use crate::{Error, Result};

/// Ridge used by the experiment defaults (λ = δ/ε = 300 at ε = 0.3).
pub const EXPERIMENT_DELTA: f64 = 90.0;
/// Oversampling factor used by the experiment defaults.
pub const EXPERIMENT_OVERSAMPLING_FACTOR: f64 = 0.4;
/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "DDCLUST_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Synthetic Gaussians, regenerated from each replicate seed.
    Gaussians {
        #[serde(default)]
        per_cluster: Option<usize>,
    },
    /// A fixed graph (`u v w` edge list) plus a point CSV whose first column
    /// orders the edge arrivals.
    Files { graph: PathBuf, points: PathBuf },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Gaussians { per_cluster: None }
    }
}

fn d_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}
fn d_t() -> usize {
    10
}
fn d_s() -> usize {
    30
}
fn d_k() -> usize {
    4
}
fn d_epsilon() -> f64 {
    0.3
}
fn d_delta() -> f64 {
    EXPERIMENT_DELTA
}
fn d_factor() -> f64 {
    EXPERIMENT_OVERSAMPLING_FACTOR
}
fn d_seeds() -> Vec<u64> {
    vec![0]
}
fn d_cluster_every() -> usize {
    1
}
fn d_out() -> PathBuf {
    PathBuf::from("results")
}

/// Everything a run or sweep needs. Each entry of `seeds` is one replicate:
/// it seeds the dataset, the arrival schedule and the samplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default = "d_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "d_t")]
    pub t: usize,
    #[serde(default = "d_s")]
    pub s: usize,
    #[serde(default = "d_k")]
    pub k: usize,
    #[serde(default = "d_epsilon")]
    pub epsilon: f64,
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[serde(default = "d_factor")]
    pub oversampling_factor: f64,
    #[serde(default = "d_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub delete_frac: f64,
    /// Cluster every this many time points (and at the last); 0 never.
    #[serde(default = "d_cluster_every")]
    pub cluster_every: usize,
    #[serde(default = "d_out")]
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::InvalidParameter(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.algorithms.is_empty() {
            return bad("algorithm list is empty".into());
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.t == 0 || self.s == 0 || self.k == 0 {
            return bad(format!("t, s and k must be positive (t={}, s={}, k={})", self.t, self.s, self.k));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / 3.0) {
            return bad(format!("epsilon must lie in (0, 1/3), got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.oversampling_factor > 0.0 && self.oversampling_factor.is_finite()) {
            return bad(format!("oversampling_factor must be positive, got {}", self.oversampling_factor));
        }
        if !(0.0..1.0).contains(&self.delete_frac) {
            return bad(format!("delete_frac must lie in [0, 1), got {}", self.delete_frac));
        }
        match &self.dataset {
            DatasetSpec::Gaussians { per_cluster: Some(0) } => {
                return bad("per_cluster must be positive".into())
            }
            DatasetSpec::Files { graph, points } => {
                for p in [graph, points] {
                    if !p.is_file() {
                        return bad(format!("dataset file {} does not exist", p.display()));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn run_params(&self, seed: u64) -> RunParams {
        let mut p = RunParams::new(self.k, self.epsilon, self.delta, seed);
        p.oversampling_factor = self.oversampling_factor;
        p.cluster_every = self.cluster_every;
        p
    }

    pub fn schedule_config(&self, seed: u64) -> ScheduleConfig {
        ScheduleConfig {
            t: self.t,
            s: self.s,
            seed,
            delete_frac: self.delete_frac,
        }
    }
}

/// A loaded dataset: points (for arrival ordering) and the full graph.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub points: PointCloud,
    pub graph: Graph,
}

pub fn load_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    match spec {
        DatasetSpec::Gaussians { per_cluster } => {
            let mut gc = GaussiansConfig::default();
            if let Some(p) = per_cluster {
                gc.per_cluster = *p;
            }
            let (points, graph) = datasets::gen_gaussians_with(&gc, seed)?;
            Ok(Dataset { points, graph })
        }
        DatasetSpec::Files { graph, points } => {
            let g = read_edge_list(std::io::BufReader::new(File::open(graph)?))?;
            let pc = PointCloud::read_csv(File::open(points)?)?;
            if pc.len() != g.n() {
                return Err(Error::DimensionMismatch {
                    expected: g.n(),
                    got: pc.len(),
                });
            }
            Ok(Dataset {
                points: pc,
                graph: g,
            })
        }
    }
}

/// Datasets keyed by seed; file datasets are loaded once and shared.
fn load_all(cfg: &ExperimentConfig) -> Result<BTreeMap<u64, Dataset>> {
    let mut out = BTreeMap::new();
    let shared = match &cfg.dataset {
        DatasetSpec::Files { .. } => Some(load_dataset(&cfg.dataset, 0)?),
        _ => None,
    };
    for &seed in &cfg.seeds {
        let d = match &shared {
            Some(d) => d.clone(),
            None => load_dataset(&cfg.dataset, seed)?,
        };
        out.insert(seed, d);
    }
    Ok(out)
}

/// Worker count from [`THREADS_ENV`], defaulting to 1.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Maps `f` over `items` on up to `threads` workers, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = Mutex::new(0usize);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(items.len()) {
            scope.spawn(|| loop {
                let i = {
                    let mut g = next.lock().expect("index lock");
                    let i = *g;
                    *g += 1;
                    i
                };
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every cell ran"))
        .collect()
}

/// Summary line of one (algorithm, seed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub inserts: usize,
    pub deletes: usize,
    pub final_comm: u64,
    pub final_sketch_edges: usize,
    pub final_ncut: Option<f64>,
    pub csv: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub created_unix: u64,
    pub config: ExperimentConfig,
    pub runs: Vec<RunSummary>,
    #[serde(default)]
    pub error: Option<String>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn run_csv_name(alg: Algorithm, seed: u64) -> String {
    format!("runs/{}-seed{}.csv", alg.name(), seed)
}

/// Writes `tau,comm_cumulative,ncut`; an unavailable NCut is an empty field.
pub fn write_run_csv<W: Write>(run: &ProtocolRun, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "comm_cumulative", "ncut"]).map_err(csv_err)?;
    for p in &run.points {
        let nc = p.ncut.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([p.tau.to_string(), p.comm_cumulative.to_string(), nc])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse {
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Runs every (algorithm, seed) cell, writes the per-run CSVs and
/// `summary.json`. On a mid-run failure the finished CSVs are kept and the
/// summary records the error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    fs::create_dir_all(cfg.out_dir.join("runs"))?;
    let mut report = Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: now_unix(),
        config: cfg.clone(),
        runs: Vec::new(),
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let data = load_all(cfg)?;
        let mut schedules = BTreeMap::new();
        for (&seed, d) in &data {
            schedules.insert(seed, datasets::gen_schedule(&d.graph, &d.points, &cfg.schedule_config(seed))?);
        }
        let cells: Vec<(u64, Algorithm)> = cfg
            .seeds
            .iter()
            .flat_map(|&s| cfg.algorithms.iter().map(move |&a| (s, a)))
            .collect();
        let results = par_map(&cells, thread_count(), |&(seed, alg)| {
            log::info!("running {alg} seed {seed}");
            protocols::run(alg, &schedules[&seed], &cfg.run_params(seed))
        });
        let mut first_err = None;
        for (&(seed, alg), res) in cells.iter().zip(results) {
            match res {
                Ok(run) => {
                    let name = run_csv_name(alg, seed);
                    write_run_csv(&run, BufWriter::new(File::create(cfg.out_dir.join(&name))?))?;
                    let sch = &schedules[&seed];
                    report.runs.push(RunSummary {
                        algorithm: alg,
                        seed,
                        n: sch.n(),
                        m: data[&seed].graph.m(),
                        inserts: sch.insert_count(),
                        deletes: sch.delete_count(),
                        final_comm: run.final_comm(),
                        final_sketch_edges: run.sketch.m(),
                        final_ncut: run.final_ncut(),
                        csv: name,
                    });
                }
                Err(e) => {
                    log::error!("{alg} seed {seed} failed: {e}");
                    first_err.get_or_insert(e);
                }
            }
        }
        first_err.map_or(Ok(()), Err)
    })();
    if let Err(e) = &outcome {
        report.error = Some(e.to_string());
    }
    write_json(&cfg.out_dir.join("summary.json"), &report)?;
    outcome.map(|_| report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    S,
    T,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::S => "s",
            SweepAxis::T => "t",
        }
    }
}

/// One `(value, algorithm)` cell of a sweep, averaged over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub algorithm: Algorithm,
    pub mean_comm: f64,
    pub mean_ncut: Option<f64>,
    pub comm_per_seed: Vec<u64>,
}

/// Varies `s` or `t` over `values`, runs every algorithm for every seed and
/// writes `sweep_<axis>.csv` with columns `<axis>,algorithm,comm,ncut`.
pub fn run_sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[usize]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if values.is_empty() || values.contains(&0) {
        return Err(Error::InvalidParameter("sweep values must be positive and non-empty".into()));
    }
    let data = load_all(cfg)?;
    let mut cells = Vec::new();
    for &v in values {
        for &alg in &cfg.algorithms {
            for &seed in &cfg.seeds {
                cells.push((v, alg, seed));
            }
        }
    }
    let results = par_map(&cells, thread_count(), |&(v, alg, seed)| -> Result<(u64, Option<f64>)> {
        let mut c = cfg.clone();
        match axis {
            SweepAxis::S => c.s = v,
            SweepAxis::T => c.t = v,
        }
        let d = &data[&seed];
        let sch = datasets::gen_schedule(&d.graph, &d.points, &c.schedule_config(seed))?;
        log::info!("sweep {}={v} {alg} seed {seed}", axis.name());
        let run = protocols::run(alg, &sch, &c.run_params(seed))?;
        Ok((run.final_comm(), run.final_ncut()))
    });
    let mut rows: Vec<SweepRow> = Vec::new();
    for (&(v, alg, _), res) in cells.iter().zip(results) {
        let (comm, nc) = res?;
        match rows.last_mut() {
            Some(r) if r.value == v && r.algorithm == alg => {
                r.comm_per_seed.push(comm);
                r.mean_ncut = r.mean_ncut.zip(nc).map(|(a, b)| a + b);
            }
            _ => rows.push(SweepRow {
                value: v,
                algorithm: alg,
                mean_comm: 0.0,
                mean_ncut: nc,
                comm_per_seed: vec![comm],
            }),
        }
    }
    for r in &mut rows {
        let k = r.comm_per_seed.len() as f64;
        r.mean_comm = r.comm_per_seed.iter().sum::<u64>() as f64 / k;
        r.mean_ncut = r.mean_ncut.map(|s| s / k);
    }
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(format!("sweep_{}.csv", axis.name()));
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([axis.name(), "algorithm", "comm", "ncut"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.value.to_string(),
            r.algorithm.name().to_string(),
            r.mean_comm.to_string(),
            r.mean_ncut.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Deserialize)]
struct RunRow {
    tau: usize,
    comm_cumulative: u64,
    ncut: Option<f64>,
}

pub fn read_run_csv<R: std::io::Read>(input: R) -> Result<Vec<(usize, u64, Option<f64>)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<RunRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?;
        out.push((row.tau, row.comm_cumulative, row.ncut));
    }
    Ok(out)
}

/// Reads a finished run directory and writes `plot_comm.csv` and
/// `plot_ncut.csv` (`series,tau,value`, one series per algorithm, averaged
/// over seeds). Rows are ordered by algorithm as configured, then τ.
/// Returns the paths written.
pub fn emit_plotdata(report_dir: &Path) -> Result<Vec<PathBuf>> {
    let summary_path = report_dir.join("summary.json");
    let text = fs::read_to_string(&summary_path).map_err(|e| {
        Error::InvalidParameter(format!("cannot read {}: {e}", summary_path.display()))
    })?;
    let report: Report = serde_json::from_str(&text)?;
    let mut comm: Vec<(Algorithm, BTreeMap<usize, Vec<f64>>)> = Vec::new();
    let mut ncut: Vec<(Algorithm, BTreeMap<usize, Vec<f64>>)> = Vec::new();
    for alg in &report.config.algorithms {
        let mut c = BTreeMap::new();
        let mut nc = BTreeMap::new();
        for run in report.runs.iter().filter(|r| r.algorithm == *alg) {
            let rows = read_run_csv(File::open(report_dir.join(&run.csv))?)?;
            for (tau, cc, v) in rows {
                c.entry(tau).or_insert_with(Vec::new).push(cc as f64);
                if let Some(v) = v {
                    nc.entry(tau).or_insert_with(Vec::new).push(v);
                }
            }
        }
        comm.push((*alg, c));
        ncut.push((*alg, nc));
    }
    let mut written = Vec::new();
    for (metric, series) in [("comm", comm), ("ncut", ncut)] {
        let path = report_dir.join(format!("plot_{metric}.csv"));
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        w.write_record(["series", "tau", "value"]).map_err(csv_err)?;
        for (alg, by_tau) in series {
            for (tau, vals) in by_tau {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                w.write_record([alg.name().to_string(), tau.to_string(), mean.to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Loads the schedule a config would generate for `seed`, for callers that
/// drive protocols directly.
pub fn schedule_for(cfg: &ExperimentConfig, seed: u64) -> Result<(Dataset, StreamSchedule)> {
    let d = load_dataset(&cfg.dataset, seed)?;
    let sch = datasets::gen_schedule(&d.graph, &d.points, &cfg.schedule_config(seed))?;
    Ok((d, sch))
}

//! Simulation of the distributed dynamic setting: `s` sites observe edge
//! updates over time points `1..=t`, and a coordinator (message passing) or a
//! shared blackboard must produce a clustering at every time point.
//!
//! Five algorithms are simulated on a single logical timeline:
//!
//! | algorithm | per time point                                             | cost unit                 |
//! |-----------|------------------------------------------------------------|---------------------------|
//! | CNTRL     | forward every update                                        | one per event             |
//! | D²-CAMP   | one monotone sampler per site, send newly kept rows         | one per newly kept row    |
//! | D²-CABL   | one shared monotone sampler on the blackboard               | one per appended row      |
//! | STMP      | fresh sampler per site over its current edges, send it all | sparsifier size per site  |
//! | STBL      | fresh shared sampler over the current graph                | sparsifier size           |
//!
//! The monotone algorithms never see deletions. Clustering labels come from
//! each algorithm's own graph, but NCut is always measured on the true
//! current graph so numbers are comparable across algorithms.

pub mod schedule;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{self, Partition};
use crate::graph::{Graph, NodeId, WeightedEdge};
use crate::seed::derive_seed;
use crate::sparsify::{OnlineSampler, SamplerConfig, DEFAULT_OVERSAMPLING_FACTOR};
use crate::{Error, Result};

pub use schedule::{EventKind, StreamSchedule, UpdateEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cntrl,
    D2Camp,
    D2Cabl,
    Stmp,
    Stbl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Cntrl,
        Algorithm::D2Camp,
        Algorithm::D2Cabl,
        Algorithm::Stmp,
        Algorithm::Stbl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cntrl => "cntrl",
            Algorithm::D2Camp => "d2camp",
            Algorithm::D2Cabl => "d2cabl",
            Algorithm::Stmp => "stmp",
            Algorithm::Stbl => "stbl",
        }
    }

    /// Whether deletions change what this algorithm maintains. The monotone
    /// protocols ignore them and never transmit them.
    pub fn processes_deletions(self) -> bool {
        !matches!(self, Algorithm::D2Camp | Algorithm::D2Cabl)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    /// Number of clusters.
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Leading constant of the sampler's oversampling rate.
    pub oversampling_factor: f64,
    pub sampler_seed: u64,
    pub cluster_seed: u64,
    /// Cluster at every multiple of this stride and at the final time point;
    /// zero disables clustering.
    pub cluster_every: usize,
    /// Keep a copy of the algorithm's graph at every time point.
    pub keep_snapshots: bool,
}

impl RunParams {
    pub fn new(k: usize, epsilon: f64, delta: f64, seed: u64) -> Self {
        Self {
            k,
            epsilon,
            delta,
            oversampling_factor: DEFAULT_OVERSAMPLING_FACTOR,
            sampler_seed: seed,
            cluster_seed: derive_seed(seed, &[0xC1]),
            cluster_every: 1,
            keep_snapshots: false,
        }
    }

    fn clusters_at(&self, tau: usize, t: usize) -> bool {
        self.cluster_every > 0 && (tau.is_multiple_of(self.cluster_every) || tau == t)
    }

    fn sampler(&self, n: usize, seed: u64) -> Result<SamplerConfig> {
        SamplerConfig::new(n, self.epsilon, self.delta, seed)?
            .with_oversampling_factor(self.oversampling_factor)
    }
}

/// Cumulative communication per time point.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommLedger {
    cumulative: Vec<u64>,
}

impl CommLedger {
    fn record(&mut self, sent: u64) {
        let prev = self.cumulative.last().copied().unwrap_or(0);
        self.cumulative.push(prev + sent);
    }

    pub fn cumulative(&self) -> &[u64] {
        &self.cumulative
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimePoint {
    pub tau: usize,
    pub comm_cumulative: u64,
    /// Edges in the graph the algorithm clusters on.
    pub sketch_edges: usize,
    /// NCut on the true graph; `None` when not clustered or undefined.
    pub ncut: Option<f64>,
    pub partition: Option<Partition>,
    pub snapshot: Option<Graph>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolRun {
    pub algorithm: Algorithm,
    pub points: Vec<TimePoint>,
    pub ledger: CommLedger,
    /// The algorithm's graph after the final time point.
    pub sketch: Graph,
    /// True graph after the final time point.
    pub truth: Graph,
}

impl ProtocolRun {
    pub fn final_comm(&self) -> u64 {
        self.ledger.total()
    }

    pub fn final_ncut(&self) -> Option<f64> {
        self.points.last().and_then(|p| p.ncut)
    }
}

/// Every inserted edge copy in processing order, with a liveness flag.
struct EdgeStore {
    entries: Vec<(usize, WeightedEdge, bool)>,
    live: HashMap<(usize, NodeId, NodeId), Vec<usize>>,
}

impl EdgeStore {
    fn new() -> Self {
        Self {
            entries: Vec::new(),
            live: HashMap::new(),
        }
    }

    fn apply(&mut self, ev: &UpdateEvent) -> Result<()> {
        let key = (ev.site, ev.edge.u, ev.edge.v);
        match ev.kind {
            EventKind::Insert => {
                self.live.entry(key).or_default().push(self.entries.len());
                self.entries.push((ev.site, ev.edge, true));
            }
            EventKind::Delete => {
                let idx = self
                    .live
                    .get_mut(&key)
                    .and_then(|v| (!v.is_empty()).then(|| v.remove(0)))
                    .ok_or_else(|| {
                        Error::Schedule(format!(
                            "delete of absent edge ({}, {}) at site {}",
                            ev.edge.u, ev.edge.v, ev.site
                        ))
                    })?;
                self.entries[idx].2 = false;
            }
        }
        Ok(())
    }

    fn alive(&self) -> impl Iterator<Item = (usize, &WeightedEdge)> {
        self.entries.iter().filter(|e| e.2).map(|e| (e.0, &e.1))
    }

    fn graph(&self, n: usize) -> Graph {
        Graph::from_edges(n, self.alive().map(|(_, e)| *e)).expect("schedule edges are valid")
    }
}

fn cluster_and_score(
    sketch: &Graph,
    truth: &Graph,
    k: usize,
    seed: u64,
) -> Result<(Option<f64>, Option<Partition>)> {
    let placed = sketch.non_isolated_mask().iter().filter(|&&b| b).count();
    if placed < k {
        return Ok((None, None));
    }
    let p = clustering::spectral_cluster(sketch, k, seed)?;
    let nc = match clustering::ncut(truth, &p) {
        Ok(v) => Some(v.value),
        Err(Error::UndefinedNcut) => None,
        Err(e) => return Err(e),
    };
    Ok((nc, Some(p)))
}

/// Runs `algorithm` over `schedule`.
pub fn run(algorithm: Algorithm, schedule: &StreamSchedule, params: &RunParams) -> Result<ProtocolRun> {
    let n = schedule.n();
    let t = schedule.t();
    let mut store = EdgeStore::new();
    let mut ledger = CommLedger::default();
    let mut points = Vec::with_capacity(t);

    // State of the monotone protocols.
    let mut site_samplers: Vec<Option<OnlineSampler>> = (0..=schedule.s()).map(|_| None).collect();
    let mut blackboard = match algorithm {
        Algorithm::D2Cabl => Some(OnlineSampler::new(params.sampler(n, params.sampler_seed)?)),
        _ => None,
    };
    let mut coordinator = Graph::new(n);

    for tau in 1..=t {
        let events = schedule.events_at(tau);
        let mut sent = 0u64;
        for ev in events {
            store.apply(ev)?;
            if ev.kind == EventKind::Delete {
                if algorithm == Algorithm::Cntrl {
                    sent += 1;
                }
                continue;
            }
            match algorithm {
                Algorithm::Cntrl => sent += 1,
                Algorithm::D2Camp => {
                    let slot = &mut site_samplers[ev.site];
                    if slot.is_none() {
                        let seed = derive_seed(params.sampler_seed, &[ev.site as u64]);
                        *slot = Some(OnlineSampler::new(params.sampler(n, seed)?));
                    }
                    let sampler = slot.as_mut().expect("initialized above");
                    let d = sampler.offer(&ev.edge)?;
                    if d.kept {
                        let row = sampler.rows()[sampler.kept() - 1];
                        coordinator.add_edge(row.as_edge())?;
                        sent += 1;
                    }
                }
                Algorithm::D2Cabl => {
                    let sampler = blackboard.as_mut().expect("blackboard exists for d2cabl");
                    if sampler.offer(&ev.edge)?.kept {
                        let row = sampler.rows()[sampler.kept() - 1];
                        coordinator.add_edge(row.as_edge())?;
                        sent += 1;
                    }
                }
                Algorithm::Stmp | Algorithm::Stbl => {}
            }
        }

        match algorithm {
            Algorithm::Stmp => {
                let mut per_site: Vec<Vec<WeightedEdge>> = vec![Vec::new(); schedule.s() + 1];
                for (site, e) in store.alive() {
                    per_site[site].push(*e);
                }
                coordinator = Graph::new(n);
                for (site, edges) in per_site.iter().enumerate().filter(|(_, e)| !e.is_empty()) {
                    let seed = derive_seed(params.sampler_seed, &[tau as u64, site as u64]);
                    let mut sampler = OnlineSampler::new(params.sampler(n, seed)?);
                    for e in edges {
                        sampler.offer(e)?;
                    }
                    sent += sampler.kept() as u64;
                    for row in sampler.rows() {
                        coordinator.add_edge(row.as_edge())?;
                    }
                }
            }
            Algorithm::Stbl => {
                let seed = derive_seed(params.sampler_seed, &[tau as u64]);
                let mut sampler = OnlineSampler::new(params.sampler(n, seed)?);
                for (_, e) in store.alive() {
                    sampler.offer(e)?;
                }
                sent += sampler.kept() as u64;
                coordinator = sampler.sparsifier_graph();
            }
            _ => {}
        }
        ledger.record(sent);

        let truth_needed = params.clusters_at(tau, t) || algorithm == Algorithm::Cntrl;
        let truth = truth_needed.then(|| store.graph(n));
        let sketch: &Graph = match (&truth, algorithm) {
            (Some(g), Algorithm::Cntrl) => g,
            _ => &coordinator,
        };
        let (ncut, partition) = match (&truth, params.clusters_at(tau, t)) {
            (Some(tg), true) => cluster_and_score(sketch, tg, params.k, params.cluster_seed)?,
            _ => (None, None),
        };
        points.push(TimePoint {
            tau,
            comm_cumulative: ledger.total(),
            sketch_edges: sketch.m(),
            ncut,
            partition,
            snapshot: params.keep_snapshots.then(|| sketch.clone()),
        });
    }

    let truth = store.graph(n);
    let sketch = if algorithm == Algorithm::Cntrl {
        truth.clone()
    } else {
        coordinator
    };
    Ok(ProtocolRun {
        algorithm,
        points,
        ledger,
        sketch,
        truth,
    })
}

pub fn run_cntrl(schedule: &StreamSchedule, params: &RunParams) -> Result<ProtocolRun> {
    run(Algorithm::Cntrl, schedule, params)
}

pub fn run_d2camp(schedule: &StreamSchedule, params: &RunParams) -> Result<ProtocolRun> {
    run(Algorithm::D2Camp, schedule, params)
}

pub fn run_d2cabl(schedule: &StreamSchedule, params: &RunParams) -> Result<ProtocolRun> {
    run(Algorithm::D2Cabl, schedule, params)
}

pub fn run_stmp(schedule: &StreamSchedule, params: &RunParams) -> Result<ProtocolRun> {
    run(Algorithm::Stmp, schedule, params)
}

pub fn run_stbl(schedule: &StreamSchedule, params: &RunParams) -> Result<ProtocolRun> {
    run(Algorithm::Stbl, schedule, params)
}

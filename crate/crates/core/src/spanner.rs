//! Monotone greedy (2k−1)-spanners for distributed approximate distance
//! queries.
//!
//! Each site keeps an append-only spanner of its own stream: an edge is kept
//! only when the current spanner distance between its endpoints exceeds
//! `(2k−1)·w`. The coordinator answers queries with Dijkstra on the union of
//! the site spanners.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, WeightedEdge};
use crate::protocols::{EventKind, StreamSchedule};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SpannerState {
    stretch_k: usize,
    kept: Vec<WeightedEdge>,
    adj: Vec<Vec<(NodeId, f64)>>,
}

impl SpannerState {
    pub fn new(n: usize, stretch_k: usize) -> Result<Self> {
        if stretch_k < 2 {
            return Err(Error::InvalidParameter(format!(
                "spanner parameter k must exceed 1, got {stretch_k}"
            )));
        }
        Ok(Self {
            stretch_k,
            kept: Vec::new(),
            adj: vec![Vec::new(); n],
        })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Stretch factor `2k − 1`.
    pub fn stretch(&self) -> f64 {
        (2 * self.stretch_k - 1) as f64
    }

    pub fn kept(&self) -> &[WeightedEdge] {
        &self.kept
    }

    /// Keeps `e` iff the current spanner distance exceeds `(2k−1)·w`; ties
    /// are skipped.
    pub fn offer(&mut self, e: &WeightedEdge) -> Result<bool> {
        for node in [e.u, e.v] {
            if node >= self.n() {
                return Err(Error::NodeOutOfRange { node, n: self.n() });
            }
        }
        let bound = self.stretch() * e.w;
        if bounded_distance(&[&self.adj], e.u, e.v, bound) <= bound {
            return Ok(false);
        }
        self.adj[e.u].push((e.v, e.w));
        self.adj[e.v].push((e.u, e.w));
        self.kept.push(*e);
        Ok(true)
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> f64 {
        bounded_distance(&[&self.adj], u, v, f64::INFINITY)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, NodeId);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the union of adjacency lists, abandoning paths longer than
/// `bound`. Returns `+∞` when `v` is not reached within the bound.
pub fn bounded_distance(adjs: &[&Vec<Vec<(NodeId, f64)>>], u: NodeId, v: NodeId, bound: f64) -> f64 {
    if u == v {
        return 0.0;
    }
    let n = adjs.first().map_or(0, |a| a.len());
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[u] = 0.0;
    heap.push(Entry(0.0, u));
    while let Some(Entry(d, x)) = heap.pop() {
        if x == v {
            return d;
        }
        if d > dist[x] {
            continue;
        }
        for adj in adjs {
            for &(y, w) in &adj[x] {
                let nd = d + w;
                if nd <= bound && nd < dist[y] {
                    dist[y] = nd;
                    heap.push(Entry(nd, y));
                }
            }
        }
    }
    f64::INFINITY
}

/// Answer of a coordinator distance query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceAnswer {
    /// `+∞` when the endpoints are disconnected.
    pub distance: f64,
    pub connected: bool,
}

/// Shortest-path distance on the union of the site spanners.
pub fn union_query(states: &[SpannerState], u: NodeId, v: NodeId) -> Result<DistanceAnswer> {
    let n = states.first().map_or(0, SpannerState::n);
    for node in [u, v] {
        if node >= n {
            return Err(Error::NodeOutOfRange { node, n });
        }
    }
    let adjs: Vec<&Vec<Vec<(NodeId, f64)>>> = states.iter().map(|s| &s.adj).collect();
    let distance = bounded_distance(&adjs, u, v, f64::INFINITY);
    Ok(DistanceAnswer {
        distance,
        connected: distance.is_finite(),
    })
}

/// One `tau,u,v,approx_dist,comm_cumulative` output row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpannerRecord {
    pub tau: usize,
    pub u: NodeId,
    pub v: NodeId,
    pub approx_dist: f64,
    pub comm_cumulative: u64,
}

/// Runs per-site spanners over an insert stream (deletions are ignored) and
/// answers every query at every time point.
pub fn run_spanner(
    schedule: &StreamSchedule,
    stretch_k: usize,
    queries: &[(NodeId, NodeId)],
) -> Result<(Vec<SpannerRecord>, Vec<SpannerState>)> {
    let mut states = (0..schedule.s())
        .map(|_| SpannerState::new(schedule.n(), stretch_k))
        .collect::<Result<Vec<_>>>()?;
    let mut comm = 0u64;
    let mut out = Vec::new();
    for tau in 1..=schedule.t() {
        for ev in schedule.events_at(tau) {
            if ev.kind == EventKind::Insert && states[ev.site - 1].offer(&ev.edge)? {
                comm += 1;
            }
        }
        for &(u, v) in queries {
            let ans = union_query(&states, u, v)?;
            out.push(SpannerRecord {
                tau,
                u,
                v,
                approx_dist: ans.distance,
                comm_cumulative: comm,
            });
        }
    }
    Ok((out, states))
}

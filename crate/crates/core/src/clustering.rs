//! Normalized spectral clustering and partition quality metrics.
//!
//! Nodes without incident edges have no spectral embedding; they are
//! assigned cluster 0 and, having zero volume, drop out of every metric.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId};
use crate::linalg::sorted_symmetric_eigen;
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Label used for nodes that spectral clustering cannot place.
pub const ISOLATED_LABEL: usize = 0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("partition needs k ≥ 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidParameter(format!("label {bad} ≥ k = {k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Node lists per cluster.
    pub fn clusters(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.k];
        for (u, &l) in self.labels.iter().enumerate() {
            out[l].push(u);
        }
        out
    }

    fn masks(&self) -> Vec<Vec<bool>> {
        let mut out = vec![vec![false; self.labels.len()]; self.k];
        for (u, &l) in self.labels.iter().enumerate() {
            out[l][u] = true;
        }
        out
    }

    fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.labels.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: self.labels.len(),
            });
        }
        Ok(())
    }

    /// `node,label` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,label")?;
        for (u, l) in self.labels.iter().enumerate() {
            writeln!(out, "{u},{l}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, k: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut pairs = Vec::new();
        for (i, rec) in rdr.deserialize::<(usize, usize)>().enumerate() {
            let (u, l) = rec.map_err(|e| Error::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?;
            pairs.push((u, l));
        }
        let n = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
        let mut labels = vec![ISOLATED_LABEL; n];
        for (u, l) in pairs {
            labels[u] = l;
        }
        Self::new(labels, k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NcutValue {
    pub value: f64,
    /// Clusters skipped because their volume is zero.
    pub zero_volume_clusters: Vec<usize>,
}

/// `Σ_i cut(A_i) / vol(A_i)` over clusters with positive volume.
pub fn ncut(g: &Graph, p: &Partition) -> Result<NcutValue> {
    p.check_graph(g)?;
    let k = p.k;
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    for e in g.edges() {
        let (a, b) = (p.labels[e.u], p.labels[e.v]);
        vol[a] += e.w;
        vol[b] += e.w;
        if a != b {
            cut[a] += e.w;
            cut[b] += e.w;
        }
    }
    let mut value = 0.0;
    let mut zero = Vec::new();
    for i in 0..k {
        if vol[i] > 0.0 {
            value += cut[i] / vol[i];
        } else {
            zero.push(i);
        }
    }
    if zero.len() == k {
        return Err(Error::UndefinedNcut);
    }
    if !zero.is_empty() {
        log::debug!("ncut: clusters {zero:?} have zero volume");
    }
    Ok(NcutValue {
        value,
        zero_volume_clusters: zero,
    })
}

/// `vol_G(A Δ B)`.
pub fn sym_diff_vol(g: &Graph, a: &[NodeId], b: &[NodeId]) -> Result<f64> {
    let ma = g.set_mask(a)?;
    let mb = g.set_mask(b)?;
    let mask: Vec<bool> = ma.iter().zip(&mb).map(|(x, y)| x != y).collect();
    Ok(g.volume_of_mask(&mask))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterQuality {
    pub ncut: f64,
    /// `None` for zero-volume clusters.
    pub conductance: Vec<Option<f64>>,
    pub max_conductance: f64,
    pub lambda_k1: f64,
    /// `λ_{k+1} / max_conductance`; `None` when the partition has no cut.
    pub upsilon: Option<f64>,
}

pub fn partition_quality(g: &Graph, p: &Partition) -> Result<ClusterQuality> {
    let nc = ncut(g, p)?;
    let conductance: Vec<Option<f64>> = p
        .masks()
        .iter()
        .map(|m| g.conductance_of_mask(m).ok())
        .collect();
    let max_conductance = conductance.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let lambda_k1 = g.normalized_laplacian_eigenvalues(p.k + 1)?[p.k];
    let upsilon = (max_conductance > 0.0).then(|| lambda_k1 / max_conductance);
    Ok(ClusterQuality {
        ncut: nc.value,
        conductance,
        max_conductance,
        lambda_k1,
        upsilon,
    })
}

/// Minimum over cluster relabelings of `Σ_i vol(A_i Δ B_π(i))`, divided by
/// `vol(V)`.
pub fn match_partitions(a: &Partition, b: &Partition, g: &Graph) -> Result<f64> {
    if a.k != b.k {
        return Err(Error::ClusterCountMismatch(a.k, b.k));
    }
    a.check_graph(g)?;
    b.check_graph(g)?;
    let k = a.k;
    let deg = g.degrees();
    let total: f64 = deg.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroVolume);
    }
    let mut vol_a = vec![0.0; k];
    let mut vol_b = vec![0.0; k];
    let mut inter = vec![vec![0.0; k]; k];
    for (u, &d) in deg.iter().enumerate() {
        vol_a[a.labels[u]] += d;
        vol_b[b.labels[u]] += d;
        inter[a.labels[u]][b.labels[u]] += d;
    }
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| vol_a[i] + vol_b[j] - 2.0 * inter[i][j]).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    let best: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(best / total)
}

/// Hungarian algorithm on a square cost matrix; returns the column assigned
/// to each row.
pub(crate) fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based potentials formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// Independent k-means++ initializations; the lowest objective wins.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            restarts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub objective: f64,
    /// Objective after each assignment step of the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, lowest index on ties.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, cfg: &KMeansConfig) -> KMeansResult {
    let k = centroids.len();
    let dim = points[0].len();
    let mut labels = vec![0; points.len()];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut obj = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centroids);
            labels[i] = j;
            obj += d;
        }
        trace.push(obj);
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut moved = 0.0f64;
        for j in 0..k {
            // an empty cluster keeps its previous centroid
            if counts[j] > 0 {
                let c: Vec<f64> = sums[j].iter().map(|s| s / counts[j] as f64).collect();
                moved = moved.max(sq_dist(&c, &centroids[j]).sqrt());
                centroids[j] = c;
            }
        }
        if moved <= cfg.tol {
            let obj = points
                .iter()
                .zip(labels.iter_mut())
                .map(|(p, l)| {
                    let (j, d) = nearest(p, &centroids);
                    *l = j;
                    d
                })
                .sum();
            trace.push(obj);
            break;
        }
    }
    KMeansResult {
        objective: *trace.last().expect("at least one assignment step"),
        labels,
        centroids,
        trace,
        iterations,
    }
}

/// Lloyd's k-means with k-means++ seeding, deterministic given `seed`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewNodes {
            requested: k,
            available: points.len(),
        });
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
        let init = kmeans_plus_plus(points, k, &mut rng);
        let res = lloyd(points, init, cfg);
        if best.as_ref().is_none_or(|b| res.objective < b.objective) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Row-normalized spectral embedding of the non-isolated nodes: the
/// eigenvectors of the `k` smallest normalized-Laplacian eigenvalues.
pub fn spectral_embedding(g: &Graph, k: usize) -> Result<(Vec<Vec<f64>>, Vec<NodeId>)> {
    let (l, nodes) = g.normalized_laplacian();
    if nodes.len() < k || k == 0 {
        return Err(Error::TooFewNodes {
            requested: k,
            available: nodes.len(),
        });
    }
    let (_, vecs) = sorted_symmetric_eigen(l);
    Ok((normalized_rows(&vecs, k), nodes))
}

fn normalized_rows(vecs: &DMatrix<f64>, k: usize) -> Vec<Vec<f64>> {
    (0..vecs.nrows())
        .map(|r| {
            let row: Vec<f64> = (0..k).map(|c| vecs[(r, c)]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect()
}

pub fn spectral_cluster(g: &Graph, k: usize, seed: u64) -> Result<Partition> {
    spectral_cluster_with(g, k, seed, &KMeansConfig::default())
}

pub fn spectral_cluster_with(g: &Graph, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<Partition> {
    let (rows, nodes) = spectral_embedding(g, k)?;
    let km = kmeans(&rows, k, seed, cfg)?;
    let mut labels = vec![ISOLATED_LABEL; g.n()];
    for (&u, &l) in nodes.iter().zip(&km.labels) {
        labels[u] = l;
    }
    Partition::new(labels, k)
}

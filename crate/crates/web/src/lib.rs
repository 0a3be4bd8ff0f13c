//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string. The work is
//! done by the `*_json` functions, which are ordinary Rust and can be tested
//! natively.

use ddclust::clustering::{self, spectral_cluster};
use ddclust::datasets::{gen_gaussians_with, gen_schedule, GaussiansConfig, PointCloud, ScheduleConfig};
use ddclust::experiment::{EXPERIMENT_DELTA, EXPERIMENT_OVERSAMPLING_FACTOR};
use ddclust::protocols::{self, Algorithm, RunParams};
use ddclust::sparsify::{OnlineSampler, SamplerConfig};
use ddclust::{Graph, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const EPSILON: f64 = 0.3;
const K: usize = 4;

fn gaussians(per_cluster: usize, seed: u64) -> Result<(PointCloud, Graph)> {
    let cfg = GaussiansConfig {
        per_cluster,
        ..GaussiansConfig::default()
    };
    gen_gaussians_with(&cfg, seed)
}

#[derive(Serialize)]
struct Clustered {
    points: Vec<[f64; 2]>,
    labels: Vec<usize>,
    ncut: f64,
    edges: usize,
}

/// Gaussians, clustered with spectral clustering on the full graph.
pub fn cluster_gaussians_json(per_cluster: usize, seed: u64) -> Result<String> {
    let (pc, g) = gaussians(per_cluster, seed)?;
    let p = spectral_cluster(&g, K, seed)?;
    let out = Clustered {
        points: pc.points.iter().map(|p| [p[0], p[1]]).collect(),
        labels: p.labels().to_vec(),
        ncut: clustering::ncut(&g, &p)?.value,
        edges: g.m(),
    };
    Ok(serde_json::to_string(&out)?)
}

#[derive(Serialize)]
struct Curve {
    algorithm: &'static str,
    comm: Vec<u64>,
    ncut: Option<f64>,
}

/// Cumulative communication of every algorithm at every time point, and the
/// final NCut.
pub fn comm_curves_json(per_cluster: usize, seed: u64, t: usize, s: usize) -> Result<String> {
    let (pc, g) = gaussians(per_cluster, seed)?;
    let sch = gen_schedule(
        &g,
        &pc,
        &ScheduleConfig {
            t,
            s,
            seed,
            delete_frac: 0.0,
        },
    )?;
    let mut params = RunParams::new(K, EPSILON, EXPERIMENT_DELTA, seed);
    params.oversampling_factor = EXPERIMENT_OVERSAMPLING_FACTOR;
    params.cluster_every = t;
    let mut curves = Vec::new();
    for alg in Algorithm::ALL {
        let run = protocols::run(alg, &sch, &params)?;
        curves.push(Curve {
            algorithm: alg.name(),
            comm: run.ledger.cumulative().to_vec(),
            ncut: run.final_ncut(),
        });
    }
    Ok(serde_json::to_string(&curves)?)
}

#[derive(Serialize)]
struct Sparsified {
    points: Vec<[f64; 2]>,
    original_edges: usize,
    kept: Vec<(usize, usize, f64)>,
}

/// Streams the Gaussians graph through one sampler and returns the kept
/// edges with their rescaled weights.
pub fn sparsify_json(per_cluster: usize, seed: u64, oversampling_factor: f64) -> Result<String> {
    let (pc, g) = gaussians(per_cluster, seed)?;
    let cfg = SamplerConfig::new(g.n(), EPSILON, EXPERIMENT_DELTA, seed)?
        .with_oversampling_factor(oversampling_factor)?;
    let mut sampler = OnlineSampler::new(cfg);
    for e in g.edges() {
        sampler.offer(e)?;
    }
    let out = Sparsified {
        points: pc.points.iter().map(|p| [p[0], p[1]]).collect(),
        original_edges: g.m(),
        kept: sampler
            .rows()
            .iter()
            .map(|r| (r.edge.u, r.edge.v, r.scaled_weight()))
            .collect(),
    };
    Ok(serde_json::to_string(&out)?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = clusterGaussians)]
pub fn cluster_gaussians(per_cluster: usize, seed: u32) -> std::result::Result<String, JsValue> {
    js(cluster_gaussians_json(per_cluster, seed as u64))
}

#[wasm_bindgen(js_name = commCurves)]
pub fn comm_curves(per_cluster: usize, seed: u32, t: usize, s: usize) -> std::result::Result<String, JsValue> {
    js(comm_curves_json(per_cluster, seed as u64, t, s))
}

#[wasm_bindgen(js_name = sparsify)]
pub fn sparsify(per_cluster: usize, seed: u32, oversampling_factor: f64) -> std::result::Result<String, JsValue> {
    js(sparsify_json(per_cluster, seed as u64, oversampling_factor))
}

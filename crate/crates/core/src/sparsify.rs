//! Monotone online spectral sparsification by ridge leverage score sampling.
//!
//! Every arriving edge `e = (u, v, w)` is scored against the rows sampled so
//! far,
//!
//! ```text
//! l = (1 + ε) · r(e)ᵀ (B'ᵀB' + (δ/ε) I)⁻¹ r(e),   r(e) = √w · (χ_u − χ_v)
//! ```
//!
//! and kept with probability `p = min(c·l, 1)`, `c = 8 ln n / ε²`. A kept
//! edge appends the row `r(e)/√p` to `B'`. Rows are never removed or
//! rescaled, so the sparsifier after any prefix of the stream is a prefix of
//! the sparsifier after any longer prefix.
//!
//! The sampler keeps the sparse Gram accumulator `B'ᵀB' + (δ/ε) I` and a
//! dense copy of its inverse, updated by Sherman–Morrison on every kept row.
//! Scoring is then O(1) and each kept row costs O(n²).
//! [`OnlineSampler::ridge_leverage_by_solve`] recomputes a score from the
//! accumulator with a fresh Cholesky factorization.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId, WeightedEdge};
use crate::linalg;
use crate::seed::rng_from_seed;
use crate::{Error, Result};

/// Ridge scale used when the caller only supplies a typical edge weight.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-6;

/// Leading constant of `c = 8 ln n / ε²`.
pub const DEFAULT_OVERSAMPLING_FACTOR: f64 = 8.0;

fn default_oversampling_factor() -> f64 {
    DEFAULT_OVERSAMPLING_FACTOR
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Leading constant of the oversampling rate `c`.
    #[serde(default = "default_oversampling_factor")]
    pub oversampling_factor: f64,
}

impl SamplerConfig {
    pub fn new(n: usize, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "sampler needs at least 2 nodes, got {n}"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0 / 3.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1/3), got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Ok(Self {
            n,
            epsilon,
            delta,
            seed,
            oversampling_factor: DEFAULT_OVERSAMPLING_FACTOR,
        })
    }

    /// Replaces the leading constant of `c`; must be positive.
    pub fn with_oversampling_factor(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "oversampling factor must be positive, got {factor}"
            )));
        }
        Ok(Self {
            oversampling_factor: factor,
            ..self
        })
    }

    /// Default ridge: `δ = ε · 1e-6 · typical_weight`.
    pub fn with_typical_weight(n: usize, epsilon: f64, typical_weight: f64, seed: u64) -> Result<Self> {
        Self::new(n, epsilon, epsilon * DEFAULT_RIDGE_SCALE * typical_weight, seed)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Oversampling constant `c = 8 ln n / ε²` (the 8 being
    /// `oversampling_factor`).
    pub fn oversampling(&self) -> f64 {
        self.oversampling_factor * (self.n as f64).ln() / (self.epsilon * self.epsilon)
    }

    /// Ridge `λ = δ / ε` added to the Gram matrix.
    pub fn ridge(&self) -> f64 {
        self.delta / self.epsilon
    }
}

/// Outcome of offering one edge to the sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleDecision {
    pub kept: bool,
    pub leverage: f64,
    pub probability: f64,
    /// `w / p` when kept, zero otherwise.
    pub scaled_weight: f64,
}

/// One appended row `√(w/p) · b(e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledRow {
    pub edge: WeightedEdge,
    pub probability: f64,
}

impl SampledRow {
    pub fn scaled_weight(&self) -> f64 {
        self.edge.w / self.probability
    }

    /// Scalar multiplying the ±1 incidence pattern.
    pub fn coefficient(&self) -> f64 {
        self.scaled_weight().sqrt()
    }

    pub fn as_edge(&self) -> WeightedEdge {
        WeightedEdge {
            u: self.edge.u,
            v: self.edge.v,
            w: self.scaled_weight(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OnlineSampler {
    config: SamplerConfig,
    oversampling: f64,
    rows: Vec<SampledRow>,
    gram_diag: Vec<f64>,
    gram_off: HashMap<(NodeId, NodeId), f64>,
    /// Row-major inverse of the Gram accumulator.
    inverse: Vec<f64>,
    rng: ChaCha8Rng,
    offers: u64,
}

impl OnlineSampler {
    pub fn new(config: SamplerConfig) -> Self {
        let n = config.n;
        let ridge = config.ridge();
        let mut inverse = vec![0.0; n * n];
        for i in 0..n {
            inverse[i * n + i] = 1.0 / ridge;
        }
        Self {
            oversampling: config.oversampling(),
            rows: Vec::new(),
            gram_diag: vec![ridge; n],
            gram_off: HashMap::new(),
            inverse,
            rng: rng_from_seed(config.seed),
            offers: 0,
            config,
        }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    /// Rows kept so far, in the order they were appended.
    pub fn rows(&self) -> &[SampledRow] {
        &self.rows
    }

    pub fn kept(&self) -> usize {
        self.rows.len()
    }

    pub fn offers(&self) -> u64 {
        self.offers
    }

    fn check_edge(&self, e: &WeightedEdge) -> Result<()> {
        for node in [e.u, e.v] {
            if node >= self.config.n {
                return Err(Error::NodeOutOfRange {
                    node,
                    n: self.config.n,
                });
            }
        }
        Ok(())
    }

    /// `bᵀ M b` for `b = χ_u − χ_v` and the maintained inverse `M`.
    fn inverse_quadratic(&self, u: NodeId, v: NodeId) -> f64 {
        let n = self.config.n;
        let m = &self.inverse;
        m[u * n + u] + m[v * n + v] - 2.0 * m[u * n + v]
    }

    /// Online ridge leverage score of `e` against the rows kept so far.
    pub fn ridge_leverage(&self, e: &WeightedEdge) -> Result<f64> {
        self.check_edge(e)?;
        let l = (1.0 + self.config.epsilon) * e.w * self.inverse_quadratic(e.u, e.v);
        if !(l > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(l)
    }

    /// Same score computed by factoring the Gram accumulator from scratch
    /// and solving `gram · y = r(e)`.
    pub fn ridge_leverage_by_solve(&self, e: &WeightedEdge) -> Result<f64> {
        self.check_edge(e)?;
        let mut r = DVector::zeros(self.config.n);
        let s = e.w.sqrt();
        r[e.u] = s;
        r[e.v] = -s;
        let y = linalg::spd_solve(self.gram_dense(), &r)?;
        Ok((1.0 + self.config.epsilon) * r.dot(&y))
    }

    /// Scores `e`, flips the sampler's coin, and appends the rescaled row when
    /// the edge is kept.
    pub fn offer(&mut self, e: &WeightedEdge) -> Result<SampleDecision> {
        let leverage = self.ridge_leverage(e)?;
        let probability = (self.oversampling * leverage).min(1.0);
        // One draw per offer keeps the stream aligned with the offer sequence.
        let draw: f64 = self.rng.random();
        self.offers += 1;
        if draw < probability {
            let row = SampledRow {
                edge: *e,
                probability,
            };
            self.append(row);
            Ok(SampleDecision {
                kept: true,
                leverage,
                probability,
                scaled_weight: row.scaled_weight(),
            })
        } else {
            Ok(SampleDecision {
                kept: false,
                leverage,
                probability,
                scaled_weight: 0.0,
            })
        }
    }

    fn append(&mut self, row: SampledRow) {
        let n = self.config.n;
        let (u, v) = (row.edge.u, row.edge.v);
        let sw = row.scaled_weight();

        self.gram_diag[u] += sw;
        self.gram_diag[v] += sw;
        *self.gram_off.entry((u, v)).or_insert(0.0) -= sw;

        // Sherman–Morrison: M ← M − (M r)(M r)ᵀ / (1 + rᵀ M r).
        let coef = row.coefficient();
        let z: Vec<f64> = (0..n)
            .map(|i| coef * (self.inverse[i * n + u] - self.inverse[i * n + v]))
            .collect();
        let denom = 1.0 + sw * self.inverse_quadratic(u, v);
        for i in 0..n {
            let zi = z[i] / denom;
            if zi == 0.0 {
                continue;
            }
            let line = &mut self.inverse[i * n..(i + 1) * n];
            for (m, &zj) in line.iter_mut().zip(&z) {
                *m -= zi * zj;
            }
        }
        self.rows.push(row);
    }

    /// Dense Gram accumulator `B'ᵀB' + (δ/ε) I` as maintained incrementally.
    pub fn gram_dense(&self) -> DMatrix<f64> {
        let n = self.config.n;
        let mut g = DMatrix::zeros(n, n);
        for (i, &d) in self.gram_diag.iter().enumerate() {
            g[(i, i)] = d;
        }
        for (&(u, v), &x) in &self.gram_off {
            g[(u, v)] = x;
            g[(v, u)] = x;
        }
        g
    }

    /// Recomputes `B'ᵀB' + (δ/ε) I` directly from the stored rows.
    pub fn gram_from_rows(&self) -> DMatrix<f64> {
        let n = self.config.n;
        let mut g = DMatrix::identity(n, n) * self.config.ridge();
        for row in &self.rows {
            let (u, v, sw) = (row.edge.u, row.edge.v, row.scaled_weight());
            g[(u, u)] += sw;
            g[(v, v)] += sw;
            g[(u, v)] -= sw;
            g[(v, u)] -= sw;
        }
        g
    }

    /// Dense copy of the maintained inverse.
    pub fn inverse_dense(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.config.n, self.config.n, &self.inverse)
    }

    /// The sparsifier `H`: one edge of weight `w/p` per kept row.
    pub fn sparsifier_graph(&self) -> Graph {
        let mut g = Graph::new(self.config.n);
        for row in &self.rows {
            g.add_edge(row.as_edge())
                .expect("kept rows are validated on offer");
        }
        g
    }

    /// Debug dump: one `u v scaled_weight p` line per kept row.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# nodes {}", self.config.n)?;
        for row in &self.rows {
            writeln!(
                out,
                "{} {} {} {}",
                row.edge.u,
                row.edge.v,
                row.scaled_weight(),
                row.probability
            )?;
        }
        Ok(())
    }
}

/// `b(e)ᵀ L⁺ b(e)` for the pair `(u, v)` via a dense pseudoinverse. O(n³);
/// intended as a verification oracle.
pub fn exact_effective_resistance(g: &Graph, u: NodeId, v: NodeId) -> Result<f64> {
    g.check_node(u)?;
    g.check_node(v)?;
    if u == v {
        return Ok(0.0);
    }
    let comp = g.components();
    if comp[u] != comp[v] {
        return Err(Error::Disconnected(u, v));
    }
    let pinv = linalg::psd_pseudoinverse(&g.laplacian(), 1e-12);
    Ok(pinv[(u, u)] + pinv[(v, v)] - 2.0 * pinv[(u, v)])
}

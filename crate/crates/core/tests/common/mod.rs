#![allow(dead_code)]

use ddclust::datasets::{knn_union_graph, SimilarityGraphConfig};
use ddclust::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with weights uniform in [0.5, 2).
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                g.add_edge(ddclust::WeightedEdge::new(u, v, r.random_range(0.5..2.0)).unwrap())
                    .unwrap();
            }
        }
    }
    g
}

/// Connected Erdős–Rényi graph: a random spanning path is added first.
pub fn connected_er(n: usize, p: f64, seed: u64) -> Graph {
    let mut g = erdos_renyi(n, p, seed);
    let mut r = rng(seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    for w in order.windows(2) {
        g.add_edge(ddclust::WeightedEdge::new(w[0], w[1], r.random_range(0.5..2.0)).unwrap())
            .unwrap();
    }
    g
}

/// kNN similarity graph over uniform points in the unit square.
pub fn knn_graph(n: usize, neighbors: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random::<f64>(), r.random::<f64>()]).collect();
    knn_union_graph(&pts, &SimilarityGraphConfig::new(neighbors, 0.3).unwrap()).unwrap()
}

pub fn gaussian_vector(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(r)).collect()
}

/// `Σ_e w (x_u − x_v)²`, straight from the edge list.
pub fn edge_sum_form(g: &Graph, x: &[f64]) -> f64 {
    g.edges().iter().map(|e| e.w * (x[e.u] - x[e.v]).powi(2)).sum()
}

/// All-pairs shortest paths by Floyd–Warshall.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        if e.w < d[e.u][e.v] {
            d[e.u][e.v] = e.w;
            d[e.v][e.u] = e.w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let c = dik + d[k][j];
                if c < d[i][j] {
                    d[i][j] = c;
                }
            }
        }
    }
    d
}

/// Minimum NCut over all 2-partitions with both sides non-empty.
pub fn brute_force_min_ncut(g: &Graph) -> f64 {
    let n = g.n();
    assert!(n <= 20);
    let deg = g.degrees();
    let mut best = f64::INFINITY;
    // node n−1 always on side 0 to skip mirrored masks
    for bits in 1u32..(1 << (n - 1)) {
        let side = |v: usize| v < n - 1 && bits >> v & 1 == 1;
        let (mut va, mut vb, mut cut) = (0.0, 0.0, 0.0);
        for (v, d) in deg.iter().enumerate() {
            if side(v) {
                va += d
            } else {
                vb += d
            }
        }
        for e in g.edges() {
            if side(e.u) != side(e.v) {
                cut += e.w;
            }
        }
        if va > 0.0 && vb > 0.0 {
            best = best.min(cut / va + cut / vb);
        }
    }
    best
}

/// Two cliques with in-clique weights in [0.8, 1.2], joined by a few light
/// random edges.
pub fn planted_two_cliques(a: usize, b: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let n = a + b;
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            let same = (u < a) == (v < a);
            if same {
                g.add_edge(ddclust::WeightedEdge::new(u, v, r.random_range(0.8..1.2)).unwrap())
                    .unwrap();
            }
        }
    }
    let bridges = r.random_range(1..=3);
    for _ in 0..bridges {
        let u = r.random_range(0..a);
        let v = a + r.random_range(0..b);
        g.add_edge(ddclust::WeightedEdge::new(u, v, r.random_range(0.05..0.3)).unwrap())
            .unwrap();
    }
    g
}

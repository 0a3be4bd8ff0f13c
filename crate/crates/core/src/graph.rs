//! Weighted undirected graphs over a fixed node set and the Laplacian / cut
//! quantities everything else is built from.
//!
//! Parallel edges are stored as given and summed implicitly by every
//! operation, so a graph can be grown by plain appends.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type NodeId = usize;

/// Weights below this are rejected; they make the downstream SPD solves
/// numerically meaningless.
pub const MIN_WEIGHT: f64 = 1e-12;

/// An undirected weighted edge stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: f64,
}

impl WeightedEdge {
    pub fn new(a: NodeId, b: NodeId, w: f64) -> Result<Self> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        if !w.is_finite() || w < MIN_WEIGHT {
            return Err(Error::InvalidWeight(w));
        }
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Ok(Self { u, v, w })
    }

    /// Unit-weight convenience constructor.
    pub fn unit(a: NodeId, b: NodeId) -> Result<Self> {
        Self::new(a, b, 1.0)
    }

    pub fn key(&self) -> (NodeId, NodeId) {
        (self.u, self.v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<WeightedEdge>,
}

impl Graph {
    /// Empty graph on `n` nodes.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = WeightedEdge>) -> Result<Self> {
        let mut g = Self::new(n);
        for e in edges {
            g.add_edge(e)?;
        }
        Ok(g)
    }

    /// Builds a graph from raw `(u, v, w)` triples, validating each one.
    pub fn from_triples(n: usize, triples: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let edges = triples
            .iter()
            .map(|&(u, v, w)| WeightedEdge::new(u, v, w))
            .collect::<Result<Vec<_>>>()?;
        Self::from_edges(n, edges)
    }

    pub fn add_edge(&mut self, e: WeightedEdge) -> Result<()> {
        self.check_node(e.u)?;
        self.check_node(e.v)?;
        if e.u == e.v {
            return Err(Error::SelfLoop(e.u));
        }
        if !e.w.is_finite() || e.w < MIN_WEIGHT {
            return Err(Error::InvalidWeight(e.w));
        }
        self.edges.push(e);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored edges, counting parallel copies separately.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Union of graphs on the same node set; keeps every edge copy.
    pub fn union<'a>(n: usize, graphs: impl IntoIterator<Item = &'a Graph>) -> Result<Self> {
        let mut out = Self::new(n);
        for g in graphs {
            for &e in g.edges() {
                out.add_edge(e)?;
            }
        }
        Ok(out)
    }

    /// Returns the same graph with every weight multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| WeightedEdge::new(e.u, e.v, e.w * alpha))
            .collect::<Result<Vec<_>>>()?;
        Self::from_edges(self.n, edges)
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.n {
            Err(Error::NodeOutOfRange { node, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.u] += e.w;
            d[e.v] += e.w;
        }
        d
    }

    /// `true` for every node with at least one incident edge.
    pub fn non_isolated_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for e in &self.edges {
            mask[e.u] = true;
            mask[e.v] = true;
        }
        mask
    }

    /// Adjacency lists with parallel edges kept separate.
    pub fn adjacency(&self) -> Vec<Vec<(NodeId, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        adj
    }

    /// `xᵀ L x = Σ_e w_e (x_u − x_v)²`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .edges
            .iter()
            .map(|e| {
                let d = x[e.u] - x[e.v];
                e.w * d * d
            })
            .sum())
    }

    /// Membership mask for a node set, rejecting out-of-range indices.
    pub fn set_mask(&self, set: &[NodeId]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.n];
        for &u in set {
            self.check_node(u)?;
            mask[u] = true;
        }
        Ok(mask)
    }

    /// Sum of weighted degrees over `set`.
    pub fn volume(&self, set: &[NodeId]) -> Result<f64> {
        let mask = self.set_mask(set)?;
        Ok(self.volume_of_mask(&mask))
    }

    pub fn volume_of_mask(&self, mask: &[bool]) -> f64 {
        self.edges
            .iter()
            .map(|e| e.w * (mask[e.u] as u8 + mask[e.v] as u8) as f64)
            .sum()
    }

    /// Total weight of edges with exactly one endpoint in the set.
    pub fn cut_of_mask(&self, mask: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|e| mask[e.u] != mask[e.v])
            .map(|e| e.w)
            .sum()
    }

    pub fn cut(&self, set: &[NodeId]) -> Result<f64> {
        let mask = self.set_mask(set)?;
        Ok(self.cut_of_mask(&mask))
    }

    /// `cut(S) / vol(S)`; an explicit error for zero-volume sets.
    pub fn conductance(&self, set: &[NodeId]) -> Result<f64> {
        let mask = self.set_mask(set)?;
        self.conductance_of_mask(&mask)
    }

    pub fn conductance_of_mask(&self, mask: &[bool]) -> Result<f64> {
        let vol = self.volume_of_mask(mask);
        if vol <= 0.0 {
            return Err(Error::ZeroVolume);
        }
        Ok(self.cut_of_mask(mask) / vol)
    }

    /// Dense combinatorial Laplacian `D − A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.u, e.u)] += e.w;
            l[(e.v, e.v)] += e.w;
            l[(e.u, e.v)] -= e.w;
            l[(e.v, e.u)] -= e.w;
        }
        l
    }

    /// Dense normalized Laplacian `D^{-1/2} L D^{-1/2}` restricted to the
    /// non-isolated nodes, returned with the kept node indices in order.
    pub fn normalized_laplacian(&self) -> (DMatrix<f64>, Vec<NodeId>) {
        let deg = self.degrees();
        let nodes: Vec<NodeId> = (0..self.n).filter(|&u| deg[u] > 0.0).collect();
        let mut pos = vec![usize::MAX; self.n];
        for (i, &u) in nodes.iter().enumerate() {
            pos[u] = i;
        }
        let k = nodes.len();
        let mut l = DMatrix::identity(k, k);
        for e in &self.edges {
            let (i, j) = (pos[e.u], pos[e.v]);
            let val = e.w / (deg[e.u] * deg[e.v]).sqrt();
            l[(i, j)] -= val;
            l[(j, i)] -= val;
        }
        (l, nodes)
    }

    /// The `k` smallest eigenvalues of the normalized Laplacian on the
    /// non-isolated induced subgraph, ascending.
    pub fn normalized_laplacian_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        let (l, nodes) = self.normalized_laplacian();
        if k > nodes.len() {
            return Err(Error::TooFewNodes {
                requested: k,
                available: nodes.len(),
            });
        }
        let mut vals: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals.truncate(k);
        Ok(vals)
    }

    /// Connected-component id per node (isolated nodes get their own id).
    pub fn components(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a != b {
                parent[a] = b;
            }
        }
        let mut ids = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut out = vec![0; self.n];
        for u in 0..self.n {
            let r = find(&mut parent, u);
            if ids[r] == usize::MAX {
                ids[r] = next;
                next += 1;
            }
            out[u] = ids[r];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn k4() -> Graph {
        let mut t = Vec::new();
        for u in 0..4 {
            for v in (u + 1)..4 {
                t.push((u, v, 1.0));
            }
        }
        Graph::from_triples(4, &t).unwrap()
    }

    fn triangle() -> Graph {
        Graph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn edge_construction_rules() {
        let e = WeightedEdge::new(3, 1, 2.0).unwrap();
        assert_eq!(e.key(), (1, 3));
        assert!(matches!(WeightedEdge::new(2, 2, 1.0), Err(Error::SelfLoop(2))));
        assert!(WeightedEdge::new(0, 1, 1e-13).is_err());
        assert!(WeightedEdge::new(0, 1, f64::NAN).is_err());
        let mut g = Graph::new(2);
        assert!(matches!(
            g.add_edge(WeightedEdge { u: 0, v: 5, w: 1.0 }),
            Err(Error::NodeOutOfRange { node: 5, n: 2 })
        ));
    }

    #[test]
    fn quadratic_form_examples() {
        let g = Graph::from_triples(2, &[(0, 1, 2.0)]).unwrap();
        assert_eq!(g.quadratic_form(&[1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(k4().quadratic_form(&[1.0; 4]).unwrap(), 0.0);
        assert_eq!(triangle().quadratic_form(&[1.0, 0.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(
            triangle().quadratic_form(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn volume_examples() {
        let g = k4();
        assert_eq!(g.volume(&[0]).unwrap(), 3.0);
        assert_eq!(g.volume(&[]).unwrap(), 0.0);
        assert_eq!(g.volume(&[0, 1]).unwrap(), 6.0);
        assert_eq!(g.volume(&[0, 1, 2, 3]).unwrap(), 2.0 * g.total_weight());
        assert!(g.volume(&[4]).is_err());
    }

    #[test]
    fn conductance_examples() {
        let g = k4();
        assert_eq!(g.conductance(&[2]).unwrap(), 1.0);
        assert_abs_diff_eq!(g.conductance(&[0, 1]).unwrap(), 4.0 / 6.0, epsilon = 1e-15);
        let two = Graph::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(two.conductance(&[0, 1]).unwrap(), 0.0);
        let iso = Graph::from_triples(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(iso.conductance(&[2]), Err(Error::ZeroVolume)));
    }

    #[test]
    fn eigenvalue_examples() {
        let p3 = Graph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let ev = p3.normalized_laplacian_eigenvalues(3).unwrap();
        for (a, b) in ev.iter().zip([0.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let two = Graph::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let ev = two.normalized_laplacian_eigenvalues(2).unwrap();
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 0.0, epsilon = 1e-12);
        let one = Graph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let ev = one.normalized_laplacian_eigenvalues(2).unwrap();
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalues_skip_isolated_nodes() {
        let g = Graph::from_triples(5, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.normalized_laplacian_eigenvalues(2).unwrap().len(), 2);
        assert!(matches!(
            g.normalized_laplacian_eigenvalues(3),
            Err(Error::TooFewNodes { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn parallel_edges_sum() {
        let par = Graph::from_triples(3, &[(0, 1, 0.5), (0, 1, 1.5), (1, 2, 1.0)]).unwrap();
        let single = Graph::from_triples(3, &[(0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let x = [0.3, -1.2, 2.0];
        assert_abs_diff_eq!(
            par.quadratic_form(&x).unwrap(),
            single.quadratic_form(&x).unwrap(),
            epsilon = 1e-12
        );
        assert_eq!(par.volume(&[0]).unwrap(), single.volume(&[0]).unwrap());
        assert_eq!(
            par.conductance(&[0, 1]).unwrap(),
            single.conductance(&[0, 1]).unwrap()
        );
        assert_eq!(par.laplacian(), single.laplacian());
    }

    #[test]
    fn components_count_isolated() {
        let g = Graph::from_triples(5, &[(0, 1, 1.0), (3, 4, 1.0)]).unwrap();
        let c = g.components();
        assert_eq!(c[0], c[1]);
        assert_eq!(c[3], c[4]);
        assert_ne!(c[0], c[2]);
        assert_ne!(c[0], c[3]);
    }
}

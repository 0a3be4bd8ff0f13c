//! Experimental inputs: the four-Gaussians similarity graph, pixel similarity
//! graphs, and x-ordered distributed stream schedules.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId, WeightedEdge, MIN_WEIGHT};
use crate::protocols::schedule::{EventKind, StreamSchedule, UpdateEvent};
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    /// Ground-truth cluster per point, when known.
    pub labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `x,y,...` CSV, with a trailing `label` column when labels are known.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let dim = self.points.first().map_or(0, Vec::len);
        let names = ["x", "y", "r", "g", "b"];
        let mut header: Vec<String> = (0..dim)
            .map(|i| names.get(i).map_or(format!("c{i}"), |s| s.to_string()))
            .collect();
        if self.labels.is_some() {
            header.push("label".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, p) in self.points.iter().enumerate() {
            let mut cols: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            if let Some(l) = &self.labels {
                cols.push(l[i].to_string());
            }
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }

    /// Reads the format written by [`PointCloud::write_csv`].
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let has_label = rdr
            .headers()
            .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
            .iter()
            .any(|h| h == "label");
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
            let mut vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
            if has_label {
                labels.push(vals.pop().unwrap_or(0.0) as usize);
            }
            points.push(vals);
        }
        Ok(Self {
            points,
            labels: has_label.then_some(labels),
        })
    }
}

/// kNN-union Gaussian-kernel similarity graph parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraphConfig {
    /// `K`: an edge joins u and v when either is among the K nearest of the other.
    pub neighbors: usize,
    pub sigma: f64,
}

impl SimilarityGraphConfig {
    pub fn new(neighbors: usize, sigma: f64) -> Result<Self> {
        if neighbors == 0 {
            return Err(Error::InvalidParameter("neighbor count must be ≥ 1".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { neighbors, sigma })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Undirected kNN-union graph with `W(u,v) = exp(−‖u−v‖² / 2σ²)`. Distance
/// ties are broken by node index. Kernel values that underflow below the
/// minimum edge weight are clamped to it.
pub fn knn_union_graph(points: &[Vec<f64>], cfg: &SimilarityGraphConfig) -> Result<Graph> {
    let n = points.len();
    let k = cfg.neighbors.min(n.saturating_sub(1));
    let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut dists: Vec<(f64, NodeId)> = Vec::with_capacity(n);
    for i in 0..n {
        dists.clear();
        dists.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(&points[i], &points[j]), j)));
        if k < dists.len() {
            dists.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        for &(_, j) in &dists[..k] {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    let two_s2 = 2.0 * cfg.sigma * cfg.sigma;
    let mut clamped = 0usize;
    let mut g = Graph::new(n);
    for (u, v) in pairs {
        let mut w = (-sq_dist(&points[u], &points[v]) / two_s2).exp();
        if w < MIN_WEIGHT {
            w = MIN_WEIGHT;
            clamped += 1;
        }
        g.add_edge(WeightedEdge::new(u, v, w)?)?;
    }
    if clamped > 0 {
        log::warn!("{clamped} kernel weights clamped to {MIN_WEIGHT}");
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussiansConfig {
    pub per_cluster: usize,
    pub means: Vec<[f64; 2]>,
    pub variance: f64,
    pub similarity: SimilarityGraphConfig,
}

/// Side of the square whose corners are the default cluster means.
pub const GAUSSIANS_MEAN_SPACING: f64 = 0.45;

impl Default for GaussiansConfig {
    fn default() -> Self {
        let d = GAUSSIANS_MEAN_SPACING;
        Self {
            per_cluster: 200,
            means: vec![[0.0, 0.0], [0.0, d], [d, 0.0], [d, d]],
            variance: 0.01,
            similarity: SimilarityGraphConfig {
                neighbors: 100,
                sigma: 1.0,
            },
        }
    }
}

/// The 800-node, 4-cluster Gaussians dataset.
pub fn gen_gaussians(seed: u64) -> Result<(PointCloud, Graph)> {
    gen_gaussians_with(&GaussiansConfig::default(), seed)
}

pub fn gen_gaussians_with(cfg: &GaussiansConfig, seed: u64) -> Result<(PointCloud, Graph)> {
    if !(cfg.variance > 0.0) {
        return Err(Error::InvalidParameter("variance must be positive".into()));
    }
    let normal = Normal::new(0.0, cfg.variance.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(cfg.per_cluster * cfg.means.len());
    let mut labels = Vec::with_capacity(points.capacity());
    for (c, mean) in cfg.means.iter().enumerate() {
        for _ in 0..cfg.per_cluster {
            points.push(vec![
                mean[0] + normal.sample(&mut rng),
                mean[1] + normal.sample(&mut rng),
            ]);
            labels.push(c);
        }
    }
    let g = knn_union_graph(&points, &cfg.similarity)?;
    Ok((
        PointCloud {
            points,
            labels: Some(labels),
        },
        g,
    ))
}

/// Row-major RGB raster; pixel `(x, y)` lives at `pixels[y * width + x]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbRaster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// One `(x, y, r, g, b)` point per pixel, row-major.
    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.pixels
            .iter()
            .enumerate()
            .map(|(i, px)| {
                vec![
                    (i % self.width) as f64,
                    (i / self.width) as f64,
                    px[0] as f64,
                    px[1] as f64,
                    px[2] as f64,
                ]
            })
            .collect()
    }
}

/// Parses a binary (P6) or ASCII (P3) PPM with maxval ≤ 255.
pub fn parse_ppm(bytes: &[u8]) -> Result<RgbRaster> {
    let perr = |msg: &str| Error::Parse {
        line: 0,
        msg: format!("ppm: {msg}"),
    };
    let mut pos = 0;
    let token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos).ok_or_else(|| perr("empty input"))?;
    let num = |pos: &mut usize| -> Result<usize> {
        token(pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr("bad header"))
    };
    let width = num(&mut pos)?;
    let height = num(&mut pos)?;
    let maxval = num(&mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(perr("only 8-bit PPM is supported"));
    }
    let scale = |x: usize| ((x * 255) / maxval) as u8;
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    match magic.as_str() {
        "P6" => {
            pos += 1;
            let data = bytes.get(pos..pos + 3 * count).ok_or_else(|| perr("truncated data"))?;
            for c in data.chunks_exact(3) {
                pixels.push([scale(c[0] as usize), scale(c[1] as usize), scale(c[2] as usize)]);
            }
        }
        "P3" => {
            for _ in 0..count {
                let mut px = [0u8; 3];
                for ch in &mut px {
                    *ch = scale(num(&mut pos)?);
                }
                pixels.push(px);
            }
        }
        _ => return Err(perr("expected P3 or P6")),
    }
    RgbRaster::new(width, height, pixels)
}

/// Pixel similarity graph: one node per pixel at `(x, y, r, g, b)`.
pub fn gen_image_graph(image: &RgbRaster, cfg: &SimilarityGraphConfig) -> Result<(PointCloud, Graph)> {
    if image.pixels.is_empty() {
        return Err(Error::InvalidParameter("image has no pixels".into()));
    }
    if image.pixels.len() == 1 {
        log::warn!("single-pixel image yields a graph without edges");
    }
    let points = image.to_points();
    let g = knn_union_graph(&points, cfg)?;
    Ok((PointCloud { points, labels: None }, g))
}

/// Parameters for [`gen_schedule`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub t: usize,
    pub s: usize,
    pub seed: u64,
    /// Fraction of edges deleted later; the count is `floor(frac · m)`.
    pub delete_frac: f64,
}

/// Distributed stream over the edges of `g`: edges sorted by the smaller x
/// coordinate of their endpoints are cut into `t` equal-count buckets
/// (remainder to the earliest), each edge goes to a uniform site, and a
/// `delete_frac` share of edges is deleted at a uniform later time point.
pub fn gen_schedule(g: &Graph, points: &PointCloud, cfg: &ScheduleConfig) -> Result<StreamSchedule> {
    let ScheduleConfig { t, s, seed, delete_frac } = *cfg;
    if t == 0 || s == 0 {
        return Err(Error::InvalidParameter("t and s must be ≥ 1".into()));
    }
    if !(0.0..1.0).contains(&delete_frac) {
        return Err(Error::InvalidParameter(format!(
            "delete_frac must lie in [0, 1), got {delete_frac}"
        )));
    }
    if points.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: points.len(),
        });
    }
    let m = g.m();
    if t > m {
        log::warn!("t = {t} exceeds the edge count {m}; some time points get no edges");
    }
    let x = |u: NodeId| points.points[u][0];
    let mut order: Vec<usize> = (0..m).collect();
    let edges = g.edges();
    order.sort_by(|&a, &b| {
        let ka = x(edges[a].u).min(x(edges[a].v));
        let kb = x(edges[b].u).min(x(edges[b].v));
        ka.total_cmp(&kb).then(edges[a].key().cmp(&edges[b].key())).then(a.cmp(&b))
    });

    let base = m / t;
    let extra = m % t;
    let mut arrival = vec![0usize; m];
    let mut idx = 0;
    for tau in 1..=t {
        let size = base + usize::from(tau <= extra);
        for &e in &order[idx..idx + size] {
            arrival[e] = tau;
        }
        idx += size;
    }

    let mut site_rng = rng_from_seed(derive_seed(seed, &[1]));
    let site: Vec<usize> = order.iter().map(|_| site_rng.random_range(1..=s)).collect();

    let mut events: Vec<UpdateEvent> = order
        .iter()
        .zip(&site)
        .map(|(&e, &st)| UpdateEvent {
            time: arrival[e],
            site: st,
            kind: EventKind::Insert,
            edge: edges[e],
        })
        .collect();

    let want = (delete_frac * m as f64).floor() as usize;
    if want > 0 {
        let eligible: Vec<usize> = (0..m).filter(|&i| events[i].time < t).collect();
        if eligible.len() < want {
            log::warn!("only {} edges can be deleted after arrival", eligible.len());
        }
        let mut del_rng = rng_from_seed(derive_seed(seed, &[2]));
        let chosen = sample(&mut del_rng, eligible.len(), want.min(eligible.len()));
        let mut picked: Vec<usize> = chosen.into_iter().map(|i| eligible[i]).collect();
        picked.sort_unstable();
        for i in picked {
            let ins = events[i];
            let time = del_rng.random_range(ins.time + 1..=t);
            events.push(UpdateEvent {
                time,
                kind: EventKind::Delete,
                ..ins
            });
        }
    }
    StreamSchedule::new(g.n(), t, s, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_pixel_image() {
        let img = RgbRaster::new(2, 1, vec![[0, 0, 0]; 2]).unwrap();
        let cfg = SimilarityGraphConfig::new(1, 20.0).unwrap();
        let (pts, g) = gen_image_graph(&img, &cfg).unwrap();
        assert_eq!(pts.points[1], vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(g.m(), 1);
        assert_relative_eq!(g.edges()[0].w, (-1.0f64 / 800.0).exp());
    }

    #[test]
    fn single_pixel_image_has_no_edges() {
        let img = RgbRaster::new(1, 1, vec![[9, 9, 9]]).unwrap();
        let (_, g) = gen_image_graph(&img, &SimilarityGraphConfig::new(5, 1.0).unwrap()).unwrap();
        assert_eq!((g.n(), g.m()), (1, 0));
    }

    #[test]
    fn uniform_image_weights_depend_on_position_only() {
        let img = RgbRaster::new(4, 3, vec![[40, 90, 200]; 12]).unwrap();
        let cfg = SimilarityGraphConfig::new(3, 2.0).unwrap();
        let (pts, g) = gen_image_graph(&img, &cfg).unwrap();
        assert_eq!(g.n(), 12);
        for e in g.edges() {
            let (a, b) = (&pts.points[e.u], &pts.points[e.v]);
            let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
            assert_relative_eq!(e.w, (-d2 / 8.0).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn knn_union_rule() {
        // 0 and 1 are mutual nearest; 2's nearest is 1, so (1,2) is added via 2.
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let g = knn_union_graph(&pts, &SimilarityGraphConfig::new(1, 1.0).unwrap()).unwrap();
        let keys: Vec<_> = g.edges().iter().map(|e| e.key()).collect();
        assert_eq!(keys, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_tie_break_by_index() {
        let pts = vec![vec![0.0], vec![-1.0], vec![1.0]];
        let g = knn_union_graph(&pts, &SimilarityGraphConfig::new(1, 1.0).unwrap()).unwrap();
        let keys: Vec<_> = g.edges().iter().map(|e| e.key()).collect();
        assert_eq!(keys, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn ppm_parsing() {
        let ascii = b"P3\n# comment\n2 1\n255\n255 0 0  0 0 255\n";
        let img = parse_ppm(ascii).unwrap();
        assert_eq!(img.pixels, vec![[255, 0, 0], [0, 0, 255]]);
        let mut bin = b"P6 1 2 255\n".to_vec();
        bin.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = parse_ppm(&bin).unwrap();
        assert_eq!((img.width, img.height), (1, 2));
        assert_eq!(img.pixels[1], [4, 5, 6]);
        assert!(parse_ppm(b"P5 1 1 255\n\0").is_err());
    }

    fn line_graph(n: usize) -> (PointCloud, Graph) {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![(n - i) as f64, 0.0]).collect();
        let t: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        (PointCloud { points: pts, labels: None }, Graph::from_triples(n, &t).unwrap())
    }

    #[test]
    fn schedule_single_time_point() {
        let (pts, g) = line_graph(10);
        let cfg = ScheduleConfig { t: 1, s: 3, seed: 0, delete_frac: 0.0 };
        let sch = gen_schedule(&g, &pts, &cfg).unwrap();
        assert_eq!(sch.events_at(1).len(), 9);
    }

    #[test]
    fn schedule_buckets_and_order() {
        let (pts, g) = line_graph(24);
        let cfg = ScheduleConfig { t: 5, s: 4, seed: 7, delete_frac: 0.0 };
        let sch = gen_schedule(&g, &pts, &cfg).unwrap();
        let sizes: Vec<usize> = (1..=5).map(|tau| sch.events_at(tau).len()).collect();
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
        // x decreases with index, so high-index edges arrive first
        let minx = |e: &WeightedEdge| pts.points[e.u][0].min(pts.points[e.v][0]);
        let mut by_time: Vec<(usize, f64)> =
            sch.events().iter().map(|ev| (ev.time, minx(&ev.edge))).collect();
        by_time.sort_by(|a, b| a.1.total_cmp(&b.1));
        assert!(by_time.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(sch.events().iter().all(|e| (1..=4).contains(&e.site)));
    }

    #[test]
    fn schedule_deletions() {
        let (pts, g) = line_graph(201);
        let cfg = ScheduleConfig { t: 10, s: 3, seed: 1, delete_frac: 0.05 };
        let sch = gen_schedule(&g, &pts, &cfg).unwrap();
        assert_eq!(sch.delete_count(), 10);
        assert_eq!(sch.insert_count(), 200);
        assert!(gen_schedule(&g, &pts, &ScheduleConfig { delete_frac: 1.0, ..cfg }).is_err());
    }

    #[test]
    fn gaussians_are_deterministic() {
        let cfg = GaussiansConfig {
            per_cluster: 20,
            similarity: SimilarityGraphConfig { neighbors: 5, sigma: 1.0 },
            ..Default::default()
        };
        let (p1, g1) = gen_gaussians_with(&cfg, 3).unwrap();
        let (p2, g2) = gen_gaussians_with(&cfg, 3).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(g1, g2);
        assert_eq!(g1.n(), 80);
        assert!(g1.m() >= 80 * 5 / 2 && g1.m() <= 80 * 5);
    }

    #[test]
    fn point_csv_round_trip() {
        let pc = PointCloud {
            points: vec![vec![0.5, -1.0], vec![2.0, 3.25]],
            labels: Some(vec![1, 0]),
        };
        let mut buf = Vec::new();
        pc.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x,y,label\n"));
        assert_eq!(PointCloud::read_csv(&buf[..]).unwrap(), pc);
    }
}

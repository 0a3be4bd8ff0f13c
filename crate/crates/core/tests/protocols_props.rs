mod common;

use ddclust::datasets::{gen_gaussians_with, gen_schedule, GaussiansConfig, ScheduleConfig};
use ddclust::protocols::{self, Algorithm, EventKind, RunParams, StreamSchedule, UpdateEvent};
use ddclust::seed::derive_seed;
use ddclust::sparsify::{OnlineSampler, SamplerConfig};
use ddclust::{Graph, WeightedEdge};
use proptest::prelude::*;

fn small_gaussians(per_cluster: usize, t: usize, s: usize, seed: u64, delete_frac: f64) -> StreamSchedule {
    let cfg = GaussiansConfig {
        per_cluster,
        ..GaussiansConfig::default()
    };
    let (pc, g) = gen_gaussians_with(&cfg, seed).unwrap();
    gen_schedule(&g, &pc, &ScheduleConfig { t, s, seed, delete_frac }).unwrap()
}

fn params(seed: u64) -> RunParams {
    let mut p = RunParams::new(4, 0.3, 9.0, seed);
    p.oversampling_factor = 0.4;
    p
}

/// Insert-only schedule placing `edges` round-robin over time and sites.
fn schedule_from(n: usize, edges: &[WeightedEdge], t: usize, s: usize) -> StreamSchedule {
    let events = edges
        .iter()
        .enumerate()
        .map(|(i, e)| UpdateEvent {
            time: 1 + i * t / edges.len().max(1),
            site: 1 + i % s,
            kind: EventKind::Insert,
            edge: *e,
        })
        .collect();
    StreamSchedule::new(n, t, s, events).unwrap()
}

#[test]
fn runs_are_deterministic() {
    let sch = small_gaussians(25, 5, 4, 1, 0.05);
    for alg in Algorithm::ALL {
        let a = protocols::run(alg, &sch, &params(3)).unwrap();
        let b = protocols::run(alg, &sch, &params(3)).unwrap();
        assert_eq!(a, b, "{alg}");
    }
}

#[test]
fn ledgers_are_cumulative_with_one_record_per_time_point() {
    let sch = small_gaussians(25, 6, 5, 2, 0.05);
    for alg in Algorithm::ALL {
        let run = protocols::run(alg, &sch, &params(1)).unwrap();
        let c = run.ledger.cumulative();
        assert_eq!(c.len(), 6);
        assert!(c.windows(2).all(|w| w[0] <= w[1]), "{alg}");
        assert_eq!(run.points.len(), 6);
        for (i, p) in run.points.iter().enumerate() {
            assert_eq!(p.tau, i + 1);
            assert_eq!(p.comm_cumulative, c[i]);
        }
    }
}

#[test]
fn cntrl_counts_every_event() {
    let sch = small_gaussians(20, 4, 3, 5, 0.1);
    let run = protocols::run_cntrl(&sch, &params(0)).unwrap();
    assert_eq!(run.final_comm() as usize, sch.events().len());
    let clean = protocols::run_cntrl(&sch.without_deletions(), &params(0)).unwrap();
    assert_eq!(clean.final_comm() as usize, sch.insert_count());
    assert_eq!(run.final_comm() - clean.final_comm(), sch.delete_count() as u64);
}

#[test]
fn tree_stream_sends_every_edge_once() {
    let n = 60;
    let mut r = common::rng(4);
    let tree: Vec<WeightedEdge> = (1..n)
        .map(|v| {
            use rand::Rng;
            WeightedEdge::new(r.random_range(0..v), v, r.random_range(0.5..2.0)).unwrap()
        })
        .collect();
    let sch = schedule_from(n, &tree, 3, 1);
    let p = RunParams::new(2, 0.3, 1e-8 * 0.3, 7);
    for alg in [Algorithm::D2Camp, Algorithm::D2Cabl] {
        let run = protocols::run(alg, &sch, &p).unwrap();
        assert_eq!(run.final_comm(), (n - 1) as u64, "{alg}");
        assert_eq!(run.sketch, Graph::from_edges(n, tree.clone()).unwrap());
    }
}

#[test]
fn single_site_blackboard_matches_direct_sampler() {
    let g = common::knn_graph(70, 12, 3);
    let sch = schedule_from(70, g.edges(), 1, 1);
    let p = params(11);
    let run = protocols::run_d2cabl(&sch, &p).unwrap();
    let cfg = SamplerConfig::new(70, p.epsilon, p.delta, p.sampler_seed)
        .unwrap()
        .with_oversampling_factor(p.oversampling_factor)
        .unwrap();
    let mut s = OnlineSampler::new(cfg);
    for ev in sch.events() {
        s.offer(&ev.edge).unwrap();
    }
    assert_eq!(run.final_comm(), s.kept() as u64);
    assert_eq!(run.sketch, s.sparsifier_graph());
}

#[test]
fn one_time_point_camp_is_sum_of_site_sparsifiers() {
    let g = common::knn_graph(60, 10, 8);
    let sch = schedule_from(60, g.edges(), 1, 4);
    let p = params(5);
    let run = protocols::run_d2camp(&sch, &p).unwrap();
    let mut total = 0;
    for site in 1..=4 {
        let seed = derive_seed(p.sampler_seed, &[site as u64]);
        let cfg = SamplerConfig::new(60, p.epsilon, p.delta, seed)
            .unwrap()
            .with_oversampling_factor(p.oversampling_factor)
            .unwrap();
        let mut s = OnlineSampler::new(cfg);
        for ev in sch.events().iter().filter(|ev| ev.site == site) {
            s.offer(&ev.edge).unwrap();
        }
        total += s.kept();
    }
    assert_eq!(run.final_comm(), total as u64);
}

#[test]
fn stmp_sends_fresh_site_sparsifiers_every_step() {
    let sch = small_gaussians(20, 4, 3, 9, 0.0);
    let p = params(2);
    let run = protocols::run_stmp(&sch, &p).unwrap();
    let mut expected = 0u64;
    for tau in 1..=4 {
        for site in 1..=3 {
            let seed = derive_seed(p.sampler_seed, &[tau as u64, site as u64]);
            let cfg = SamplerConfig::new(sch.n(), p.epsilon, p.delta, seed)
                .unwrap()
                .with_oversampling_factor(p.oversampling_factor)
                .unwrap();
            let mut s = OnlineSampler::new(cfg);
            for ev in sch.events().iter().filter(|ev| ev.time <= tau && ev.site == site) {
                s.offer(&ev.edge).unwrap();
            }
            expected += s.kept() as u64;
        }
        assert_eq!(run.ledger.cumulative()[tau - 1], expected, "tau {tau}");
    }
}

#[test]
fn deletions_never_reach_the_monotone_protocols() {
    let with = small_gaussians(25, 5, 4, 6, 0.05);
    let without = with.without_deletions();
    assert!(with.delete_count() > 0);
    for alg in [Algorithm::D2Camp, Algorithm::D2Cabl] {
        let a = protocols::run(alg, &with, &params(4)).unwrap();
        let b = protocols::run(alg, &without, &params(4)).unwrap();
        assert_eq!(a.ledger, b.ledger, "{alg}");
        assert_eq!(a.sketch, b.sketch, "{alg}");
        // NCut is still measured on the graph with deletions applied
        assert_eq!(a.truth.m(), with.insert_count() - with.delete_count());
    }
}

#[test]
fn empty_schedule_has_undefined_ncut() {
    let sch = StreamSchedule::new(10, 4, 2, Vec::new()).unwrap();
    for alg in Algorithm::ALL {
        let run = protocols::run(alg, &sch, &params(0)).unwrap();
        assert_eq!(run.points.len(), 4);
        assert_eq!(run.final_comm(), 0);
        assert!(run.points.iter().all(|p| p.ncut.is_none()));
    }
}

#[test]
fn clustering_cadence() {
    let sch = small_gaussians(15, 7, 2, 1, 0.0);
    let mut p = params(0);
    p.cluster_every = 3;
    let run = protocols::run_cntrl(&sch, &p).unwrap();
    let clustered: Vec<usize> = run.points.iter().filter(|q| q.partition.is_some()).map(|q| q.tau).collect();
    assert_eq!(clustered, vec![3, 6, 7]);
    p.cluster_every = 0;
    let run = protocols::run_cntrl(&sch, &p).unwrap();
    assert!(run.points.iter().all(|q| q.partition.is_none()));
}

#[test]
fn coordinator_union_approximates_the_graph() {
    let g = common::knn_graph(150, 25, 21);
    let sch = schedule_from(150, g.edges(), 4, 5);
    let mut p = RunParams::new(2, 0.3, 0.3 * 1e-6, 3);
    p.keep_snapshots = true;
    p.cluster_every = 0;
    let run = protocols::run_d2camp(&sch, &p).unwrap();
    let mut r = common::rng(1);
    let mut prefix = Graph::new(150);
    let mut trials = 0;
    let mut inside = 0;
    for (tau, point) in (1..=4).zip(&run.points) {
        for ev in sch.events_at(tau) {
            prefix.add_edge(ev.edge).unwrap();
        }
        let h = point.snapshot.as_ref().unwrap();
        for _ in 0..50 {
            let x = common::gaussian_vector(150, &mut r);
            let q = prefix.quadratic_form(&x).unwrap();
            let qh = h.quadratic_form(&x).unwrap();
            trials += 1;
            if qh >= 0.6 * q && qh <= 1.4 * q {
                inside += 1;
            }
        }
    }
    assert!(inside as f64 >= 0.95 * trials as f64, "{inside}/{trials}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn camp_sketch_only_grows(n in 8usize..30, seed in any::<u64>(), t in 1usize..6, s in 1usize..5) {
        let g = common::erdos_renyi(n, 0.5, seed);
        prop_assume!(g.m() > 0);
        let sch = schedule_from(n, g.edges(), t, s);
        let mut p = RunParams::new(2, 0.3, 0.3, seed);
        p.oversampling_factor = 0.3;
        p.keep_snapshots = true;
        p.cluster_every = 0;
        for alg in [Algorithm::D2Camp, Algorithm::D2Cabl] {
            let run = protocols::run(alg, &sch, &p).unwrap();
            let snaps: Vec<&Graph> = run.points.iter().map(|q| q.snapshot.as_ref().unwrap()).collect();
            for w in snaps.windows(2) {
                prop_assert!(w[1].edges().starts_with(w[0].edges()));
            }
            for (q, snap) in run.points.iter().zip(&snaps) {
                prop_assert_eq!(q.comm_cumulative as usize, snap.m());
            }
        }
    }
}

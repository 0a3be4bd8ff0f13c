mod common;

use ddclust::protocols::{EventKind, StreamSchedule, UpdateEvent};
use ddclust::spanner::{run_spanner, union_query, SpannerState};
use ddclust::{Graph, WeightedEdge};
use proptest::prelude::*;
use rand::Rng;

fn stream(n: usize, edges: &[WeightedEdge], t: usize, s: usize, seed: u64) -> StreamSchedule {
    let mut r = common::rng(seed);
    let events = edges
        .iter()
        .enumerate()
        .map(|(i, e)| UpdateEvent {
            time: 1 + i * t / edges.len(),
            site: r.random_range(1..=s),
            kind: EventKind::Insert,
            edge: *e,
        })
        .collect();
    StreamSchedule::new(n, t, s, events).unwrap()
}

fn check_stretch(g: &Graph, k: usize, t: usize, s: usize, seed: u64) {
    let sch = stream(g.n(), g.edges(), t, s, seed);
    let n = g.n();
    let mut states: Vec<SpannerState> = (0..s).map(|_| SpannerState::new(n, k).unwrap()).collect();
    let mut prefix = Graph::new(n);
    let mut history: Vec<Vec<Vec<WeightedEdge>>> = vec![Vec::new(); s];
    let mut comm = 0;
    let stretch = (2 * k - 1) as f64;
    for tau in 1..=t {
        for ev in sch.events_at(tau) {
            prefix.add_edge(ev.edge).unwrap();
            if states[ev.site - 1].offer(&ev.edge).unwrap() {
                comm += 1;
            }
        }
        let exact = common::floyd_warshall(&prefix);
        for u in 0..n {
            for v in u + 1..n {
                let d = union_query(&states, u, v).unwrap().distance;
                if exact[u][v].is_infinite() {
                    assert!(d.is_infinite());
                } else {
                    assert!(d >= exact[u][v] - 1e-9);
                    assert!(d <= stretch * exact[u][v] * (1.0 + 1e-12), "k={k} tau={tau} ({u},{v}): {d} vs {}", exact[u][v]);
                }
            }
        }
        for (i, st) in states.iter().enumerate() {
            if let Some(prev) = history[i].last() {
                assert!(st.kept().starts_with(prev));
            }
            history[i].push(st.kept().to_vec());
        }
        assert_eq!(comm, states.iter().map(|s| s.kept().len()).sum::<usize>());
    }
    let (records, final_states) = run_spanner(&sch, k, &[(0, n - 1)]).unwrap();
    assert_eq!(records.len(), t);
    assert_eq!(records.last().unwrap().comm_cumulative as usize, comm);
    for (a, b) in final_states.iter().zip(&states) {
        assert_eq!(a.kept(), b.kept());
    }
}

#[test]
fn union_spanner_stretch_on_random_graphs() {
    for k in [2, 3] {
        check_stretch(&common::erdos_renyi(100, 0.1, k as u64), k, 5, 4, 1);
        check_stretch(&common::connected_er(150, 0.05, 10 + k as u64), k, 3, 6, 2);
    }
}

#[test]
fn unit_weight_graph() {
    let g = common::erdos_renyi(100, 0.1, 3);
    let unit = Graph::from_edges(100, g.edges().iter().map(|e| WeightedEdge::unit(e.u, e.v).unwrap())).unwrap();
    check_stretch(&unit, 2, 4, 3, 5);
}

#[test]
fn tree_distances_are_exact() {
    let mut r = common::rng(2);
    let tree: Vec<WeightedEdge> = (1..50)
        .map(|v| WeightedEdge::new(r.random_range(0..v), v, r.random_range(0.1..3.0)).unwrap())
        .collect();
    let g = Graph::from_edges(50, tree.clone()).unwrap();
    let mut st = SpannerState::new(50, 2).unwrap();
    for e in &tree {
        assert!(st.offer(e).unwrap());
    }
    let exact = common::floyd_warshall(&g);
    for u in 0..50 {
        for v in 0..50 {
            assert!((st.distance(u, v) - exact[u][v]).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_offered_edge_stays_stretched(
        edges in prop::collection::vec((0usize..25, 0usize..25, 0.1f64..10.0), 1..120),
        k in 2usize..4,
    ) {
        let mut st = SpannerState::new(25, k).unwrap();
        let mut offered = Vec::new();
        for (u, v, w) in edges.into_iter().filter(|(u, v, _)| u != v) {
            let e = WeightedEdge::new(u, v, w).unwrap();
            st.offer(&e).unwrap();
            offered.push(e);
            for o in &offered {
                prop_assert!(st.distance(o.u, o.v) <= st.stretch() * o.w * (1.0 + 1e-12));
            }
        }
    }
}

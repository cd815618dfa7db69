use std::collections::VecDeque;

use proptest::prelude::*;
use truthcascade::graph::{gen_butterfly, gen_erdos_renyi, gen_grid, gen_preferential_attachment, Graph};
use truthcascade::ordering::{
    aggregator_ordering, grid_loglog_ordering, loglog_sequences, two_neighbors_high_value_ordering,
    two_neighbors_ordering, Ordering, Strategy, TracedOrdering,
};
use truthcascade::rng::substream;

fn is_permutation(o: &Ordering, n: usize) -> bool {
    let mut seen = vec![false; n];
    o.len() == n
        && o.sequence().iter().all(|&v| v < n && !std::mem::replace(&mut seen[v], true))
        && (0..n).all(|v| o.vertex(o.rank(v)) == v)
}

/// Vertices placed by the frontier rule had at least two placed neighbors.
fn frontier_rule_holds(g: &Graph, t: &TracedOrdering) -> bool {
    let mut placed = vec![false; g.n()];
    for &v in t.ordering.sequence() {
        let before = g.neighbors(v).iter().filter(|&&u| placed[u]).count();
        if !t.seeded[v] && before < 2 {
            return false;
        }
        placed[v] = true;
    }
    true
}

fn reachable_without(g: &Graph, start: usize, removed: &[usize]) -> usize {
    let mut seen = vec![false; g.n()];
    for &s in removed {
        seen[s] = true;
    }
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut count = 0;
    while let Some(v) = queue.pop_front() {
        count += 1;
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generic_strategies_are_permutations(n in 1usize..80, p in 0.0f64..0.4, seed: u64, m in 1usize..10) {
        let g = gen_erdos_renyi(n, p, &mut substream(seed, 0)).unwrap();
        let mut rng = substream(seed, 1);
        for s in [
            Strategy::Random,
            Strategy::TwoNeighbors,
            Strategy::HighValue { m },
            Strategy::Aggregator { m_target: None },
            Strategy::Aggregator { m_target: Some(m) },
        ] {
            let o = s.build(&g, &mut rng).unwrap();
            prop_assert!(is_permutation(&o, n), "{s}");
        }
    }

    #[test]
    fn family_strategies_are_permutations(side in 1usize..30, k in 1usize..7, seed: u64) {
        let grid = gen_grid(side).unwrap();
        let mut rng = substream(seed, 0);
        for s in [Strategy::Spiral, Strategy::GridLoglog] {
            prop_assert!(is_permutation(&s.build(&grid, &mut rng).unwrap(), side * side));
        }
        let b = gen_butterfly(k).unwrap();
        prop_assert!(is_permutation(&Strategy::BottomUp.build(&b, &mut rng).unwrap(), b.n()));
        let pa = gen_preferential_attachment(40, 3, &mut rng).unwrap();
        prop_assert!(is_permutation(&Strategy::Arrival.build(&pa, &mut rng).unwrap(), 40));
    }

    #[test]
    fn aggregator_certificate(n in 2usize..150, p in 0.01f64..0.3, seed: u64, m in proptest::option::of(1usize..12)) {
        let g = gen_erdos_renyi(n, p, &mut substream(seed, 0)).unwrap();
        let (o, cert) = aggregator_ordering(&g, m);
        prop_assert!(is_permutation(&o, n));
        let v = cert.aggregator;
        prop_assert!((0..n).all(|u| g.degree(u) <= g.degree(v)));
        for (i, &a) in cert.guinea_pigs.iter().enumerate() {
            prop_assert!(g.has_edge(v, a));
            for &b in &cert.guinea_pigs[i + 1..] {
                prop_assert!(!g.has_edge(a, b));
            }
        }
        prop_assert_eq!(cert.coverage, reachable_without(&g, v, &cert.guinea_pigs));
        let s = cert.guinea_pigs.len();
        prop_assert_eq!(&o.sequence()[..s], &cert.guinea_pigs[..]);
        prop_assert_eq!(o.vertex(s), v);
    }

    #[test]
    fn loglog_step_one_bound(side in 2usize..80) {
        let g = gen_grid(side).unwrap();
        let t = grid_loglog_ordering(&g).unwrap();
        prop_assert!(is_permutation(&t.ordering, side * side));
        let n = side * side;
        let log_n = usize::BITS as usize - 1 - n.leading_zeros() as usize;
        let loglog = (log_n as f64).log2().ceil() as usize;
        prop_assert!(t.step_one_len <= log_n * loglog, "{} > {}", t.step_one_len, log_n * loglog);
        let total: usize = loglog_sequences(n).iter().map(Vec::len).sum();
        if !t.fell_back {
            prop_assert_eq!(t.step_one_len, total);
        }
    }

    #[test]
    fn two_neighbor_variants_respect_frontier(n in 2usize..120, p in 0.0f64..0.3, seed: u64, m in 1usize..20) {
        let g = gen_erdos_renyi(n, p, &mut substream(seed, 0)).unwrap();
        let mut rng = substream(seed, 1);
        let t = two_neighbors_ordering(&g, &mut rng);
        prop_assert!(is_permutation(&t.ordering, n));
        prop_assert!(frontier_rule_holds(&g, &t));
        let h = two_neighbors_high_value_ordering(&g, m, &mut rng).unwrap();
        prop_assert!(is_permutation(&h.ordering, n));
        prop_assert!(frontier_rule_holds(&g, &h));
        // Every frontier-placed vertex was labelled high-value.
        prop_assert!((0..n).all(|v| h.seeded[v] || h.high_value[v]));
    }
}

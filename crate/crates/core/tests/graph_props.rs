use std::collections::BTreeSet;
use std::io::Cursor;

use proptest::prelude::*;
use truthcascade::graph::{
    connected_components, gen_butterfly, gen_erdos_renyi, gen_grid, gen_preferential_attachment, load_edge_list,
    Graph,
};
use truthcascade::rng::substream;

fn edge_set(g: &Graph) -> BTreeSet<(usize, usize)> {
    g.edges().collect()
}

fn labelled_edges(g: &Graph) -> BTreeSet<(String, String)> {
    g.edges()
        .map(|(u, v)| {
            let (a, b) = (g.label(u), g.label(v));
            if a < b { (a, b) } else { (b, a) }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn er_is_simple(n in 1usize..120, p in 0.0f64..=1.0, seed: u64) {
        let g = gen_erdos_renyi(n, p, &mut substream(seed, 0)).unwrap();
        prop_assert!(g.validate().is_ok());
        prop_assert_eq!(g.n(), n);
        if p == 1.0 {
            prop_assert_eq!(g.edge_count(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn pa_edge_count_and_connectivity(k in 1usize..7, extra in 1usize..150, seed: u64) {
        let n = k + 1 + extra;
        let g = gen_preferential_attachment(n, k, &mut substream(seed, 0)).unwrap();
        prop_assert!(g.validate().is_ok());
        prop_assert_eq!(g.edge_count(), (k + 1) * k / 2 + k * (n - k - 1));
        prop_assert_eq!(connected_components(&g).count(), 1);
        // Each newcomer attaches to exactly k earlier vertices.
        for v in k + 1..n {
            prop_assert_eq!(g.neighbors(v).iter().filter(|&&u| u < v).count(), k);
        }
    }

    #[test]
    fn grid_edge_count(side in 1usize..40) {
        let g = gen_grid(side).unwrap();
        prop_assert!(g.validate().is_ok());
        prop_assert_eq!(g.edge_count(), 2 * side * (side - 1));
    }

    #[test]
    fn butterfly_layers(k in 1usize..9) {
        let g = gen_butterfly(k).unwrap();
        prop_assert!(g.validate().is_ok());
        prop_assert_eq!(g.n(), (k + 1) << k);
        for v in 0..g.n() {
            let rank = v >> k;
            let below = g.neighbors(v).iter().filter(|&&u| u >> k == rank.wrapping_sub(1)).count();
            if rank > 0 {
                prop_assert_eq!(below, 2);
            }
            let d = g.degree(v);
            prop_assert!(d == 2 || d == 4);
            if rank == 0 || rank == k {
                prop_assert_eq!(d, 2);
            }
        }
    }

    #[test]
    fn edge_list_round_trip(n in 2usize..60, p in 0.05f64..0.5, seed: u64) {
        let g = gen_erdos_renyi(n, p, &mut substream(seed, 1)).unwrap();
        // An edgeless graph serializes to nothing, which the loader rejects.
        prop_assume!(g.edge_count() > 0);
        let text = g.to_edge_list();
        let loaded = load_edge_list(Cursor::new(text.clone())).unwrap();
        prop_assert!(loaded.validate().is_ok());
        // Same edges once the loader's labels are mapped back.
        let back: BTreeSet<(usize, usize)> = loaded
            .edges()
            .map(|(u, v)| {
                let a: usize = loaded.label(u).parse().unwrap();
                let b: usize = loaded.label(v).parse().unwrap();
                (a.min(b), a.max(b))
            })
            .collect();
        prop_assert_eq!(back, edge_set(&g));
        // Serializing the loaded graph and loading again changes nothing
        // beyond the index assigned to each label.
        let again = load_edge_list(Cursor::new(loaded.to_edge_list())).unwrap();
        prop_assert_eq!(labelled_edges(&again), labelled_edges(&loaded));
    }
}

#[test]
fn er_sparse_giant_component() {
    // pn = 10: the non-giant fraction is about 4.5e-5, so almost every
    // instance keeps at least 990 of 1000 vertices together.
    let good = (0..40)
        .filter(|&s| {
            let g = gen_erdos_renyi(1000, 0.01, &mut substream(s, 3)).unwrap();
            connected_components(&g).largest() >= 990
        })
        .count();
    assert!(good >= 38, "{good}/40");
}

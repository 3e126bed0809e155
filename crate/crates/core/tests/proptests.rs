//! Property tests over randomly generated trees and points.

use proptest::prelude::*;
use ultragraphon::fixtures;
use ultragraphon::graphon::{Graphon, Intervention, Kernel};
use ultragraphon::tree::{RandomTreeParams, Rational, UltrametricTree};

fn arb_tree() -> impl Strategy<Value = std::sync::Arc<UltrametricTree>> {
    (2u32..=5, 0.6f64..4.0, any::<u64>()).prop_map(|(depth, c, seed)| {
        UltrametricTree::random_binary(&RandomTreeParams::new(depth, c, seed)).unwrap()
    })
}

fn arb_graphon() -> impl Strategy<Value = Graphon> {
    (arb_tree(), 0.05f64..0.5).prop_map(|(tree, scale)| {
        Graphon::new(tree, Kernel::Exponential { scale }).unwrap()
    })
}

proptest! {
    #[test]
    fn strong_triangle_inequality(tree in arb_tree(), x in 0.0f64..=1.0, y in 0.0f64..=1.0, z in 0.0f64..=1.0) {
        let dxz = tree.ultrametric_distance(x, z).unwrap();
        let dxy = tree.ultrametric_distance(x, y).unwrap();
        let dyz = tree.ultrametric_distance(y, z).unwrap();
        prop_assert!(dxz <= dxy.max(dyz) + 1e-15);
    }

    #[test]
    fn lca_is_symmetric(tree in arb_tree(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        prop_assert_eq!(tree.lca(x, y).unwrap().id, tree.lca(y, x).unwrap().id);
    }

    #[test]
    fn finest_measures_sum_to_one(tree in arb_tree()) {
        let total: Rational = tree.finest().iter().map(|&f| tree.node(f).unwrap().measure()).sum();
        prop_assert_eq!(total, Rational::new(1, 1));
    }

    #[test]
    fn ancestry_length_equals_level(tree in arb_tree()) {
        for node in tree.nodes() {
            prop_assert_eq!(tree.ancestry_chain(node.id).unwrap().len() as u32, node.level);
        }
    }

    #[test]
    fn evaluate_is_symmetric_and_in_range(g in arb_graphon(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let w = g.evaluate(x, y).unwrap();
        prop_assert_eq!(w, g.evaluate(y, x).unwrap());
        prop_assert!((0.0..=1.0).contains(&w));
    }

    #[test]
    fn nu_matches_degree_density(g in arb_graphon()) {
        for &f in g.tree().finest() {
            let nu = g.nu(f).unwrap();
            let quad = g.degree_density(f).unwrap();
            prop_assert!((nu - quad).abs() < 1e-12, "nu {} vs quadrature {}", nu, quad);
        }
    }

    #[test]
    fn interventions_never_increase_weights(
        g in arb_graphon(),
        level in 2u32..=3,
        b_small in 0.0f64..0.4,
        b_extra in 0.0f64..0.5,
    ) {
        let small = g.apply_intervention(&Intervention::GlobalAtLevel(level), b_small, 1e-3).unwrap();
        let large = g
            .apply_intervention(&Intervention::GlobalAtLevel(level), b_small + b_extra, 1e-3)
            .unwrap();
        for node in g.tree().nodes() {
            let a = small.node_weight(node.id).unwrap();
            let b = large.node_weight(node.id).unwrap();
            prop_assert!(b <= a + 1e-15);
            prop_assert!(a <= g.node_weight(node.id).unwrap() + 1e-15);
        }
    }

    #[test]
    fn targeted_interventions_monotone(g in arb_graphon(), b in 0.0f64..0.9) {
        let target = g.max_nu_node().unwrap();
        let hit = g
            .apply_intervention(&Intervention::TargetedPath { target, levels: None }, b, 1e-3)
            .unwrap();
        for node in g.tree().nodes() {
            prop_assert!(hit.node_weight(node.id).unwrap() <= g.node_weight(node.id).unwrap() + 1e-15);
        }
    }
}

#[test]
fn abc_fixture_distance_values() {
    // d(x, y) = 0.01 inside one finest interval of the A/B/C tree
    let t = fixtures::example_abc_tree();
    assert_eq!(t.ultrametric_distance(0.001, 0.05).unwrap(), 0.01);
    assert_eq!(t.ultrametric_distance(0.3, 0.9).unwrap(), 0.4);
}

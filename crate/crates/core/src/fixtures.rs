//! Named reference models shared by the experiment harness and the tests.
//!
//! * `two-block` - root splitting into two halves, densities 0.1 across and
//!   0.8 inside; the smallest fixture with a nontrivial hierarchy.
//! * `two-block-h1` - same tree with intra-block density 1 (clique atoms),
//!   used by the random-walk experiments.
//! * `three-level-h1` - three nested levels with density 1 at the finest.
//! * `example-abc` - the A/B/C tree: root -> {A, B, C}, A -> {A1, A2},
//!   B -> {B1, B2}, C -> {C1, C2, C3}, every level-3 node split in half, 14
//!   finest intervals of length 1/14, exponential kernel of scale 0.1 over
//!   heights 0.4 / 0.2 / 0.1 / 0.01.
//! * `fig9-threshold` - one-level graphon on the A/B/C first partition
//!   (masses 4/14, 4/14, 6/14) with the exponential intra structure and a
//!   tunable inter-community density; threshold p* = e^{-2} ~ 0.135.
//! * `sis-homogeneous` / `sis-heterogeneous` - random binary trees of depth
//!   7 on a 1/260 lattice (Beta(c, c) splits, c = 100 and 1.6) with the
//!   power-law level kernel (w_min 0.03, w_max 0.67, gamma 1.8).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graphon::{Graphon, Kernel, OneLevelIntra};
use crate::tree::{NodeSpec, RandomTreeParams, Rational, UltrametricTree};
use crate::{Error, Result};

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn two_block_tree() -> Arc<UltrametricTree> {
    UltrametricTree::from_spec(NodeSpec::new(r(0, 1), r(1, 1), 1.0).with_children(vec![
        NodeSpec::new(r(0, 1), r(1, 2), 0.5),
        NodeSpec::new(r(1, 2), r(1, 1), 0.5),
    ]))
    .expect("two-block tree")
}

/// `two-block`: densities 0.1 (root) / 0.8 (blocks).
pub fn two_block() -> Graphon {
    let levels = BTreeMap::from([(1, 0.1), (2, 0.8)]);
    Graphon::new(two_block_tree(), Kernel::LevelTable { levels }).expect("two-block")
}

/// `two-block-h1`: intra-block density forced to 1 in the kernel.
pub fn two_block_h1() -> Graphon {
    let levels = BTreeMap::from([(1, 0.1), (2, 1.0)]);
    Graphon::new(two_block_tree(), Kernel::LevelTable { levels }).expect("two-block-h1")
}

pub fn three_level_tree() -> Arc<UltrametricTree> {
    let leaf = |a: i64, b: i64| NodeSpec::new(r(a, 4), r(b, 4), 0.2);
    UltrametricTree::from_spec(NodeSpec::new(r(0, 1), r(1, 1), 1.0).with_children(vec![
        NodeSpec::new(r(0, 1), r(1, 2), 0.5).with_children(vec![leaf(0, 1), leaf(1, 2)]),
        NodeSpec::new(r(1, 2), r(1, 1), 0.5).with_children(vec![leaf(2, 3), leaf(3, 4)]),
    ]))
    .expect("three-level tree")
}

/// `three-level-h1`: densities 0.1 / 0.4 / 1.0 on a depth-3 binary tree.
pub fn three_level_h1() -> Graphon {
    let levels = BTreeMap::from([(1, 0.1), (2, 0.4), (3, 1.0)]);
    Graphon::new(three_level_tree(), Kernel::LevelTable { levels }).expect("three-level-h1")
}

/// Two-block tree with one constant density everywhere: a complete weighted
/// graph on the grid, handy as a known-spectrum control.
pub fn uniform_single_level(p: f64) -> Graphon {
    let levels = BTreeMap::from([(1, p), (2, p)]);
    Graphon::new(two_block_tree(), Kernel::LevelTable { levels }).expect("uniform graphon")
}

pub fn example_abc_tree() -> Arc<UltrametricTree> {
    // Levels and heights: root 0.4, A/B/C 0.2, pairs 0.1, leaves 0.01.
    let leaf_pair = |lo: i64, label: &str| {
        NodeSpec::new(r(lo, 14), r(lo + 2, 14), 0.1).labeled(label).with_children(vec![
            NodeSpec::new(r(lo, 14), r(lo + 1, 14), 0.01).labeled(format!("{label}a")),
            NodeSpec::new(r(lo + 1, 14), r(lo + 2, 14), 0.01).labeled(format!("{label}b")),
        ])
    };
    let spec = NodeSpec::new(r(0, 1), r(1, 1), 0.4).labeled("root").with_children(vec![
        NodeSpec::new(r(0, 1), r(4, 14), 0.2)
            .labeled("A")
            .with_children(vec![leaf_pair(0, "A1"), leaf_pair(2, "A2")]),
        NodeSpec::new(r(4, 14), r(8, 14), 0.2)
            .labeled("B")
            .with_children(vec![leaf_pair(4, "B1"), leaf_pair(6, "B2")]),
        NodeSpec::new(r(8, 14), r(1, 1), 0.2)
            .labeled("C")
            .with_children(vec![leaf_pair(8, "C1"), leaf_pair(10, "C2"), leaf_pair(12, "C3")]),
    ]);
    UltrametricTree::from_spec(spec).expect("example-abc tree")
}

/// `example-abc` with the exponential kernel `w(d) = exp(-d / 0.1)`.
pub fn example_abc() -> Graphon {
    Graphon::new(example_abc_tree(), Kernel::Exponential { scale: 0.1 }).expect("example-abc")
}

/// `fig9-threshold`: one-level graphon over {A, B, C} with exponential intra
/// structure and the given inter-community density.
pub fn fig9_threshold(w_inter: f64) -> Result<Graphon> {
    Graphon::one_level(
        example_abc_tree(),
        Kernel::Exponential { scale: 0.1 },
        w_inter,
        OneLevelIntra::Restriction,
    )
}

/// Detectability threshold of the fig9 fixture: `min_i w(h(I_i)) = e^{-2}`.
pub fn fig9_p_star() -> f64 {
    (-2.0f64).exp()
}

/// Power-law level kernel used by the SIS experiments.
pub fn sis_kernel() -> Kernel {
    Kernel::PowerLawLevels { w_min: 0.03, w_max: 0.67, gamma_w: 1.8, depth: 7 }
}

/// Random binary tree on the 1/260 lattice for the SIS experiments.
pub fn sis_tree(concentration: f64, seed: u64) -> Result<Arc<UltrametricTree>> {
    UltrametricTree::random_binary(&RandomTreeParams {
        depth: 7,
        concentration,
        seed,
        grid_units: 260,
    })
}

pub const SIS_HOMOGENEOUS_SEED: u64 = 23;
pub const SIS_HETEROGENEOUS_SEED: u64 = 7;

/// `sis-homogeneous`: c = 100, nearly equal splits.
pub fn sis_homogeneous() -> Graphon {
    Graphon::new(sis_tree(100.0, SIS_HOMOGENEOUS_SEED).expect("sis tree"), sis_kernel())
        .expect("sis-homogeneous")
}

/// `sis-heterogeneous`: c = 1.6, unbalanced splits with hotspots.
pub fn sis_heterogeneous() -> Graphon {
    Graphon::new(sis_tree(1.6, SIS_HETEROGENEOUS_SEED).expect("sis tree"), sis_kernel())
        .expect("sis-heterogeneous")
}

/// Grid multiplier bringing a tree's point count nearest to `target`.
pub fn k_for_target(tree: &UltrametricTree, target: u64) -> u32 {
    let n = tree.denominator_lcm().unwrap_or(u64::MAX);
    if n >= target {
        return 1;
    }
    (((target as f64) / n as f64).round() as u32).max(1)
}

/// A named fixture with its default grid multiplier.
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub graphon: Graphon,
    pub default_k: u32,
    /// Beta concentration for the random SIS trees, when applicable.
    pub concentration: Option<f64>,
}

pub fn builtin_fixtures() -> Vec<Fixture> {
    let sis_hom = sis_homogeneous();
    let sis_het = sis_heterogeneous();
    let k_hom = k_for_target(sis_hom.tree(), 260);
    let k_het = k_for_target(sis_het.tree(), 260);
    vec![
        Fixture {
            name: "two-block",
            description: "two equal communities, densities 0.1 across / 0.8 inside",
            graphon: two_block(),
            default_k: 2,
            concentration: None,
        },
        Fixture {
            name: "two-block-h1",
            description: "two equal communities with clique atoms (intra density 1)",
            graphon: two_block_h1(),
            default_k: 2,
            concentration: None,
        },
        Fixture {
            name: "three-level-h1",
            description: "three nested levels, densities 0.1 / 0.4 / 1.0",
            graphon: three_level_h1(),
            default_k: 2,
            concentration: None,
        },
        Fixture {
            name: "example-abc",
            description: "A/B/C tree, 14 finest intervals, exponential kernel exp(-d/0.1)",
            graphon: example_abc(),
            default_k: 10,
            concentration: None,
        },
        Fixture {
            name: "fig9-threshold",
            description: "one-level graphon on {A, B, C} (masses 4/14, 4/14, 6/14), p* = 0.135",
            graphon: fig9_threshold(0.08).expect("fig9 fixture"),
            default_k: 10,
            concentration: None,
        },
        Fixture {
            name: "sis-homogeneous",
            description: "random binary tree, depth 7, Beta(100, 100) splits, power-law kernel",
            graphon: sis_hom,
            default_k: k_hom,
            concentration: Some(100.0),
        },
        Fixture {
            name: "sis-heterogeneous",
            description: "random binary tree, depth 7, Beta(1.6, 1.6) splits, power-law kernel",
            graphon: sis_het,
            default_k: k_het,
            concentration: Some(1.6),
        },
    ]
}

pub fn fixture_by_name(name: &str) -> Result<Fixture> {
    builtin_fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::Config(format!("unknown fixture `{name}`")))
}

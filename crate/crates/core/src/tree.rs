//! Nested interval partitions of `[0, 1]` as a rooted ultrametric tree.
//!
//! Every node owns a half-open rational interval `[a, b)` (closed at 1 for
//! the right-most leaf chain) and a positive height that strictly decreases
//! from root to leaves. The children of a node tile its interval exactly, in
//! rational arithmetic, so level `l` intervals always partition `[0, 1]`.
//! The ultrametric distance between two points is the height of their least
//! common ancestor interval.
//!
//! Intervals are exact rationals because interval measures enter eigenvalue
//! formulas multiplicatively and must survive the LCM grid construction
//! exactly; heights are floating point because they only feed the kernel.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::{Error, Result};

/// Exact rational coordinate in `[0, 1]`.
pub type Rational = Ratio<i64>;

/// Identifier of a node inside one [`UltrametricTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One interval of the nested partition family.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// 1-based level: root is 1, the finest partition is `depth`.
    pub level: u32,
    /// Node height `h(I) > 0`, strictly smaller than the parent's height.
    pub height: f64,
    pub lo: Rational,
    pub hi: Rational,
    pub label: Option<String>,
    /// Slash-separated child-index path from the root, e.g. `root/2/0`.
    pub path: String,
}

impl TreeNode {
    /// Interval length `mu(I)` as an exact rational.
    pub fn measure(&self) -> Rational {
        self.hi - self.lo
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Label when present, index path otherwise.
    pub fn display_name(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.path)
    }

    fn contains_f64(&self, x: f64, tree_depth_right_edge: bool) -> bool {
        let lo = ratio_to_f64(self.lo);
        let hi = ratio_to_f64(self.hi);
        x >= lo && (x < hi || (tree_depth_right_edge && x >= hi))
    }
}

/// Builder description of a node; see [`UltrametricTree::from_spec`].
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub lo: Rational,
    pub hi: Rational,
    pub height: f64,
    pub label: Option<String>,
    pub children: Vec<NodeSpec>,
}

impl NodeSpec {
    pub fn new(lo: Rational, hi: Rational, height: f64) -> Self {
        NodeSpec { lo, hi, height, label: None, children: Vec::new() }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_children(mut self, children: Vec<NodeSpec>) -> Self {
        self.children = children;
        self
    }
}

/// Parameters for [`UltrametricTree::random_binary`].
#[derive(Debug, Clone)]
pub struct RandomTreeParams {
    /// Number of binary splits `L`; the tree gets `L + 1` levels and `2^L` leaves.
    pub depth: u32,
    /// Beta(c, c) concentration of the split fractions.
    pub concentration: f64,
    pub seed: u64,
    /// Interval endpoints are multiples of `1 / grid_units`; this bounds every
    /// denominator, keeping the LCM grid tractable.
    pub grid_units: u64,
}

impl RandomTreeParams {
    pub fn new(depth: u32, concentration: f64, seed: u64) -> Self {
        RandomTreeParams { depth, concentration, seed, grid_units: 10_000 }
    }
}

/// A finite family of nested partitions of `[0, 1]` with heights.
#[derive(Debug)]
pub struct UltrametricTree {
    nodes: Vec<TreeNode>,
    /// Number of levels `M` (root level 1, finest level `M`).
    depth: u32,
    /// Finest-level nodes in interval order.
    finest: Vec<NodeId>,
    /// Nodes per level, `levels[l - 1]`, each in interval order.
    levels: Vec<Vec<NodeId>>,
    /// LCM of the denominators of the finest interval lengths; `None` on overflow.
    lcm: Option<u64>,
    labels: HashMap<String, NodeId>,
}

impl UltrametricTree {
    /// Builds and validates a tree from a nested [`NodeSpec`].
    ///
    /// Checks, and reports with the offending node's path: the root spans
    /// `[0, 1]`; children tile their parent exactly with no gaps or overlaps;
    /// heights are positive and strictly decrease towards the leaves; every
    /// non-leaf has at least two children; all leaves sit on one common level.
    pub fn from_spec(spec: NodeSpec) -> Result<Arc<Self>> {
        let zero = Rational::new(0, 1);
        let one = Rational::new(1, 1);
        if spec.lo != zero || spec.hi != one {
            return Err(Error::InvalidTree {
                path: "root".into(),
                reason: format!("root interval must be [0, 1], got [{}, {})", spec.lo, spec.hi),
            });
        }

        let mut tree = UltrametricTree {
            nodes: Vec::new(),
            depth: 0,
            finest: Vec::new(),
            levels: Vec::new(),
            lcm: Some(1),
            labels: HashMap::new(),
        };
        tree.insert(&spec, None, 1, "root".to_string())?;

        let depth = tree.nodes.iter().map(|n| n.level).max().unwrap();
        for node in &tree.nodes {
            if node.is_leaf() && node.level != depth {
                return Err(Error::InvalidTree {
                    path: node.path.clone(),
                    reason: format!(
                        "leaf at level {} but the finest partition is level {depth}",
                        node.level
                    ),
                });
            }
        }
        tree.depth = depth;
        tree.levels = vec![Vec::new(); depth as usize];
        for node in &tree.nodes {
            tree.levels[(node.level - 1) as usize].push(node.id);
        }
        for level in &mut tree.levels {
            level.sort_by_key(|id| tree.nodes[id.0].lo);
        }
        tree.finest = tree.levels[(depth - 1) as usize].clone();

        let mut lcm = Some(1u64);
        for id in &tree.finest {
            let denom = *tree.nodes[id.0].measure().denom() as u64;
            lcm = lcm.and_then(|l| checked_lcm(l, denom));
        }
        tree.lcm = lcm;
        Ok(Arc::new(tree))
    }

    fn insert(
        &mut self,
        spec: &NodeSpec,
        parent: Option<NodeId>,
        level: u32,
        path: String,
    ) -> Result<NodeId> {
        if spec.lo >= spec.hi {
            return Err(Error::InvalidTree {
                path,
                reason: format!("empty interval [{}, {})", spec.lo, spec.hi),
            });
        }
        if !(spec.height > 0.0) {
            return Err(Error::InvalidTree {
                path,
                reason: format!("height {} is not positive", spec.height),
            });
        }
        if let Some(pid) = parent {
            let ph = self.nodes[pid.0].height;
            if spec.height >= ph {
                return Err(Error::InvalidTree {
                    path,
                    reason: format!("height {} does not decrease below parent height {ph}", spec.height),
                });
            }
        }
        if spec.children.len() == 1 {
            return Err(Error::InvalidTree {
                path,
                reason: "non-leaf nodes need at least 2 children".into(),
            });
        }

        let id = NodeId(self.nodes.len());
        self.nodes.push(TreeNode {
            id,
            parent,
            children: Vec::new(),
            level,
            height: spec.height,
            lo: spec.lo,
            hi: spec.hi,
            label: spec.label.clone(),
            path: path.clone(),
        });
        if let Some(label) = &spec.label {
            if self.labels.insert(label.clone(), id).is_some() {
                return Err(Error::InvalidTree {
                    path,
                    reason: format!("duplicate label `{label}`"),
                });
            }
        }

        if !spec.children.is_empty() {
            let mut cursor = spec.lo;
            for (idx, child) in spec.children.iter().enumerate() {
                let child_path = format!("{path}/{idx}");
                if child.lo != cursor {
                    return Err(Error::InvalidTree {
                        path: child_path,
                        reason: format!(
                            "children do not tile the parent: expected left endpoint {cursor}, got {}",
                            child.lo
                        ),
                    });
                }
                let cid = self.insert(child, Some(id), level + 1, child_path)?;
                self.nodes[id.0].children.push(cid);
                cursor = self.nodes[cid.0].hi;
            }
            if cursor != spec.hi {
                return Err(Error::InvalidTree {
                    path,
                    reason: format!(
                        "children do not tile the parent: cover ends at {cursor}, parent ends at {}",
                        spec.hi
                    ),
                });
            }
        }
        Ok(id)
    }

    /// Generates a random binary tree: each internal node splits with a
    /// fraction `p ~ Beta(c, c)` rounded onto a `1 / grid_units` lattice, and
    /// level-`l` nodes share the height `1 - (l - 1) / (L + 1)`. Identical
    /// parameters and seed reproduce the tree bit-exactly.
    pub fn random_binary(params: &RandomTreeParams) -> Result<Arc<Self>> {
        let RandomTreeParams { depth: l, concentration: c, seed, grid_units } = *params;
        if l < 1 {
            return Err(Error::InvalidParameter("random tree depth must be >= 1".into()));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("concentration must be > 0, got {c}")));
        }
        if l >= 63 || grid_units < (1u64 << l) {
            return Err(Error::InvalidParameter(format!(
                "grid_units {grid_units} cannot host 2^{l} leaf intervals"
            )));
        }
        let beta = Beta::new(c, c)
            .map_err(|e| Error::InvalidParameter(format!("Beta({c}, {c}): {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let heights: Vec<f64> = (1..=l + 1).map(|lv| 1.0 - (lv - 1) as f64 / (l + 1) as f64).collect();
        let root = split_units(0, grid_units, 0, l, grid_units, &heights, &beta, &mut rng);
        Self::from_spec(root)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Bounds-checked node access.
    pub fn node(&self, id: NodeId) -> Result<&TreeNode> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id.0))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    /// Finest-level nodes in interval order.
    pub fn finest(&self) -> &[NodeId] {
        &self.finest
    }

    /// Nodes of a 1-based level, in interval order.
    pub fn level_nodes(&self, level: u32) -> &[NodeId] {
        &self.levels[(level - 1) as usize]
    }

    /// LCM `N` of the denominators of the finest interval lengths.
    pub fn denominator_lcm(&self) -> Option<u64> {
        self.lcm
    }

    /// Resolves a node by label or by index path (`root/2/0`).
    pub fn find(&self, name: &str) -> Result<NodeId> {
        if let Some(id) = self.labels.get(name) {
            return Ok(*id);
        }
        self.nodes
            .iter()
            .find(|n| n.path == name)
            .map(|n| n.id)
            .ok_or_else(|| Error::NodeNotFound(name.to_string()))
    }

    /// The finest interval containing `x`.
    pub fn finest_at(&self, x: f64) -> Result<NodeId> {
        check_point(x)?;
        let mut node = self.root();
        while !node.is_leaf() {
            let next = node
                .children
                .iter()
                .map(|&c| &self.nodes[c.0])
                .find(|c| c.contains_f64(x, c.hi == Rational::new(1, 1)));
            match next {
                Some(n) => node = n,
                None => unreachable!("children tile the parent interval"),
            }
        }
        Ok(node.id)
    }

    /// Deepest node whose interval contains both points. For `x == y` this is
    /// the finest interval containing `x`. Out-of-range input is an error, not
    /// clamped.
    pub fn lca(&self, x: f64, y: f64) -> Result<&TreeNode> {
        check_point(x)?;
        check_point(y)?;
        let a = self.finest_at(x)?;
        let b = self.finest_at(y)?;
        Ok(&self.nodes[self.lca_nodes(a, b).0])
    }

    /// Least common ancestor of two nodes.
    pub fn lca_nodes(&self, a: NodeId, b: NodeId) -> NodeId {
        let (mut a, mut b) = (a, b);
        while self.nodes[a.0].level > self.nodes[b.0].level {
            a = self.nodes[a.0].parent.expect("levels above 1 have parents");
        }
        while self.nodes[b.0].level > self.nodes[a.0].level {
            b = self.nodes[b.0].parent.expect("levels above 1 have parents");
        }
        while a != b {
            a = self.nodes[a.0].parent.expect("distinct nodes meet at the root");
            b = self.nodes[b.0].parent.expect("distinct nodes meet at the root");
        }
        a
    }

    /// `d(x, y)`: zero for equal points, else the height of the LCA interval.
    /// Satisfies the strong triangle inequality `d(x, z) <= max(d(x, y), d(y, z))`.
    pub fn ultrametric_distance(&self, x: f64, y: f64) -> Result<f64> {
        if x == y {
            check_point(x)?;
            return Ok(0.0);
        }
        Ok(self.lca(x, y)?.height)
    }

    /// Chain `root = I_1 ⊃ I_2 ⊃ ... ⊃ I_n = node`, root first, both ends included.
    pub fn ancestry_chain(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let mut chain = Vec::new();
        let mut cur = Some(self.node(id)?.id);
        while let Some(c) = cur {
            chain.push(c);
            cur = self.nodes[c.0].parent;
        }
        chain.reverse();
        Ok(chain)
    }
}

fn check_point(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::PointOutOfRange(x))
    }
}

pub(crate) fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn checked_lcm(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}

#[allow(clippy::too_many_arguments)]
fn split_units(
    offset: u64,
    units: u64,
    level0: u32,
    max_depth: u32,
    grid_units: u64,
    heights: &[f64],
    beta: &Beta<f64>,
    rng: &mut ChaCha8Rng,
) -> NodeSpec {
    let lo = Rational::new(offset as i64, grid_units as i64);
    let hi = Rational::new((offset + units) as i64, grid_units as i64);
    let mut node = NodeSpec::new(lo, hi, heights[level0 as usize]);
    if level0 == max_depth {
        return node;
    }
    // Each subtree of depth d still to come needs 2^d lattice units.
    let min_units = 1u64 << (max_depth - level0 - 1);
    let p = beta.sample(rng);
    let left = ((p * units as f64).round() as u64).clamp(min_units, units - min_units);
    node.children = vec![
        split_units(offset, left, level0 + 1, max_depth, grid_units, heights, beta, rng),
        split_units(offset + left, units - left, level0 + 1, max_depth, grid_units, heights, beta, rng),
    ];
    node
}

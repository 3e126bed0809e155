//! Kernels, graphon evaluation, interventions, and degree densities.
//!
//! An ultrametric graphon is `W(x, y) = w(d(x, y))` where `d` comes from a
//! tree of nested partitions. Since `d` only takes node heights as values,
//! a kernel is evaluated per tree node; the effective connection density of
//! a node can additionally carry a multiplicative override in `(0, 1]`,
//! which is how budgeted interventions are expressed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::tree::{ratio_to_f64, NodeId, Rational, UltrametricTree};
use crate::{Error, Result};

/// Connection-probability kernel, evaluated at tree nodes.
#[derive(Debug, Clone)]
pub enum Kernel {
    /// `w(d) = exp(-d / scale)`, evaluated at the node height.
    Exponential { scale: f64 },
    /// Explicit level -> probability table (level 1 is the root).
    LevelTable { levels: BTreeMap<u32, f64> },
    /// `w = w_min + (w_max - w_min) * ((level - 1) / depth)^gamma_w`,
    /// nondecreasing with depth so connection probability grows with
    /// hierarchical proximity.
    PowerLawLevels { w_min: f64, w_max: f64, gamma_w: f64, depth: u32 },
}

impl Kernel {
    /// Validates ranges and, for tables, coverage of every level of a tree
    /// with `tree_depth` levels.
    pub fn validate(&self, tree_depth: u32) -> Result<()> {
        match self {
            Kernel::Exponential { scale } => {
                if !(*scale > 0.0) {
                    return Err(Error::InvalidKernel(format!("exponential scale {scale} must be > 0")));
                }
            }
            Kernel::LevelTable { levels } => {
                for level in 1..=tree_depth {
                    match levels.get(&level) {
                        None => {
                            return Err(Error::InvalidKernel(format!("level table missing level {level}")))
                        }
                        Some(p) if !(0.0..=1.0).contains(p) => {
                            return Err(Error::InvalidKernel(format!(
                                "level {level} probability {p} outside [0, 1]"
                            )))
                        }
                        _ => {}
                    }
                }
            }
            Kernel::PowerLawLevels { w_min, w_max, gamma_w, depth } => {
                if !(0.0..=1.0).contains(w_min) || !(0.0..=1.0).contains(w_max) || w_min > w_max {
                    return Err(Error::InvalidKernel(format!(
                        "power-law range [{w_min}, {w_max}] invalid"
                    )));
                }
                if !(*gamma_w > 0.0) {
                    return Err(Error::InvalidKernel(format!("power-law exponent {gamma_w} must be > 0")));
                }
                if *depth + 1 < tree_depth {
                    return Err(Error::InvalidKernel(format!(
                        "power-law kernel of depth {depth} used with a tree of {tree_depth} levels"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Kernel value at a node of the given level and height.
    pub fn node_value(&self, level: u32, height: f64) -> f64 {
        match self {
            Kernel::Exponential { scale } => (-height / scale).exp(),
            Kernel::LevelTable { levels } => levels[&level],
            Kernel::PowerLawLevels { w_min, w_max, gamma_w, depth } => {
                w_min + (w_max - w_min) * (((level - 1) as f64 / *depth as f64).powf(*gamma_w))
            }
        }
    }

    /// Value at distance zero, i.e. `W(x, x)`: 1 for the exponential kernel,
    /// the deepest tabulated value for level-indexed kernels.
    fn at_distance_zero(&self) -> f64 {
        match self {
            Kernel::Exponential { .. } => 1.0,
            Kernel::LevelTable { levels } => levels.values().last().copied().unwrap_or(1.0),
            Kernel::PowerLawLevels { w_max, .. } => *w_max,
        }
    }
}

/// Intra-block structure of a one-level graphon.
#[derive(Debug, Clone)]
pub enum OneLevelIntra {
    /// Inside child `I_i`, use the ambient ultrametric kernel restricted to `I_i`.
    Restriction,
    /// `W_i ≡ q_i`, one constant per root child.
    Constant(Vec<f64>),
}

/// Graphon evaluation mode.
#[derive(Debug, Clone)]
pub enum Mode {
    /// `W(x, y) = w(d(x, y))`, piecewise constant over finest-cell pairs.
    Ultrametric,
    /// One-level hierarchical graphon: arbitrary intra-block kernels on the
    /// root's children, constant `inter_prob` across blocks.
    OneLevel { inter_prob: f64, intra: OneLevelIntra },
}

/// Budget intervention strategies.
#[derive(Debug, Clone)]
pub enum Intervention {
    /// Scale every level-`l` node's density by `1 - (B + eps) / 2^(l - 1)`,
    /// splitting the budget over the communities of that level (the root,
    /// level 1, is a single community and absorbs the full budget).
    GlobalAtLevel(u32),
    /// Scale the densities of the ancestors of `target` by `1 - (B + eps)`,
    /// restricted to `levels` when given (default: all strict ancestors).
    TargetedPath { target: NodeId, levels: Option<BTreeSet<u32>> },
}

/// A kernel composed with a tree's ultrametric, plus optional per-node
/// multiplicative overrides. Immutable; interventions return new graphons.
#[derive(Debug, Clone)]
pub struct Graphon {
    tree: Arc<UltrametricTree>,
    kernel: Kernel,
    overrides: HashMap<NodeId, f64>,
    mode: Mode,
}

impl Graphon {
    pub fn new(tree: Arc<UltrametricTree>, kernel: Kernel) -> Result<Self> {
        kernel.validate(tree.depth())?;
        Ok(Graphon { tree, kernel, overrides: HashMap::new(), mode: Mode::Ultrametric })
    }

    /// One-level hierarchical graphon over the children of the root.
    pub fn one_level(
        tree: Arc<UltrametricTree>,
        kernel: Kernel,
        inter_prob: f64,
        intra: OneLevelIntra,
    ) -> Result<Self> {
        kernel.validate(tree.depth())?;
        if !(0.0..=1.0).contains(&inter_prob) {
            return Err(Error::InvalidKernel(format!("inter_prob {inter_prob} outside [0, 1]")));
        }
        if let OneLevelIntra::Constant(qs) = &intra {
            if qs.len() != tree.root().children.len() {
                return Err(Error::InvalidKernel(format!(
                    "{} intra constants for {} root children",
                    qs.len(),
                    tree.root().children.len()
                )));
            }
            if let Some(q) = qs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
                return Err(Error::InvalidKernel(format!("intra probability {q} outside [0, 1]")));
            }
        }
        Ok(Graphon {
            tree,
            kernel,
            overrides: HashMap::new(),
            mode: Mode::OneLevel { inter_prob, intra },
        })
    }

    pub fn tree(&self) -> &Arc<UltrametricTree> {
        &self.tree
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn is_ultrametric(&self) -> bool {
        matches!(self.mode, Mode::Ultrametric)
    }

    /// Effective connection density of pairs whose LCA is `node`:
    /// kernel value times accumulated overrides, clamped to `[0, 1]`.
    pub fn node_weight(&self, node: NodeId) -> Result<f64> {
        let n = self.tree.node(node)?;
        match &self.mode {
            Mode::Ultrametric => {}
            Mode::OneLevel { inter_prob, intra } => {
                if n.level == 1 {
                    return Ok(*inter_prob);
                }
                match intra {
                    OneLevelIntra::Restriction => {}
                    OneLevelIntra::Constant(qs) => {
                        let chain = self.ancestor_at_level(node, 2);
                        let idx = self
                            .tree
                            .root()
                            .children
                            .iter()
                            .position(|&c| c == chain)
                            .expect("level-2 ancestor is a root child");
                        return Ok(qs[idx]);
                    }
                }
            }
        }
        let base = self.kernel.node_value(n.level, n.height);
        let factor = self.overrides.get(&node).copied().unwrap_or(1.0);
        Ok((base * factor).clamp(0.0, 1.0))
    }

    fn ancestor_at_level(&self, node: NodeId, level: u32) -> NodeId {
        let mut cur = node;
        while self.tree.node(cur).unwrap().level > level {
            cur = self.tree.node(cur).unwrap().parent.unwrap();
        }
        cur
    }

    /// `W(x, y)` for points of `[0, 1]`. Symmetric, in `[0, 1]`; out-of-range
    /// coordinates are errors.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        if x == y {
            // d(x, x) = 0: below every node of the tree.
            self.tree.finest_at(x)?;
            return Ok(match &self.mode {
                Mode::Ultrametric => self.kernel.at_distance_zero(),
                Mode::OneLevel { intra, .. } => match intra {
                    OneLevelIntra::Restriction => self.kernel.at_distance_zero(),
                    OneLevelIntra::Constant(_) => {
                        let f = self.tree.finest_at(x)?;
                        self.node_weight(self.ancestor_at_level(f, 2))?
                    }
                },
            });
        }
        let lca = self.tree.lca(x, y)?;
        self.node_weight(lca.id)
    }

    /// `W` restricted to finest-cell pairs; `a == b` means two distinct points
    /// of the same finest interval (at distance `h(a)`).
    pub fn pair_weight(&self, a: NodeId, b: NodeId) -> Result<f64> {
        if a == b {
            return self.node_weight(a);
        }
        self.node_weight(self.tree.lca_nodes(a, b))
    }

    /// Applies a budget intervention, returning a new graphon; the original
    /// is unmodified. Repeated applications compose multiplicatively.
    pub fn apply_intervention(
        &self,
        strategy: &Intervention,
        budget: f64,
        epsilon: f64,
    ) -> Result<Graphon> {
        if !(0.0..=1.0).contains(&budget) {
            return Err(Error::InvalidParameter(format!("budget {budget} outside [0, 1]")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be > 0")));
        }
        let mut out = self.clone();
        match strategy {
            Intervention::GlobalAtLevel(level) => {
                if *level < 1 || *level > self.tree.depth() {
                    return Err(Error::InvalidParameter(format!("no level {level} in this tree")));
                }
                let factor = 1.0 - (budget + epsilon) / 2f64.powi(*level as i32 - 1);
                if factor <= 0.0 {
                    return Err(Error::InterventionBudget { factor });
                }
                for &id in self.tree.level_nodes(*level) {
                    *out.overrides.entry(id).or_insert(1.0) *= factor;
                }
            }
            Intervention::TargetedPath { target, levels } => {
                let target_node = self.tree.node(*target)?;
                let factor = 1.0 - (budget + epsilon);
                if factor <= 0.0 {
                    return Err(Error::InterventionBudget { factor });
                }
                for id in self.tree.ancestry_chain(*target)? {
                    let level = self.tree.node(id)?.level;
                    let apply = match levels {
                        Some(set) => set.contains(&level),
                        // Default: all strict ancestors of the target.
                        None => level < target_node.level,
                    };
                    if apply {
                        *out.overrides.entry(id).or_insert(1.0) *= factor;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Telescoping degree density
    /// `nu(I) = sum over the ancestry chain of mu(I_m) (w(I_m) - w(F(I_m)))`,
    /// with the father-of-root density taken as 0. For a finest interval this
    /// equals the expected degree density `int_0^1 W(x, .) dy`, `x in I`.
    pub fn nu(&self, node: NodeId) -> Result<f64> {
        if !self.is_ultrametric() {
            return Err(Error::UltrametricRequired);
        }
        let mut acc = 0.0;
        let mut parent_w = 0.0;
        for id in self.tree.ancestry_chain(node)? {
            let n = self.tree.node(id)?;
            let w = self.node_weight(id)?;
            acc += ratio_to_f64(n.measure()) * (w - parent_w);
            parent_w = w;
        }
        Ok(acc)
    }

    /// `nu` for every finest interval, in interval order.
    pub fn nu_finest(&self) -> Result<Vec<f64>> {
        self.tree.finest().iter().map(|&id| self.nu(id)).collect()
    }

    /// Mean degree density `sum_i mu(I_i) nu(I_i)` over finest intervals.
    pub fn mean_nu(&self) -> Result<f64> {
        let mut acc = 0.0;
        for &id in self.tree.finest() {
            let mu = ratio_to_f64(self.tree.node(id)?.measure());
            acc += mu * self.nu(id)?;
        }
        Ok(acc)
    }

    /// Max degree density over finest intervals.
    pub fn max_nu(&self) -> Result<f64> {
        Ok(self.nu_finest()?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Argmax of `nu` over finest intervals, leftmost on ties.
    pub fn max_nu_node(&self) -> Result<NodeId> {
        let mut best = (f64::NEG_INFINITY, self.tree.finest()[0]);
        for &id in self.tree.finest() {
            let v = self.nu(id)?;
            if v > best.0 {
                best = (v, id);
            }
        }
        Ok(best.1)
    }

    /// True when every finest interval has effective density 1 (clique atoms).
    pub fn finest_density_is_one(&self) -> Result<bool> {
        for &id in self.tree.finest() {
            if (self.node_weight(id)? - 1.0).abs() > 1e-12 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact-rational weighted degree density for a finest interval; used to
    /// cross-check `nu` against the block-sum quadrature of `W(x, .)`.
    pub fn degree_density(&self, finest: NodeId) -> Result<f64> {
        let mut acc = 0.0;
        for &other in self.tree.finest() {
            let mu: Rational = self.tree.node(other)?.measure();
            acc += ratio_to_f64(mu) * self.pair_weight(finest, other)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::NodeSpec;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn two_block_tree() -> Arc<UltrametricTree> {
        UltrametricTree::from_spec(
            NodeSpec::new(r(0, 1), r(1, 1), 1.0).with_children(vec![
                NodeSpec::new(r(0, 1), r(1, 2), 0.5),
                NodeSpec::new(r(1, 2), r(1, 1), 0.5),
            ]),
        )
        .unwrap()
    }

    fn two_block_graphon() -> Graphon {
        let table = BTreeMap::from([(1, 0.1), (2, 0.8)]);
        Graphon::new(two_block_tree(), Kernel::LevelTable { levels: table }).unwrap()
    }

    #[test]
    fn evaluate_two_block() {
        let g = two_block_graphon();
        // lca = root, table lookup oracle
        assert_eq!(g.evaluate(0.1, 0.9).unwrap(), 0.1);
        assert_eq!(g.evaluate(0.1, 0.3).unwrap(), 0.8);
        assert!(g.evaluate(0.1, 1.2).is_err());
    }

    #[test]
    fn evaluate_diag_exponential_is_one() {
        let g = Graphon::new(two_block_tree(), Kernel::Exponential { scale: 0.1 }).unwrap();
        assert_eq!(g.evaluate(0.3, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_is_symmetric() {
        let g = two_block_graphon();
        for (x, y) in [(0.05, 0.9), (0.2, 0.6), (0.7, 0.71)] {
            assert_eq!(g.evaluate(x, y).unwrap(), g.evaluate(y, x).unwrap());
        }
    }

    #[test]
    fn nu_matches_hand_values_and_degree_density() {
        let g = two_block_graphon();
        let t = g.tree().clone();
        let child = t.find("root/0").unwrap();
        // 1 * 0.1 + 0.5 * (0.8 - 0.1) = 0.45, degree-density oracle agrees
        let nu = g.nu(child).unwrap();
        assert!((nu - 0.45).abs() < 1e-15);
        assert!((nu - g.degree_density(child).unwrap()).abs() < 1e-12);
        // root: single-term chain
        assert!((g.nu(t.root().id).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn nu_uniform_kernel_telescopes() {
        let table = BTreeMap::from([(1, 0.3), (2, 0.3)]);
        let g = Graphon::new(two_block_tree(), Kernel::LevelTable { levels: table }).unwrap();
        for &f in g.tree().finest() {
            assert!((g.nu(f).unwrap() - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn global_intervention_scales_level() {
        let g = two_block_graphon();
        let root = g.tree().root().id;
        let out = g.apply_intervention(&Intervention::GlobalAtLevel(1), 0.0, 1e-3).unwrap();
        // formula substitution oracle: the root is one community, factor 1 - 1e-3
        let expect = 0.1 * (1.0 - 1e-3);
        assert!((out.node_weight(root).unwrap() - expect).abs() < 1e-15);
        // original unmodified
        assert_eq!(g.node_weight(root).unwrap(), 0.1);

        // level 2 has two communities: each keeps half the budget
        let left = g.tree().find("root/0").unwrap();
        let out2 = g.apply_intervention(&Intervention::GlobalAtLevel(2), 0.3, 1e-3).unwrap();
        let expect2 = 0.8 * (1.0 - (0.3 + 1e-3) / 2.0);
        assert!((out2.node_weight(left).unwrap() - expect2).abs() < 1e-15);
    }

    #[test]
    fn targeted_intervention_scales_path() {
        let g = two_block_graphon();
        let t = g.tree().clone();
        let target = t.find("root/0").unwrap();
        let out = g
            .apply_intervention(&Intervention::TargetedPath { target, levels: None }, 0.5, 1e-3)
            .unwrap();
        // formula substitution oracle: remainder factor 1 - 0.501 on strict ancestors
        let expect = 0.1 * (1.0 - 0.501);
        assert!((out.node_weight(t.root().id).unwrap() - expect).abs() < 1e-15);
        // the target itself is a finest interval and not scaled by default
        assert_eq!(out.node_weight(target).unwrap(), 0.8);
    }

    #[test]
    fn overbudget_is_an_error() {
        let g = two_block_graphon();
        let target = g.tree().find("root/0").unwrap();
        let res =
            g.apply_intervention(&Intervention::TargetedPath { target, levels: None }, 1.0, 1e-3);
        assert!(matches!(res, Err(Error::InterventionBudget { .. })));
    }

    #[test]
    fn interventions_compose_multiplicatively() {
        let g = two_block_graphon();
        let root = g.tree().root().id;
        let once = g.apply_intervention(&Intervention::GlobalAtLevel(1), 0.2, 1e-3).unwrap();
        let twice = once.apply_intervention(&Intervention::GlobalAtLevel(1), 0.2, 1e-3).unwrap();
        let f = 1.0 - (0.2 + 1e-3);
        assert!((twice.node_weight(root).unwrap() - 0.1 * f * f).abs() < 1e-15);
    }

    #[test]
    fn one_level_constant_intra() {
        let t = two_block_tree();
        let g = Graphon::one_level(
            t,
            Kernel::Exponential { scale: 0.1 },
            0.1,
            OneLevelIntra::Constant(vec![0.8, 0.6]),
        )
        .unwrap();
        assert_eq!(g.evaluate(0.1, 0.9).unwrap(), 0.1);
        assert_eq!(g.evaluate(0.1, 0.3).unwrap(), 0.8);
        assert_eq!(g.evaluate(0.6, 0.9).unwrap(), 0.6);
        assert!(g.nu(g.tree().root().id).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel::Exponential { scale: 0.0 }.validate(2).is_err());
        let missing = BTreeMap::from([(1, 0.1)]);
        assert!(Kernel::LevelTable { levels: missing }.validate(2).is_err());
        let out_of_range = BTreeMap::from([(1, 0.1), (2, 1.4)]);
        assert!(Kernel::LevelTable { levels: out_of_range }.validate(2).is_err());
        let pl = Kernel::PowerLawLevels { w_min: 0.03, w_max: 0.67, gamma_w: 1.8, depth: 7 };
        assert!(pl.validate(8).is_ok());
        // monotone nondecreasing in level
        let mut prev = -1.0;
        for level in 1..=8 {
            let v = pl.node_value(level, 0.5);
            assert!(v >= prev);
            prev = v;
        }
        assert!((pl.node_value(1, 0.9) - 0.03).abs() < 1e-15);
        assert!((pl.node_value(8, 0.1) - 0.67).abs() < 1e-15);
    }
}

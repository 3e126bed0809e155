//! Community detection from the sign structure of spectral projectors.
//!
//! For a node `I` with children `C_1, ..., C_m`, the empirical projector
//! `E_hat = V_hat V_hat^T` of its eigenvalue block has, for large `N_k` and
//! with high probability, positive entries for vertex pairs inside one child
//! and negative entries across children. Detection therefore labels vertices
//! by the connected components of the graph `{(i, j): E_hat_ij > zero_tol}`.
//!
//! The default tolerance is a quarter of the theoretical cross-child
//! magnitude `1/m(I)`, separating noise from signal.

use nalgebra::DMatrix;

use crate::graphon::Graphon;
use crate::sample::{build_grid, sample_random, Caps};
use crate::spectral::{closed_form_spectrum, empirical_projector, empirical_spectrum, spectral_block};
use crate::tree::NodeId;
use crate::{Error, Result};

/// Outcome of a sign-structure detection run.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// Nodes whose children form the ground truth (several when the node's
    /// eigenvalue is shared by isomorphic subtrees and the block is merged).
    pub nodes: Vec<NodeId>,
    /// Vertex index -> recovered cluster label, over the nodes' spans.
    pub labels: Vec<(usize, usize)>,
    pub n_components: usize,
    pub expected_components: usize,
    /// Vertices outside the majority component of their ground-truth child.
    pub misassigned: usize,
    /// Recovered partition equals the ground truth exactly.
    pub exact: bool,
    /// Set when the sign graph does not split into the expected number of
    /// components; labels are then best-effort.
    pub ambiguous: bool,
    /// True when the block merged several nodes' eigenvalues.
    pub merged_block: bool,
}

/// Labels the vertices covered by `child_spans` using the positive entries of
/// a projector matrix. This is the deterministic core of [`detect_children`];
/// feeding it the closed-form projector recovers the ground truth exactly.
pub fn detect_from_projector(
    e_hat: &DMatrix<f64>,
    child_spans: &[std::ops::Range<usize>],
    zero_tol: f64,
) -> (Vec<(usize, usize)>, usize, usize) {
    let verts: Vec<usize> = child_spans.iter().flat_map(|r| r.clone()).collect();
    let pos_of: std::collections::HashMap<usize, usize> =
        verts.iter().enumerate().map(|(p, &v)| (v, p)).collect();
    let mut comp = vec![usize::MAX; verts.len()];
    let mut n_components = 0;
    for start in 0..verts.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let label = n_components;
        n_components += 1;
        let mut stack = vec![start];
        comp[start] = label;
        while let Some(p) = stack.pop() {
            let vp = verts[p];
            for (q, &vq) in verts.iter().enumerate() {
                if comp[q] == usize::MAX && e_hat[(vp, vq)] > zero_tol {
                    comp[q] = label;
                    stack.push(q);
                }
            }
        }
    }

    // Best-effort misassignment count: majority component per ground-truth child.
    let mut misassigned = 0;
    for span in child_spans {
        let mut counts = vec![0usize; n_components];
        for v in span.clone() {
            counts[comp[pos_of[&v]]] += 1;
        }
        let majority = counts.iter().copied().max().unwrap_or(0);
        misassigned += span.len() - majority;
    }
    let labels = verts.iter().enumerate().map(|(p, &v)| (v, comp[p])).collect();
    (labels, n_components, misassigned)
}

/// Default sign-graph tolerance for a node spanning `m` grid points.
pub fn default_zero_tol(m: usize) -> f64 {
    1.0 / (4.0 * m as f64)
}

/// Samples a graph, takes the node's eigenvalue block of the random
/// Laplacian, and reads the children off the sign pattern of
/// `V_hat V_hat^T`. Merged blocks are detected over the union of the merged
/// nodes' children and flagged.
pub fn detect_children(
    graphon: &Graphon,
    k: u32,
    seed: u64,
    node: NodeId,
    zero_tol: Option<f64>,
    caps: &Caps,
) -> Result<DetectionResult> {
    let grid = build_grid(graphon.tree(), k, caps)?;
    let graph = sample_random(graphon, &grid, seed, false, caps)?;
    let eigen = empirical_spectrum(&graph.laplacian)?;
    detect_children_with(graphon, &grid, &eigen, node, zero_tol)
}

/// Detection on a precomputed eigensolve (drivers reuse one per `(k, seed)`).
pub fn detect_children_with(
    graphon: &Graphon,
    grid: &crate::sample::SampleGrid,
    eigen: &crate::spectral::Eigen,
    node: NodeId,
    zero_tol: Option<f64>,
) -> Result<DetectionResult> {
    let tree = graphon.tree();
    let tn = tree.node(node)?;
    if tn.children.len() < 2 {
        return Err(Error::DegenerateNode {
            node: tn.display_name().to_string(),
            count: tn.children.len(),
        });
    }
    let spectrum = closed_form_spectrum(graphon, grid)?;
    let block = spectral_block(&spectrum, node)?;
    let e_hat = empirical_projector(eigen, &block.positions);

    let mut child_spans = Vec::new();
    for &bn in &block.nodes {
        for &c in &tree.node(bn)?.children {
            child_spans.push(grid.point_range(c)?);
        }
    }
    let tol = zero_tol.unwrap_or_else(|| default_zero_tol(grid.points_in(node).unwrap_or(1)));
    let (labels, n_components, misassigned) = detect_from_projector(&e_hat, &child_spans, tol);
    let expected = child_spans.len();
    Ok(DetectionResult {
        nodes: block.nodes,
        labels,
        n_components,
        expected_components: expected,
        misassigned,
        exact: n_components == expected && misassigned == 0,
        ambiguous: n_components != expected,
        merged_block: block.merged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::spectral::closed_form_projector;

    #[test]
    fn closed_form_projector_detects_exactly() {
        // signs read straight off the closed form
        let g = fixtures::example_abc();
        let grid = build_grid(g.tree(), 2, &Caps::default()).unwrap();
        let root = g.tree().root().id;
        let e = closed_form_projector(&g, &grid, root).unwrap();
        let spans: Vec<_> = g
            .tree()
            .root()
            .children
            .iter()
            .map(|&c| grid.point_range(c).unwrap())
            .collect();
        let (labels, n_components, misassigned) =
            detect_from_projector(&e, &spans, default_zero_tol(grid.len()));
        assert_eq!(n_components, 3);
        assert_eq!(misassigned, 0);
        assert_eq!(labels.len(), grid.len());
    }

    #[test]
    fn random_detection_recovers_abc_at_moderate_size() {
        let g = fixtures::example_abc();
        let root = g.tree().root().id;
        let r = detect_children(&g, 10, 1, root, None, &Caps::default()).unwrap();
        assert_eq!(r.expected_components, 3);
        assert!(r.exact, "misassigned {} components {}", r.misassigned, r.n_components);
        assert!(!r.merged_block);
    }

    #[test]
    fn merged_block_unions_children() {
        // A and B share an eigenvalue: ground truth is their four level-3 nodes.
        let g = fixtures::example_abc();
        let a = g.tree().find("A").unwrap();
        let r = detect_children(&g, 10, 1, a, None, &Caps::default()).unwrap();
        assert!(r.merged_block);
        assert_eq!(r.expected_components, 4);
    }

    #[test]
    fn degenerate_node_is_an_error() {
        let g = fixtures::example_abc();
        let leaf = g.tree().find("A1a").unwrap();
        assert!(matches!(
            detect_children(&g, 2, 1, leaf, None, &Caps::default()),
            Err(Error::DegenerateNode { .. })
        ));
    }
}

//! Detectability threshold for one-level hierarchical graphons.
//!
//! With intra-community Laplacians `L(W_i)` on `n_i = N_k mu(I_i)` points,
//! the normalized spectral gaps `rho_i = -lambda_2(L(W_i)) / n_i` set the
//! threshold `p* = min_i rho_i`: while the inter-community density stays
//! below `p*`, the Fiedler matrix (projector of the largest nonzero
//! eigenvalue of the full Laplacian) is the orthogonal projector onto the
//! space of child-wise constant, measure-weighted zero-mean functions and
//! its sign structure reveals all communities; above `p*` it collapses into
//! a single child's block and carries no global information.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::graphon::{Graphon, Mode};
use crate::sample::{sample_deterministic, Caps, SampleGrid};
use crate::spectral::empirical_spectrum;
use crate::tree::NodeId;
use crate::{Error, Result};

/// Where the Fiedler matrix lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiedlerSupport {
    /// Support spread over all blocks: the projector onto `V_root`.
    Root,
    /// Support confined to one child's block.
    SingleChild(NodeId),
}

impl std::fmt::Display for FiedlerSupport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiedlerSupport::Root => write!(f, "root"),
            FiedlerSupport::SingleChild(id) => write!(f, "child{}", id.index()),
        }
    }
}

/// Output of [`detectability_threshold`].
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    /// `(child, rho_i)` per root child, in interval order.
    pub rho: Vec<(NodeId, f64)>,
    pub p_star: f64,
    pub inter_prob: f64,
    pub fiedler_support: FiedlerSupport,
    /// `inter_prob < p_star`.
    pub detectable: bool,
    /// The Fiedler eigenvalue of the full deterministic Laplacian.
    pub lambda2: f64,
}

fn intra_laplacian(graphon: &Graphon, grid: &SampleGrid, child: NodeId) -> Result<DMatrix<f64>> {
    let range = grid.point_range(child)?;
    let n = range.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (bi, i) in range.clone().enumerate() {
        for (bj, j) in range.clone().enumerate().skip(bi + 1) {
            let fi = grid.finest_of(i);
            let fj = grid.finest_of(j);
            let v = graphon.pair_weight(fi, fj)?;
            a[(bi, bj)] = v;
            a[(bj, bi)] = v;
        }
    }
    let mut l = a.clone();
    for i in 0..n {
        let row: f64 = (0..n).map(|j| a[(i, j)]).sum();
        l[(i, i)] = -row;
    }
    Ok(l)
}

/// Estimates each child's normalized spectral gap by a dense eigensolve of
/// its intra-block deterministic Laplacian, takes `p* = min_i rho_i`,
/// classifies the regime against the inter-community density, and checks
/// where the Fiedler matrix of the full `L_det` is supported (entries below
/// `1e-8` outside a child's block count as zero).
pub fn detectability_threshold(
    graphon: &Graphon,
    grid: &Arc<SampleGrid>,
    caps: &Caps,
) -> Result<ThresholdReport> {
    let inter_prob = match graphon.mode() {
        Mode::OneLevel { inter_prob, .. } => *inter_prob,
        Mode::Ultrametric => return Err(Error::OneLevelRequired),
    };
    let tree = graphon.tree();
    let children = tree.root().children.clone();

    let mut rho = Vec::new();
    for &child in &children {
        let n_i = grid.points_in(child)?;
        if n_i < 2 {
            return Err(Error::DegenerateNode {
                node: tree.node(child)?.display_name().to_string(),
                count: n_i,
            });
        }
        let l = intra_laplacian(graphon, grid, child)?;
        let eig = empirical_spectrum(&l)?;
        rho.push((child, -eig.values[1] / n_i as f64));
    }
    let p_star = rho.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);

    let full = sample_deterministic(graphon, grid, caps)?;
    let eig = empirical_spectrum(&full.laplacian)?;
    let lambda2 = eig.values[1];
    let group_tol = 1e-9 * (grid.len() as f64).max(1.0);
    let mut group_end = 2;
    while group_end < grid.len() && (eig.values[group_end] - lambda2).abs() <= group_tol {
        group_end += 1;
    }
    let e_f = crate::spectral::empirical_projector(&eig, &(1..group_end));

    let fiedler_support = classify_support(&e_f, grid, &children)?;
    Ok(ThresholdReport {
        rho,
        p_star,
        inter_prob,
        fiedler_support,
        detectable: inter_prob < p_star,
        lambda2,
    })
}

fn classify_support(
    e_f: &DMatrix<f64>,
    grid: &SampleGrid,
    children: &[NodeId],
) -> Result<FiedlerSupport> {
    const TOL: f64 = 1e-8;
    for &child in children {
        let range = grid.point_range(child)?;
        let mut outside: f64 = 0.0;
        let n = grid.len();
        for i in 0..n {
            for j in 0..n {
                if !(range.contains(&i) && range.contains(&j)) {
                    outside = outside.max(e_f[(i, j)].abs());
                }
            }
        }
        if outside < TOL {
            return Ok(FiedlerSupport::SingleChild(child));
        }
    }
    Ok(FiedlerSupport::Root)
}

/// Basis of `V_root`: child-wise constant functions with measure-weighted
/// zero mean, as vectors on the grid. Returns `|C(root)| - 1` independent
/// vectors.
pub fn v_root_basis(grid: &SampleGrid) -> Result<Vec<DVector<f64>>> {
    let tree = grid.tree().clone();
    let children = &tree.root().children;
    let n = grid.len();
    let mut basis = Vec::new();
    for &child in children.iter().skip(1) {
        let range = grid.point_range(child)?;
        let m_child = range.len() as f64;
        let mut v = DVector::<f64>::from_element(n, -1.0 / n as f64);
        for i in range {
            v[i] += 1.0 / m_child;
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Max residual `||L_det f + w_inter * N_k * f||_inf` over a spanning set of
/// `V_root`. An exact algebraic identity for one-level graphons, so the
/// residual is floating-point noise.
pub fn v_root_eigencheck(graphon: &Graphon, grid: &Arc<SampleGrid>, caps: &Caps) -> Result<f64> {
    let inter_prob = match graphon.mode() {
        Mode::OneLevel { inter_prob, .. } => *inter_prob,
        Mode::Ultrametric => return Err(Error::OneLevelRequired),
    };
    let full = sample_deterministic(graphon, grid, caps)?;
    let n = grid.len() as f64;
    let mut worst: f64 = 0.0;
    for f in v_root_basis(grid)? {
        let r = &full.laplacian * &f + inter_prob * n * &f;
        worst = worst.max(r.amax());
    }
    Ok(worst)
}

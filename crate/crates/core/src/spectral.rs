//! Closed-form and empirical spectra of sampled Laplacians.
//!
//! For an ultrametric graphon the deterministic Laplacian `L_det` is itself
//! an ultrametric Laplacian, so its spectrum is explicit: every tree node
//! `I` holding at least two grid points contributes the eigenvalue
//! `lambda(I) = -N_k nu(I)` with multiplicity `|C(I)| - 1` (children counted
//! as grid points for finest intervals), plus the simple eigenvalue 0 on
//! constants. The eigenprojector of `lambda(I)` is block-constant over the
//! children of `I`:
//!
//! ```text
//! E_I(x, y) = 1/m(I_j) - 1/m(I)   same child I_j,
//!           = -1/m(I)             different children,
//!           = 0                   outside I x I.
//! ```
//!
//! Eigenvalues are ordered descending with 0 first; ties are broken by node
//! level, then interval left endpoint. Pairing with empirical spectra is by
//! sorted index on both sides.

use nalgebra::DMatrix;

use crate::graphon::Graphon;
use crate::sample::{sample_random, Caps, SampleGrid, SampledGraph};
use crate::tree::NodeId;
use crate::{Error, Result};
use std::sync::Arc;

/// One closed-form eigenvalue with its node and multiplicity.
#[derive(Debug, Clone)]
pub struct SpectralEntry {
    pub node: NodeId,
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

/// The explicit spectrum of `L_det`: nonzero entries per node plus the
/// simple zero eigenvalue.
#[derive(Debug, Clone)]
pub struct ClosedFormSpectrum {
    /// Entries in descending eigenvalue order (ties: level, then left endpoint).
    pub entries: Vec<SpectralEntry>,
    /// Always 1 for connected kernels; kept explicit for the bookkeeping.
    pub zero_multiplicity: usize,
    /// Matrix dimension `N_k`.
    pub n: usize,
}

impl ClosedFormSpectrum {
    /// Full descending eigenvalue multiset, zero first.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        out.extend(std::iter::repeat_n(0.0, self.zero_multiplicity));
        for e in &self.entries {
            out.extend(std::iter::repeat_n(e.eigenvalue, e.multiplicity));
        }
        out
    }

    /// `sum lambda * multiplicity`, which must match `trace(L_det)`.
    pub fn trace(&self) -> f64 {
        self.entries.iter().map(|e| e.eigenvalue * e.multiplicity as f64).sum()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.zero_multiplicity + self.entries.iter().map(|e| e.multiplicity).sum::<usize>()
    }
}

/// Computes the closed-form spectrum on a grid. Rejects one-level graphons:
/// the per-node formula assumes `W = w(d)` everywhere.
pub fn closed_form_spectrum(graphon: &Graphon, grid: &SampleGrid) -> Result<ClosedFormSpectrum> {
    if !graphon.is_ultrametric() {
        return Err(Error::UltrametricRequired);
    }
    let tree = graphon.tree();
    let n = grid.len();
    let mut entries = Vec::new();
    for node in tree.nodes() {
        let multiplicity = if node.is_leaf() {
            grid.points_in(node.id)?.saturating_sub(1)
        } else {
            node.children.len() - 1
        };
        if multiplicity == 0 {
            continue;
        }
        entries.push(SpectralEntry {
            node: node.id,
            eigenvalue: -(n as f64) * graphon.nu(node.id)?,
            multiplicity,
        });
    }
    entries.sort_by(|a, b| {
        b.eigenvalue.partial_cmp(&a.eigenvalue).unwrap().then_with(|| {
            let na = tree.node(a.node).unwrap();
            let nb = tree.node(b.node).unwrap();
            na.level.cmp(&nb.level).then(na.lo.cmp(&nb.lo))
        })
    });
    let spectrum = ClosedFormSpectrum { entries, zero_multiplicity: 1, n };
    debug_assert_eq!(spectrum.total_multiplicity(), n);
    Ok(spectrum)
}

/// The eigenprojector `E_I` of `lambda(I)` as a dense matrix.
///
/// Internal nodes use the two-case child formula; finest intervals (whose
/// children are the single grid points) reduce to identity-minus-mean on
/// their block. Nodes with fewer than two children/points are an error.
pub fn closed_form_projector(
    graphon: &Graphon,
    grid: &SampleGrid,
    node: NodeId,
) -> Result<DMatrix<f64>> {
    let tree = graphon.tree();
    let tn = tree.node(node)?;
    let n = grid.len();
    let range = grid.point_range(node)?;
    let m_n = range.len() as f64;
    let mut e = DMatrix::<f64>::zeros(n, n);
    if tn.is_leaf() {
        if range.len() < 2 {
            return Err(Error::DegenerateNode {
                node: tn.display_name().to_string(),
                count: range.len(),
            });
        }
        for i in range.clone() {
            for j in range.clone() {
                e[(i, j)] = if i == j { 1.0 - 1.0 / m_n } else { -1.0 / m_n };
            }
        }
        return Ok(e);
    }
    if tn.children.len() < 2 {
        return Err(Error::DegenerateNode {
            node: tn.display_name().to_string(),
            count: tn.children.len(),
        });
    }
    let child_ranges: Vec<std::ops::Range<usize>> =
        tn.children.iter().map(|&c| grid.point_range(c)).collect::<Result<_>>()?;
    for (ci, ri) in child_ranges.iter().enumerate() {
        let m_i = ri.len() as f64;
        for (cj, rj) in child_ranges.iter().enumerate() {
            let v = if ci == cj { 1.0 / m_i - 1.0 / m_n } else { -1.0 / m_n };
            for i in ri.clone() {
                for j in rj.clone() {
                    e[(i, j)] = v;
                }
            }
        }
    }
    Ok(e)
}

/// Dense symmetric eigendecomposition, eigenvalues descending with aligned
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Eigensolve front end. Rejects matrices with max asymmetry above `1e-10`.
/// The backend is deterministic: identical input bytes give identical output.
pub fn empirical_spectrum(l: &DMatrix<f64>) -> Result<Eigen> {
    let n = l.nrows();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((l[(i, j)] - l[(j, i)]).abs());
        }
    }
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let se = l.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(Eigen { values, vectors })
}

/// Index block of a node's eigenvalue inside the descending deterministic
/// spectrum, with the Davis-Kahan gap. Distinct nodes sharing one eigenvalue
/// (isomorphic subtrees) are reported as a single merged block.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    /// All nodes whose closed-form eigenvalue falls in this block.
    pub nodes: Vec<NodeId>,
    /// Positions in the descending eigenvalue ordering (0 is the zero eigenvalue).
    pub positions: std::ops::Range<usize>,
    /// True when several distinct nodes share the eigenvalue.
    pub merged: bool,
    /// Normalized distance to the nearest distinct deterministic eigenvalue,
    /// `delta = gap / N_k`, computed from the deterministic spectrum only.
    pub delta: f64,
    /// The block eigenvalue.
    pub eigenvalue: f64,
}

/// Locates the spectral block of `node`.
pub fn spectral_block(spectrum: &ClosedFormSpectrum, node: NodeId) -> Result<SpectralBlock> {
    let tol = 1e-9 * (spectrum.n as f64).max(1.0);
    let target = spectrum
        .entries
        .iter()
        .find(|e| e.node == node)
        .ok_or_else(|| Error::NodeNotFound(format!("{node} has no spectral entry")))?;
    let lambda = target.eigenvalue;

    let mut start = spectrum.zero_multiplicity;
    let mut block_start = None;
    let mut block_len = 0;
    let mut nodes = Vec::new();
    let mut gap = f64::INFINITY;
    if lambda.abs() > tol {
        gap = lambda.abs(); // distance to the zero eigenvalue
    }
    for e in &spectrum.entries {
        if (e.eigenvalue - lambda).abs() <= tol {
            if block_start.is_none() {
                block_start = Some(start);
            }
            block_len += e.multiplicity;
            nodes.push(e.node);
        } else {
            gap = gap.min((e.eigenvalue - lambda).abs());
        }
        start += e.multiplicity;
    }
    let begin = block_start.expect("target entry is in the list");
    Ok(SpectralBlock {
        merged: nodes.len() > 1,
        nodes,
        positions: begin..begin + block_len,
        delta: gap / spectrum.n as f64,
        eigenvalue: lambda,
    })
}

/// Sum of the closed-form projectors of every node in a block (a single
/// `E_I` unless the block is merged).
pub fn block_projector(
    graphon: &Graphon,
    grid: &SampleGrid,
    block: &SpectralBlock,
) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let mut e = DMatrix::<f64>::zeros(n, n);
    for &node in &block.nodes {
        e += closed_form_projector(graphon, grid, node)?;
    }
    Ok(e)
}

/// `V_hat V_hat^T` over the eigenvector columns at the block's positions.
pub fn empirical_projector(eigen: &Eigen, positions: &std::ops::Range<usize>) -> DMatrix<f64> {
    let v = eigen.vectors.columns(positions.start, positions.len());
    v * v.transpose()
}

/// Max paired eigenvalue error of one `(k, seed)` cell.
#[derive(Debug, Clone)]
pub struct PairingCell {
    pub k: u32,
    pub n: usize,
    pub seed: u64,
    /// `lambda_i / N_k`, descending.
    pub det_over_n: Vec<f64>,
    /// `lambda_hat_i / N_k`, descending.
    pub rand_over_n: Vec<f64>,
    pub max_error: f64,
}

/// Samples a random Laplacian per `(k, seed)` and pairs its spectrum with
/// the closed form by descending index.
pub fn pairing_experiment(
    graphon: &Graphon,
    ks: &[u32],
    seeds: &[u64],
    caps: &Caps,
) -> Result<Vec<PairingCell>> {
    let mut cells = Vec::new();
    for &k in ks {
        let grid = crate::sample::build_grid(graphon.tree(), k, caps)?;
        let det = closed_form_spectrum(graphon, &grid)?.expanded();
        let n = grid.len();
        let det_over_n: Vec<f64> = det.iter().map(|l| l / n as f64).collect();
        for &seed in seeds {
            let graph = sample_random(graphon, &grid, seed, false, caps)?;
            let eig = empirical_spectrum(&graph.laplacian)?;
            let rand_over_n: Vec<f64> = eig.values.iter().map(|l| l / n as f64).collect();
            let max_error = det_over_n
                .iter()
                .zip(&rand_over_n)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            cells.push(PairingCell {
                k,
                n,
                seed,
                det_over_n: det_over_n.clone(),
                rand_over_n,
                max_error,
            });
        }
    }
    Ok(cells)
}

/// Median of the per-seed max errors for each `k`, plus the constant of a
/// `C * N_k^{-1/2}` fit (reported, never asserted): `(k, N_k, median, C)`.
pub fn pairing_summary(cells: &[PairingCell]) -> Vec<(u32, usize, f64, f64)> {
    let mut ks: Vec<(u32, usize)> = cells.iter().map(|c| (c.k, c.n)).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.iter()
        .map(|&(k, n)| {
            let errs: Vec<f64> = cells.iter().filter(|c| c.k == k).map(|c| c.max_error).collect();
            let med = median(errs);
            (k, n, med, med * (n as f64).sqrt())
        })
        .collect()
}

/// Subspace alignment of one node's empirical projector.
#[derive(Debug, Clone)]
pub struct ProjectorReport {
    pub node: NodeId,
    pub k: u32,
    pub n: usize,
    pub seed: u64,
    pub frobenius_error: f64,
    pub delta: f64,
    pub multiplicity: usize,
    pub merged: bool,
    /// True when picking the `m` empirical eigenvalues nearest in value to
    /// `lambda(node)` selects different indices than the sorted-position
    /// block. Selection stays index-based; this only counts the discrepancy.
    pub selection_mismatch: bool,
}

/// Compares `V_hat V_hat^T` (block selected by sorted index positions)
/// against the closed-form projector, in Frobenius norm.
pub fn projector_experiment(
    graphon: &Graphon,
    grid: &Arc<SampleGrid>,
    node: NodeId,
    seed: u64,
    caps: &Caps,
) -> Result<ProjectorReport> {
    let graph = sample_random(graphon, grid, seed, false, caps)?;
    let eigen = empirical_spectrum(&graph.laplacian)?;
    projector_report(graphon, grid, &graph, &eigen, node)
}

/// Same as [`projector_experiment`] on a precomputed sample and eigensolve,
/// so drivers can reuse one decomposition across nodes.
pub fn projector_report(
    graphon: &Graphon,
    grid: &SampleGrid,
    graph: &SampledGraph,
    eigen: &Eigen,
    node: NodeId,
) -> Result<ProjectorReport> {
    let spectrum = closed_form_spectrum(graphon, grid)?;
    let block = spectral_block(&spectrum, node)?;
    let e_det = block_projector(graphon, grid, &block)?;
    let e_hat = empirical_projector(eigen, &block.positions);
    let frobenius_error = (&e_hat - &e_det).norm();
    let seed = match graph.source {
        crate::sample::GraphSource::Random { seed, .. } => seed,
        crate::sample::GraphSource::Deterministic => 0,
    };
    Ok(ProjectorReport {
        node,
        k: grid.k(),
        n: grid.len(),
        seed,
        frobenius_error,
        delta: block.delta,
        multiplicity: block.positions.len(),
        merged: block.merged,
        selection_mismatch: nearest_value_positions(&eigen.values, block.eigenvalue, block.positions.len())
            != block.positions.clone().collect::<Vec<_>>(),
    })
}

/// Indices of the `m` eigenvalues nearest in value to `lambda` (the
/// alternative, value-based block selection), sorted ascending.
fn nearest_value_positions(values: &[f64], lambda: f64, m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        (values[a] - lambda)
            .abs()
            .partial_cmp(&(values[b] - lambda).abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut picked: Vec<usize> = order.into_iter().take(m).collect();
    picked.sort_unstable();
    picked
}

/// Median of a sample; 0 for empty input.
pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sample::{build_grid, sample_deterministic};
    use nalgebra::DVector;

    #[test]
    fn two_block_closed_form() {
        let g = fixtures::two_block();
        let grid = build_grid(g.tree(), 2, &Caps::default()).unwrap();
        let spec = closed_form_spectrum(&g, &grid).unwrap();
        let expanded = spec.expanded();
        // dense symmetric eigensolver oracle froze {0, -0.4, -1.8, -1.8}
        let expect = [0.0, -0.4, -1.8, -1.8];
        for (a, b) in expanded.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{expanded:?}");
        }
        // trace oracle: 0 - 0.4 - 1.8 - 1.8 = -4.0 = trace(L_det)
        let l = sample_deterministic(&g, &grid, &Caps::default()).unwrap().laplacian;
        let trace: f64 = (0..4).map(|i| l[(i, i)]).sum();
        assert!((spec.trace() - trace).abs() < 1e-12);
        assert!((trace + 4.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_eigensolver_two_block() {
        let g = fixtures::two_block();
        for k in [2, 5, 10] {
            let grid = build_grid(g.tree(), k, &Caps::default()).unwrap();
            let det = sample_deterministic(&g, &grid, &Caps::default()).unwrap();
            let eig = empirical_spectrum(&det.laplacian).unwrap();
            let closed = closed_form_spectrum(&g, &grid).unwrap().expanded();
            let tol = 1e-8 * grid.len() as f64;
            for (a, b) in closed.iter().zip(&eig.values) {
                assert!((a - b).abs() < tol, "k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn single_level_uniform_kernel_is_complete_graph() {
        // known complete-graph Laplacian spectrum: -np with multiplicity n-1
        let g = fixtures::uniform_single_level(0.37);
        let grid = build_grid(g.tree(), 6, &Caps::default()).unwrap();
        let n = grid.len();
        let spec = closed_form_spectrum(&g, &grid).unwrap().expanded();
        assert_eq!(spec.len(), n);
        assert_eq!(spec[0], 0.0);
        for v in &spec[1..] {
            assert!((v + n as f64 * 0.37).abs() < 1e-10);
        }
    }

    #[test]
    fn empirical_spectrum_on_diagonal_and_path() {
        let l = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -1.0, -2.0]));
        let eig = empirical_spectrum(&l).unwrap();
        assert_eq!(eig.values, vec![0.0, -1.0, -2.0]);

        let p = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let eig = empirical_spectrum(&p).unwrap();
        assert!((eig.values[0] - 0.0).abs() < 1e-12);
        assert!((eig.values[1] + 2.0).abs() < 1e-12);

        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(empirical_spectrum(&asym), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn eigen_is_orthonormal_with_small_residual() {
        let g = fixtures::example_abc();
        let grid = build_grid(g.tree(), 2, &Caps::default()).unwrap();
        let l = sample_deterministic(&g, &grid, &Caps::default()).unwrap().laplacian;
        let eig = empirical_spectrum(&l).unwrap();
        let n = grid.len();
        let gram = eig.vectors.transpose() * &eig.vectors;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() < 1e-8);
            }
        }
        let scale = l.norm();
        for i in 0..n {
            let v = eig.vectors.column(i);
            let r = (&l * v - eig.values[i] * v).norm();
            assert!(r <= 1e-6 * scale, "residual {r}");
        }
    }

    #[test]
    fn projector_formula_two_block_root() {
        let g = fixtures::two_block();
        let grid = build_grid(g.tree(), 2, &Caps::default()).unwrap();
        let e = closed_form_projector(&g, &grid, g.tree().root().id).unwrap();
        // formula substitution oracle: same-half 1/2 - 1/4, cross-half -1/4
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i < 2) == (j < 2) { 0.25 } else { -0.25 };
                assert!((e[(i, j)] - expect).abs() < 1e-15);
            }
        }
        // rank = |C(root)| - 1 = 1: eigensolver subspace oracle
        let eig = empirical_spectrum(&e).unwrap();
        let rank = eig.values.iter().filter(|v| v.abs() > 1e-9).count();
        assert_eq!(rank, 1);
    }

    #[test]
    fn projectors_resolve_identity() {
        let g = fixtures::example_abc();
        let grid = build_grid(g.tree(), 2, &Caps::default()).unwrap();
        let n = grid.len();
        let mut sum = DMatrix::<f64>::from_element(n, n, 1.0 / n as f64);
        for node in g.tree().nodes() {
            let pts = grid.points_in(node.id).unwrap();
            if (node.is_leaf() && pts < 2) || (!node.is_leaf() && node.children.len() < 2) {
                continue;
            }
            sum += closed_form_projector(&g, &grid, node.id).unwrap();
        }
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((sum[(i, j)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn block_selection_handles_isomorphic_subtrees() {
        let g = fixtures::example_abc();
        let grid = build_grid(g.tree(), 2, &Caps::default()).unwrap();
        let spec = closed_form_spectrum(&g, &grid).unwrap();
        let a = g.tree().find("A").unwrap();
        let block = spectral_block(&spec, a).unwrap();
        // A and B are isomorphic, so their eigenvalues coincide: merged block
        assert!(block.merged);
        assert_eq!(block.nodes.len(), 2);
        assert_eq!(block.positions.len(), 2);
        // root block is clean
        let root = spectral_block(&spec, g.tree().root().id).unwrap();
        assert!(!root.merged);
        assert_eq!(root.positions, 1..3);
        assert!(root.delta > 0.0);
    }

    #[test]
    fn deterministic_projector_is_recovered_exactly() {
        // w == 1: A_rand is the complete graph, so the one nonzero eigenvalue
        // block must reproduce I - 11^T / n.
        let g = fixtures::uniform_single_level(1.0);
        let grid = build_grid(g.tree(), 4, &Caps::default()).unwrap();
        let n = grid.len();
        let graph = sample_random(&g, &grid, 3, false, &Caps::default()).unwrap();
        let eig = empirical_spectrum(&graph.laplacian).unwrap();
        let e_hat = empirical_projector(&eig, &(1..n));
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 };
                assert!((e_hat[(i, j)] - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pairing_error_zero_for_constant_one_graphon() {
        let g = fixtures::uniform_single_level(1.0);
        let cells = pairing_experiment(&g, &[2, 4], &[1, 2], &Caps::default()).unwrap();
        for c in cells {
            assert!(c.max_error < 1e-10, "error {}", c.max_error);
        }
    }

    #[test]
    fn pairing_error_invariant_under_relabeling() {
        let g = fixtures::two_block();
        let grid = build_grid(g.tree(), 10, &Caps::default()).unwrap();
        let n = grid.len();
        let det = closed_form_spectrum(&g, &grid).unwrap().expanded();
        let graph = sample_random(&g, &grid, 8, false, &Caps::default()).unwrap();
        let base = empirical_spectrum(&graph.laplacian).unwrap();

        // conjugate by the reversal permutation
        let mut perm = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            perm[(i, n - 1 - i)] = 1.0;
        }
        let relabeled = &perm * &graph.laplacian * perm.transpose();
        let eig_p = empirical_spectrum(&relabeled).unwrap();

        let err = |vals: &[f64]| {
            det.iter().zip(vals).map(|(a, b)| (a - b).abs() / n as f64).fold(0.0, f64::max)
        };
        assert!((err(&base.values) - err(&eig_p.values)).abs() < 1e-9);
    }

    #[test]
    fn median_helper() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(vec![]), 0.0);
    }
}

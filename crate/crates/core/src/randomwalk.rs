//! Pseudo-inverse Laplacians and CTMC hitting/commute times.
//!
//! Two pseudo-inverse conventions are in play and both are kept explicit.
//! [`pseudo_inverse`] returns the Moore-Penrose inverse `L+` (eigenvalues
//! inverted in place, so `L L+ L = L` holds and `L+` is negative
//! semidefinite for a Laplacian). The CTMC literature works with the
//! deviation form `D = -L+`, which is positive semidefinite and what the
//! nu-weighted closed-form assembly produces; [`PseudoInverse::deviation`]
//! converts. Hitting times of the chain with generator `L / N_k` are
//!
//! ```text
//! m_ij = N_k^2 (D_jj - D_ij) = N_k^2 (L+_ij - L+_jj),
//! ```
//!
//! and commute times `C_ij = m_ij + m_ji`. Under intra-clique atoms
//! (finest density 1) the closed-form assembly
//! `sum_finest (1/nu(I)) (centered identity) + sum_internal (1/nu(I)) E_I`
//! equals `N_k * D` with no eigensolve, which is this module's central
//! oracle equivalence. In the large-graph limit `C_ij / N_k` collapses to
//! `1/nu(I(i)) + 1/nu(I(j))` with `I(.)` the finest interval of the
//! endpoint, i.e. the inverse expected degree densities; all hierarchy
//! information is lost.

use nalgebra::DMatrix;

use crate::graphon::Graphon;
use crate::rng::derive_seed;
use crate::sample::{build_grid, sample_random, Caps, SampleGrid};
use crate::spectral::{closed_form_projector, empirical_spectrum, median};
use crate::{Error, Result};

/// Moore-Penrose pseudo-inverse of a symmetric zero-row-sum matrix.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    /// The Moore-Penrose matrix `L+`.
    pub matrix: DMatrix<f64>,
    /// Eigenvalues treated as zero; 1 for a connected graph.
    pub zeroed: usize,
    pub n: usize,
}

impl PseudoInverse {
    pub fn is_connected(&self) -> bool {
        self.zeroed == 1
    }

    /// The deviation form `-L+` (positive semidefinite for Laplacians).
    pub fn deviation(&self) -> DMatrix<f64> {
        -&self.matrix
    }
}

/// Eigendecomposes `L`, inverts the eigenvalues with `|lambda|` above
/// `zero_cutoff * n`, zeroes the rest, and reconstructs. The number of
/// zeroed eigenvalues counts connected components.
pub fn pseudo_inverse(l: &DMatrix<f64>, zero_cutoff: f64) -> Result<PseudoInverse> {
    let n = l.nrows();
    let scale = l.amax().max(1.0);
    for i in 0..n {
        let row: f64 = (0..n).map(|j| l[(i, j)]).sum();
        if row.abs() > 1e-8 * scale * n as f64 {
            return Err(Error::InvalidParameter(format!(
                "row {i} of the Laplacian sums to {row}, not 0"
            )));
        }
    }
    let eig = empirical_spectrum(l)?;
    let cutoff = zero_cutoff * n as f64;
    let mut zeroed = 0;
    let inv: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| {
            if v.abs() <= cutoff {
                zeroed += 1;
                0.0
            } else {
                1.0 / v
            }
        })
        .collect();
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    for (idx, &coef) in inv.iter().enumerate() {
        if coef != 0.0 {
            let v = eig.vectors.column(idx);
            matrix += coef * v * v.transpose();
        }
    }
    Ok(PseudoInverse { matrix, zeroed, n })
}

/// Default relative zero cutoff: dense-regime spectral gaps are of order
/// `N_k`, anything this small is numerical noise.
pub const DEFAULT_ZERO_CUTOFF: f64 = 1e-8;

/// The nu-weighted assembly of `N_k (L_det)+` in deviation form, built from
/// the closed-form projectors with no eigensolve. Requires intra-clique
/// atoms (finest density 1), matching the sampling flag of
/// [`crate::sample::sample_random`].
#[derive(Debug, Clone)]
pub struct ClosedFormPseudoInverse {
    /// `sum_I (1 / nu(I)) E_I` over all nodes, finest included: equals
    /// `N_k * (-(L_det)+)`, positive semidefinite.
    pub nu_weighted: DMatrix<f64>,
    pub n: usize,
}

impl ClosedFormPseudoInverse {
    /// `N_k * (L_det)+` in Moore-Penrose convention.
    pub fn scaled_moore_penrose(&self) -> DMatrix<f64> {
        -&self.nu_weighted
    }
}

pub fn closed_form_pseudo_inverse(
    graphon: &Graphon,
    grid: &SampleGrid,
) -> Result<ClosedFormPseudoInverse> {
    if !graphon.is_ultrametric() {
        return Err(Error::UltrametricRequired);
    }
    for &f in graphon.tree().finest() {
        let w = graphon.node_weight(f)?;
        if (w - 1.0).abs() > 1e-12 {
            return Err(Error::CliqueAtomsRequired {
                node: graphon.tree().node(f)?.display_name().to_string(),
                value: w,
            });
        }
    }
    let n = grid.len();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for node in graphon.tree().nodes() {
        let multiplicity = if node.is_leaf() {
            grid.points_in(node.id)?.saturating_sub(1)
        } else {
            node.children.len() - 1
        };
        if multiplicity == 0 {
            continue;
        }
        let nu = graphon.nu(node.id)?;
        acc += closed_form_projector(graphon, grid, node.id)? / nu;
    }
    Ok(ClosedFormPseudoInverse { nu_weighted: acc, n })
}

/// Hitting and commute times of the CTMC with generator `L / N_k`.
#[derive(Debug, Clone)]
pub struct WalkTimes {
    /// `hitting[(i, j)]` is the expected time to reach `j` from `i`.
    pub hitting: DMatrix<f64>,
    /// `commute = hitting + hitting^T`.
    pub commute: DMatrix<f64>,
}

pub fn walk_times(pinv: &PseudoInverse, n_k: f64) -> Result<WalkTimes> {
    if !pinv.is_connected() {
        return Err(Error::Disconnected { zeroed: pinv.zeroed });
    }
    let n = pinv.n;
    let scale = n_k * n_k;
    let mut hitting = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                hitting[(i, j)] = scale * (pinv.matrix[(i, j)] - pinv.matrix[(j, j)]);
            }
        }
    }
    let commute = &hitting + hitting.transpose();
    Ok(WalkTimes { hitting, commute })
}

/// Hilbert-Schmidt distance of the step-kernel operators of two matrices on
/// the same grid: `||T(A) - T(B)||_HS = ||A - B||_F / N_k`.
pub fn hs_operator_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok((a - b).norm() / a.nrows() as f64)
}

/// Step-kernel view of a matrix on the uniform `N_k` grid; its
/// Hilbert-Schmidt norm is the Frobenius norm over `N_k`.
#[derive(Debug, Clone)]
pub struct StepKernel {
    pub matrix: DMatrix<f64>,
}

impl StepKernel {
    pub fn hs_norm(&self) -> f64 {
        self.matrix.norm() / self.matrix.nrows() as f64
    }

    pub fn distance(&self, other: &StepKernel) -> Result<f64> {
        hs_operator_distance(&self.matrix, &other.matrix)
    }
}

/// The continuum projector kernel `E_I(x, y)` (measures instead of counts)
/// evaluated on the grid cells. For internal nodes this equals `N_k E_I^k`
/// entry for entry, which is why the discretized operator distance vanishes
/// at every resolution.
pub fn continuum_projector(graphon: &Graphon, grid: &SampleGrid, node: crate::tree::NodeId) -> Result<StepKernel> {
    let tn = graphon.tree().node(node)?;
    if tn.is_leaf() {
        return Err(Error::DegenerateNode {
            node: tn.display_name().to_string(),
            count: 0,
        });
    }
    let e = closed_form_projector(graphon, grid, node)?;
    Ok(StepKernel { matrix: e * grid.len() as f64 })
}

/// One commute-time comparison row.
#[derive(Debug, Clone)]
pub struct CommuteRow {
    pub i: usize,
    pub j: usize,
    pub finest_i: usize,
    pub finest_j: usize,
    pub c_over_n: f64,
    /// `1/nu(I(i)) + 1/nu(I(j))` with the finest intervals of the endpoints.
    pub limit: f64,
    pub abs_error: f64,
    /// Same limit with `nu` of the father interval of each endpoint's finest
    /// interval; reported alongside for comparison.
    pub limit_father: f64,
    pub abs_error_father: f64,
}

/// Per-(k, seed) collapse measurements.
#[derive(Debug, Clone)]
pub struct CollapseCell {
    pub k: u32,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<CommuteRow>,
    pub median_error: f64,
    pub max_error: f64,
    /// Sample was disconnected and skipped.
    pub skipped: bool,
}

/// Samples graphs under intra-clique atoms, computes commute times from the
/// random Laplacian's pseudo-inverse, and compares `C_ij / N_k` against the
/// inverse-degree-density limit over `pairs` vertex pairs in distinct finest
/// intervals.
pub fn collapse_experiment(
    graphon: &Graphon,
    ks: &[u32],
    seeds: &[u64],
    pairs: usize,
    caps: &Caps,
) -> Result<Vec<CollapseCell>> {
    if !graphon.finest_density_is_one()? {
        let f = graphon.tree().finest()[0];
        return Err(Error::CliqueAtomsRequired {
            node: graphon.tree().node(f)?.display_name().to_string(),
            value: graphon.node_weight(f)?,
        });
    }
    let tree = graphon.tree();
    let nu_finest: Vec<f64> = tree.finest().iter().map(|&f| graphon.nu(f)).collect::<Result<_>>()?;
    let nu_father: Vec<f64> = tree
        .finest()
        .iter()
        .map(|&f| {
            let parent = tree.node(f)?.parent.expect("finest nodes have parents");
            graphon.nu(parent)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for &k in ks {
        let grid = build_grid(tree, k, caps)?;
        let n = grid.len();
        for &seed in seeds {
            let graph = sample_random(graphon, &grid, seed, true, caps)?;
            let pinv = pseudo_inverse(&graph.laplacian, DEFAULT_ZERO_CUTOFF)?;
            if !pinv.is_connected() {
                cells.push(CollapseCell {
                    k,
                    n,
                    seed,
                    rows: Vec::new(),
                    median_error: f64::NAN,
                    max_error: f64::NAN,
                    skipped: true,
                });
                continue;
            }
            let times = walk_times(&pinv, n as f64)?;
            let rows = sample_pairs(&grid, seed, pairs)
                .into_iter()
                .map(|(i, j)| {
                    let fi = grid.finest_ordinal(i);
                    let fj = grid.finest_ordinal(j);
                    let c_over_n = times.commute[(i, j)] / n as f64;
                    let limit = 1.0 / nu_finest[fi] + 1.0 / nu_finest[fj];
                    let limit_father = 1.0 / nu_father[fi] + 1.0 / nu_father[fj];
                    CommuteRow {
                        i,
                        j,
                        finest_i: fi,
                        finest_j: fj,
                        c_over_n,
                        limit,
                        abs_error: (c_over_n - limit).abs(),
                        limit_father,
                        abs_error_father: (c_over_n - limit_father).abs(),
                    }
                })
                .collect::<Vec<_>>();
            let errs: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
            let median_error = median(errs.clone());
            let max_error = errs.iter().copied().fold(0.0, f64::max);
            cells.push(CollapseCell { k, n, seed, rows, median_error, max_error, skipped: false });
        }
    }
    Ok(cells)
}

/// Deterministic sample of vertex pairs with distinct finest intervals.
fn sample_pairs(grid: &SampleGrid, seed: u64, want: usize) -> Vec<(usize, usize)> {
    let n = grid.len();
    let mut out = Vec::with_capacity(want);
    let mut stream = 0u64;
    while out.len() < want && stream < 100_000 {
        let a = (derive_seed(seed ^ 0x5151_5151, stream) % n as u64) as usize;
        let b = (derive_seed(seed ^ 0xA3A3_A3A3, stream) % n as u64) as usize;
        stream += 1;
        if grid.finest_of(a) != grid.finest_of(b) {
            out.push((a, b));
        }
    }
    out
}

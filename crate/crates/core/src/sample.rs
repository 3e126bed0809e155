//! The exact sampling grid and the matrices built on it.
//!
//! With `N` the LCM of the denominators of the finest interval lengths and
//! `N_k = k N`, the grid places points at `x_i = i / N_k`. Every tree
//! interval `I` then holds exactly `N_k mu(I)` points, so the empirical
//! measure of the grid agrees with Lebesgue measure on every node.
//!
//! Random adjacency draws are keyed per `(seed, i, j)` with a counter-based
//! generator (see [`crate::rng`]), so the upper triangle can be generated in
//! any order without seed races; a fixed seed reproduces the matrix
//! bit-exactly.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::graphon::Graphon;
use crate::rng::edge_uniform;
use crate::tree::{NodeId, Rational, UltrametricTree};
use crate::{Error, Result};

/// Resource caps for grid and matrix construction.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    /// Largest admissible denominator LCM `N`.
    pub lcm_cap: u64,
    /// Largest admissible matrix dimension `N_k`.
    pub dim_cap: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { lcm_cap: 100_000, dim_cap: 5_000 }
    }
}

/// The `N_k`-point uniform refinement of the finest partition.
#[derive(Debug)]
pub struct SampleGrid {
    tree: Arc<UltrametricTree>,
    k: u32,
    base_n: u64,
    n: usize,
    /// Finest interval of each grid point.
    finest_of: Vec<NodeId>,
    /// Ordinal of each point's finest interval within `tree.finest()`.
    finest_ordinal: Vec<usize>,
}

impl SampleGrid {
    pub fn tree(&self) -> &Arc<UltrametricTree> {
        &self.tree
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Denominator LCM `N`.
    pub fn base_n(&self) -> u64 {
        self.base_n
    }

    /// Number of grid points `N_k`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Exact coordinate `x_i = i / N_k`.
    pub fn point(&self, i: usize) -> Rational {
        Rational::new(i as i64, self.n as i64)
    }

    pub fn finest_of(&self, i: usize) -> NodeId {
        self.finest_of[i]
    }

    pub fn finest_ordinal(&self, i: usize) -> usize {
        self.finest_ordinal[i]
    }

    /// Contiguous index range of the grid points inside a node's interval.
    pub fn point_range(&self, node: NodeId) -> Result<std::ops::Range<usize>> {
        let n = self.tree.node(node)?;
        let lo = n.lo * Rational::new(self.n as i64, 1);
        let hi = n.hi * Rational::new(self.n as i64, 1);
        debug_assert!(lo.is_integer() && hi.is_integer());
        Ok(lo.to_integer() as usize..hi.to_integer() as usize)
    }

    /// Number of grid points in a node's interval, `m(I) = N_k mu(I)`.
    pub fn points_in(&self, node: NodeId) -> Result<usize> {
        Ok(self.point_range(node)?.len())
    }
}

/// Builds the grid for multiplier `k >= 1`.
pub fn build_grid(tree: &Arc<UltrametricTree>, k: u32, caps: &Caps) -> Result<Arc<SampleGrid>> {
    if k < 1 {
        return Err(Error::InvalidParameter("grid multiplier k must be >= 1".into()));
    }
    let lcm = tree.denominator_lcm().unwrap_or(u64::MAX);
    if lcm > caps.lcm_cap {
        return Err(Error::GridTooFine { lcm, cap: caps.lcm_cap });
    }
    let n = (lcm * k as u64) as usize;
    let mut finest_of = vec![NodeId(usize::MAX); n];
    let mut finest_ordinal = vec![usize::MAX; n];
    let mut grid = SampleGrid {
        tree: tree.clone(),
        k,
        base_n: lcm,
        n,
        finest_of: Vec::new(),
        finest_ordinal: Vec::new(),
    };
    for (ord, &f) in tree.finest().iter().enumerate() {
        for i in grid.point_range(f)? {
            finest_of[i] = f;
            finest_ordinal[i] = ord;
        }
    }
    debug_assert!(finest_ordinal.iter().all(|&o| o != usize::MAX));
    grid.finest_of = finest_of;
    grid.finest_ordinal = finest_ordinal;
    Ok(Arc::new(grid))
}

/// How a sampled graph was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSource {
    Deterministic,
    Random { seed: u64, clique_atoms: bool },
}

/// A graph on the grid: adjacency with zero diagonal and its Laplacian `A - D`.
#[derive(Debug)]
pub struct SampledGraph {
    pub grid: Arc<SampleGrid>,
    pub adjacency: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub source: GraphSource,
}

/// Per-vertex degrees; exact integers for random graphs, reals for
/// deterministic ones.
#[derive(Debug, Clone)]
pub struct DegreeStats {
    pub degrees: Vec<f64>,
    pub max_degree: f64,
    pub mean_degree: f64,
}

/// Block values of `W` over finest-cell pairs: `weights[a][b]` is the density
/// between cells `a` and `b` (`a == b` meaning distinct points of one cell).
fn finest_block_weights(graphon: &Graphon) -> Result<Vec<Vec<f64>>> {
    let finest = graphon.tree().finest();
    let mut w = vec![vec![0.0; finest.len()]; finest.len()];
    for (a, &fa) in finest.iter().enumerate() {
        for (b, &fb) in finest.iter().enumerate().skip(a) {
            let v = graphon.pair_weight(fa, fb)?;
            w[a][b] = v;
            w[b][a] = v;
        }
    }
    Ok(w)
}

fn laplacian_from_adjacency(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut l = a.clone();
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            row_sum += a[(i, j)];
        }
        l[(i, i)] = a[(i, i)] - row_sum;
    }
    l
}

fn check_dim(n: usize, caps: &Caps) -> Result<()> {
    if n > caps.dim_cap {
        return Err(Error::DimensionCap { n, cap: caps.dim_cap });
    }
    Ok(())
}

/// `A_det[i][j] = W(x_i, x_j)` off the diagonal, zero on it.
pub fn sample_deterministic(
    graphon: &Graphon,
    grid: &Arc<SampleGrid>,
    caps: &Caps,
) -> Result<SampledGraph> {
    let n = grid.len();
    check_dim(n, caps)?;
    let w = finest_block_weights(graphon)?;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let fi = grid.finest_ordinal(i);
        for j in (i + 1)..n {
            let v = w[fi][grid.finest_ordinal(j)];
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let laplacian = laplacian_from_adjacency(&a);
    Ok(SampledGraph { grid: grid.clone(), adjacency: a, laplacian, source: GraphSource::Deterministic })
}

/// Bernoulli adjacency: upper-triangle entries drawn independently with
/// `P(xi_ij = 1) = W(x_i, x_j)`, mirrored, zero diagonal. With `clique_atoms`
/// set, entries inside one finest cell are forced to 1 (clique atoms) at
/// sampling time; the kernel is not mutated.
pub fn sample_random(
    graphon: &Graphon,
    grid: &Arc<SampleGrid>,
    seed: u64,
    clique_atoms: bool,
    caps: &Caps,
) -> Result<SampledGraph> {
    let n = grid.len();
    check_dim(n, caps)?;
    let w = finest_block_weights(graphon)?;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let fi = grid.finest_ordinal(i);
        for j in (i + 1)..n {
            let fj = grid.finest_ordinal(j);
            let edge = if clique_atoms && fi == fj {
                true
            } else {
                edge_uniform(seed, i, j) < w[fi][fj]
            };
            if edge {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    let laplacian = laplacian_from_adjacency(&a);
    Ok(SampledGraph {
        grid: grid.clone(),
        adjacency: a,
        laplacian,
        source: GraphSource::Random { seed, clique_atoms },
    })
}

pub fn degree_stats(graph: &SampledGraph) -> DegreeStats {
    let n = graph.adjacency.nrows();
    let degrees: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| graph.adjacency[(i, j)]).sum())
        .collect();
    let max_degree = degrees.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_degree = degrees.iter().sum::<f64>() / n as f64;
    DegreeStats { degrees, max_degree, mean_degree }
}

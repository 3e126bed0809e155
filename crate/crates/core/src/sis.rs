//! SIS dynamics on sampled networks and intervention sweeps.
//!
//! The mean-field SIS system on an adjacency matrix `A` is
//!
//! ```text
//! dx_i/dt = -delta x_i + beta (1 - x_i) sum_j a_ij x_j,
//! ```
//!
//! whose disease-free state is globally stable when
//! `lambda_1(A) beta / delta < 1`. Sweeps are parameterized by
//! `tau = N_k beta / delta` with `delta = 1`, so the threshold compares
//! `tau` against `N_k / lambda_1`, and the degree-density bounds give the
//! critical curves `tau_max_crit = 1 / max_i nu(I_i)` and
//! `tau_avg_crit = 1 / sum_i mu(I_i) nu(I_i)`.

use nalgebra::{DMatrix, DVector};

use crate::graphon::{Graphon, Intervention};
use crate::rng::derive_seed;
use crate::sample::{build_grid, degree_stats, sample_random, Caps, SampledGraph};
use crate::tree::NodeId;
use crate::{Error, Result};

/// SIS model instance on a fixed network.
#[derive(Debug, Clone)]
pub struct SisModel {
    pub beta: f64,
    /// Recovery rate (named to avoid the spectral-gap delta).
    pub delta_rec: f64,
    pub adjacency: DMatrix<f64>,
    pub x0: DVector<f64>,
}

impl SisModel {
    pub fn new(beta: f64, delta_rec: f64, adjacency: DMatrix<f64>, x0: DVector<f64>) -> Result<Self> {
        if !(beta > 0.0) || !(delta_rec > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rates must be positive: beta {beta}, delta {delta_rec}"
            )));
        }
        if x0.len() != adjacency.nrows() {
            return Err(Error::InvalidParameter("x0 length != matrix dimension".into()));
        }
        if x0.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("x0 outside [0, 1]^N".into()));
        }
        Ok(SisModel { beta, delta_rec, adjacency, x0 })
    }

    fn derivative(&self, x: &DVector<f64>) -> DVector<f64> {
        let ax = &self.adjacency * x;
        DVector::from_fn(x.len(), |i, _| {
            -self.delta_rec * x[i] + self.beta * (1.0 - x[i]) * ax[i]
        })
    }
}

/// Result of [`integrate_sis`].
#[derive(Debug, Clone)]
pub struct SisIntegration {
    pub final_state: DVector<f64>,
    /// Step halvings performed until two refinements agreed.
    pub halvings: u32,
    pub dt: f64,
    /// Times the integrator overstepped `[0, 1]` and the state was clipped.
    pub clipped: usize,
}

fn rk4_run(model: &SisModel, t_end: f64, steps: usize) -> (DVector<f64>, usize) {
    let dt = t_end / steps as f64;
    let mut x = model.x0.clone();
    let mut clipped = 0;
    for _ in 0..steps {
        let k1 = model.derivative(&x);
        let k2 = model.derivative(&(&x + (dt / 2.0) * &k1));
        let k3 = model.derivative(&(&x + (dt / 2.0) * &k2));
        let k4 = model.derivative(&(&x + dt * &k3));
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        for v in x.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped += 1;
            } else if *v > 1.0 {
                *v = 1.0;
                clipped += 1;
            }
        }
    }
    (x, clipped)
}

/// Classic fourth-order integration with step halving until two successive
/// refinements agree to `1e-6` in sup norm at `t_end`; the state is clipped
/// to `[0, 1]` (with the violations counted) if the integrator oversteps.
pub fn integrate_sis(model: &SisModel, t_end: f64) -> Result<SisIntegration> {
    const MAX_HALVINGS: u32 = 12;
    let mut steps = 64usize.max((t_end * 4.0).ceil() as usize);
    let (mut coarse, mut clipped) = rk4_run(model, t_end, steps);
    for halvings in 0..=MAX_HALVINGS {
        steps *= 2;
        let (fine, c) = rk4_run(model, t_end, steps);
        let diff = (&fine - &coarse).amax();
        if diff < 1e-6 {
            return Ok(SisIntegration {
                final_state: fine,
                halvings,
                dt: t_end / steps as f64,
                clipped: clipped + c,
            });
        }
        coarse = fine;
        clipped = c;
    }
    Err(Error::NonConvergent { what: "SIS step-halving refinement", limit: MAX_HALVINGS as usize })
}

/// Mean prevalence along a fixed-step trajectory, for plotting.
pub fn sis_trajectory(model: &SisModel, t_end: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    let samples = samples.max(2);
    let steps_per = 8;
    let dt = t_end / (samples * steps_per) as f64;
    let mut x = model.x0.clone();
    let mut out = vec![(0.0, x.mean())];
    for s in 1..=samples {
        for _ in 0..steps_per {
            let k1 = model.derivative(&x);
            let k2 = model.derivative(&(&x + (dt / 2.0) * &k1));
            let k3 = model.derivative(&(&x + (dt / 2.0) * &k2));
            let k4 = model.derivative(&(&x + dt * &k3));
            x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            for v in x.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        }
        out.push((s as f64 * steps_per as f64 * dt, x.mean()));
    }
    Ok(out)
}

/// Largest eigenvalue of a symmetric nonnegative matrix by power iteration
/// with Rayleigh quotients; deterministic constant starting vector.
pub fn power_iteration(a: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let mut w = a * &v;
        let norm = w.norm();
        if norm < 1e-300 {
            return Ok(0.0);
        }
        w /= norm;
        let next = w.dot(&(a * &w));
        let done = (next - lambda).abs() <= tol * next.abs().max(1.0);
        lambda = next;
        v = w;
        if done {
            return Ok(lambda);
        }
    }
    Err(Error::NonConvergent { what: "power iteration", limit: max_iter })
}

/// Equilibrium mean prevalence `rho_inf`.
///
/// Returns 0 outright in the subcritical regime
/// `lambda_1(A) beta / delta < 1`; otherwise iterates the equilibrium
/// rearrangement `x <- beta A x / (delta + beta A x)` from `x = 0.5` until
/// the sup change drops below `tol`, and returns the mean of the fixed
/// point.
pub fn equilibrium_prevalence(model: &SisModel, tol: f64) -> Result<f64> {
    let lambda1 = power_iteration(&model.adjacency, 1e-12, 100_000)?;
    if lambda1 * model.beta / model.delta_rec < 1.0 {
        return Ok(0.0);
    }
    let n = model.adjacency.nrows();
    let mut x = DVector::from_element(n, 0.5);
    const LIMIT: usize = 100_000;
    for _ in 0..LIMIT {
        let ax = &model.adjacency * &x;
        let next = DVector::from_fn(n, |i, _| {
            let drive = model.beta * ax[i];
            drive / (model.delta_rec + drive)
        });
        let change = (&next - &x).amax();
        x = next;
        if change < tol {
            return Ok(x.mean());
        }
    }
    Err(Error::NonConvergent { what: "SIS fixed point", limit: LIMIT })
}

/// Degree-density stability report for one sampled graph.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// `sum_i mu(I_i) nu(I_i)`: the mean degree density.
    pub sum_mu_nu: f64,
    /// `max_i nu(I_i)`.
    pub max_nu: f64,
    /// `lambda_1(A)` of the sampled adjacency.
    pub lambda1: f64,
    pub d_avg: f64,
    pub d_max: f64,
    /// `sum_mu_nu > (delta/beta)/N_k + eta`: endemic regime guaranteed.
    pub endemic_sufficient: bool,
    /// `(delta/beta)/N_k > max_nu + eta`: disease-free regime guaranteed.
    pub disease_free_sufficient: bool,
}

/// Evaluates both sufficient conditions of the degree-density stability
/// dichotomy with margin `eta`, together with the bracket
/// `d_avg <= lambda_1 <= d_max`.
pub fn stability_bounds(
    graphon: &Graphon,
    graph: &SampledGraph,
    beta: f64,
    delta_rec: f64,
    eta: f64,
) -> Result<StabilityReport> {
    let n = graph.adjacency.nrows() as f64;
    let sum_mu_nu = graphon.mean_nu()?;
    let max_nu = graphon.max_nu()?;
    let lambda1 = power_iteration(&graph.adjacency, 1e-12, 100_000)?;
    let stats = degree_stats(graph);
    let ratio = delta_rec / beta / n;
    Ok(StabilityReport {
        sum_mu_nu,
        max_nu,
        lambda1,
        d_avg: stats.mean_degree,
        d_max: stats.max_degree,
        endemic_sufficient: sum_mu_nu > ratio + eta,
        disease_free_sufficient: ratio > max_nu + eta,
    })
}

/// The finest interval with the largest degree density, leftmost on ties.
pub fn find_max_community(graphon: &Graphon) -> Result<NodeId> {
    graphon.max_nu_node()
}

/// Intervention strategy of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Budget spread over all communities of each level in the level set.
    Global,
    /// Budget concentrated on the ancestors of the max-density community.
    Targeted,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyKind::Global => write!(f, "global"),
            StrategyKind::Targeted => write!(f, "targeted"),
        }
    }
}

/// One `(seed, tau, budget)` cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub seed: u64,
    pub tau: f64,
    pub budget: f64,
    pub rho_inf: f64,
    pub lambda1: f64,
}

/// Critical curves of the intervened graphon, per budget.
#[derive(Debug, Clone)]
pub struct CritCurve {
    pub budget: f64,
    pub tau_max_crit: f64,
    pub tau_avg_crit: f64,
}

/// Full sweep output in canonical `(seed, tau, budget)` order.
#[derive(Debug, Clone)]
pub struct SisSweepGrid {
    pub strategy: StrategyKind,
    pub level_set: Vec<u32>,
    pub taus: Vec<f64>,
    pub budgets: Vec<f64>,
    pub cells: Vec<SweepCell>,
    pub crit_curves: Vec<CritCurve>,
}

impl SisSweepGrid {
    /// Number of cells below the extinction tolerance.
    pub fn disease_free_count(&self, extinction_tol: f64) -> usize {
        self.cells.iter().filter(|c| c.rho_inf < extinction_tol).count()
    }
}

/// Sweep parameters; `epsilon` is the intervention floor and `fp_tol` the
/// fixed-point tolerance of the equilibrium solver.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub strategy: StrategyKind,
    pub level_set: Vec<u32>,
    pub taus: Vec<f64>,
    pub budgets: Vec<f64>,
    pub k: u32,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub fp_tol: f64,
}

impl SweepConfig {
    pub fn new(strategy: StrategyKind, level_set: Vec<u32>) -> Self {
        SweepConfig {
            strategy,
            level_set,
            taus: (4..=20).map(|t| t as f64).collect(),
            budgets: (0..=20).map(|b| b as f64 / 20.0).collect(),
            k: 1,
            seeds: vec![1],
            epsilon: 1e-3,
            fp_tol: 1e-8,
        }
    }
}

fn intervened(base: &Graphon, cfg: &SweepConfig, budget: f64) -> Result<Graphon> {
    match cfg.strategy {
        StrategyKind::Global => {
            let mut g = base.clone();
            for &level in &cfg.level_set {
                g = g.apply_intervention(&Intervention::GlobalAtLevel(level), budget, cfg.epsilon)?;
            }
            Ok(g)
        }
        StrategyKind::Targeted => {
            let target = find_max_community(base)?;
            base.apply_intervention(
                &Intervention::TargetedPath {
                    target,
                    levels: Some(cfg.level_set.iter().copied().collect()),
                },
                budget,
                cfg.epsilon,
            )
        }
    }
}

/// Runs the `rho_inf(tau, B)` sweep. Per `(tau row, seed)` one sampling seed
/// is derived and reused across the whole budget axis, so the edge
/// indicators are coupled and the intervention effect is isolated from
/// sampling noise; `rho_inf` is then nonincreasing in `B` and nondecreasing
/// in `tau` cell by cell.
pub fn intervention_sweep(
    base: &Graphon,
    cfg: &SweepConfig,
    caps: &Caps,
) -> Result<SisSweepGrid> {
    if cfg.taus.is_empty() || cfg.budgets.is_empty() {
        return Err(Error::InvalidParameter("tau and budget grids must be nonempty".into()));
    }
    let grid = build_grid(base.tree(), cfg.k, caps)?;
    let n = grid.len();
    let mut cells = Vec::new();
    let mut crit_curves = Vec::new();
    for &budget in &cfg.budgets {
        let g_b = intervened(base, cfg, budget)?;
        crit_curves.push(CritCurve {
            budget,
            tau_max_crit: 1.0 / g_b.max_nu()?,
            tau_avg_crit: 1.0 / g_b.mean_nu()?,
        });
        for &seed in &cfg.seeds {
            for (ti, &tau) in cfg.taus.iter().enumerate() {
                let cell_seed = derive_seed(seed, ti as u64);
                let graph = sample_random(&g_b, &grid, cell_seed, false, caps)?;
                let beta = tau / n as f64;
                let lambda1 = power_iteration(&graph.adjacency, 1e-12, 100_000)?;
                let model = SisModel::new(beta, 1.0, graph.adjacency, DVector::from_element(n, 0.5))?;
                let rho_inf = equilibrium_prevalence(&model, cfg.fp_tol)?;
                cells.push(SweepCell { seed, tau, budget, rho_inf, lambda1 });
            }
        }
    }
    cells.sort_by(|a, b| {
        (a.seed, a.tau, a.budget)
            .partial_cmp(&(b.seed, b.tau, b.budget))
            .unwrap()
    });
    Ok(SisSweepGrid {
        strategy: cfg.strategy,
        level_set: cfg.level_set.clone(),
        taus: cfg.taus.clone(),
        budgets: cfg.budgets.clone(),
        cells,
        crit_curves,
    })
}

//! Per-experiment drivers: produce CSV bytes in memory.
//!
//! Every driver returns the complete list of `(file name, contents)` pairs;
//! nothing touches the filesystem until the whole experiment has succeeded,
//! so a failing run leaves no partial CSV behind. Cells are computed in
//! parallel where independent (`RAYON_NUM_THREADS` bounds the pool) and the
//! rows are emitted in a canonical order, so identical configs produce
//! byte-identical files.

use std::fmt::Write as _;

use rayon::prelude::*;
use ultragraphon::detect::detect_children_with;
use ultragraphon::graphon::{Graphon, Mode, OneLevelIntra};
use ultragraphon::randomwalk::collapse_experiment;
use ultragraphon::sample::{build_grid, sample_deterministic, sample_random, Caps};
use ultragraphon::sis::{intervention_sweep, StrategyKind, SweepConfig};
use ultragraphon::spectral::{
    closed_form_spectrum, empirical_spectrum, projector_report,
};
use ultragraphon::threshold::detectability_threshold;
use ultragraphon::tree::NodeId;

use crate::config::{fmt_f64, ExperimentConfig, ResolvedModel};
use crate::AppError;

pub type OutFiles = Vec<(String, String)>;

fn resolve_nodes(graphon: &Graphon, names: &[String]) -> Result<Vec<(String, NodeId)>, AppError> {
    names
        .iter()
        .map(|n| Ok((n.clone(), graphon.tree().find(n).map_err(AppError::from_core)?)))
        .collect()
}

pub fn spectrum(model: &ResolvedModel, cfg: &ExperimentConfig) -> Result<OutFiles, AppError> {
    let caps = Caps::default();
    let g = &model.graphon;
    let mut files = Vec::new();
    let mut csv = String::from("k,N_k,seed,index,lambda_det_over_Nk,lambda_rand_over_Nk,abs_error\n");
    for &k in &cfg.k {
        let grid = build_grid(g.tree(), k, &caps).map_err(AppError::from_core)?;
        let n = grid.len();
        let det: Vec<f64> = closed_form_spectrum(g, &grid)
            .map_err(AppError::from_core)?
            .expanded()
            .iter()
            .map(|l| l / n as f64)
            .collect();
        let per_seed: Vec<Result<(u64, Vec<f64>), AppError>> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let graph = sample_random(g, &grid, seed, false, &caps).map_err(AppError::from_core)?;
                let eig = empirical_spectrum(&graph.laplacian).map_err(AppError::from_core)?;
                Ok((seed, eig.values.iter().map(|l| l / n as f64).collect()))
            })
            .collect();
        for cell in per_seed {
            let (seed, rand) = cell?;
            for (idx, (d, r)) in det.iter().zip(&rand).enumerate() {
                writeln!(
                    csv,
                    "{k},{n},{seed},{idx},{},{},{}",
                    fmt_f64(*d),
                    fmt_f64(*r),
                    fmt_f64((d - r).abs())
                )
                .unwrap();
            }
        }
        if let Some(mode) = cfg.params.export_adjacency.as_deref() {
            export_adjacency(g, &grid, &cfg.seeds, mode, &mut files)?;
        }
    }
    files.push(("spectra.csv".into(), csv));
    Ok(files)
}

fn export_adjacency(
    g: &Graphon,
    grid: &std::sync::Arc<ultragraphon::sample::SampleGrid>,
    seeds: &[u64],
    mode: &str,
    files: &mut OutFiles,
) -> Result<(), AppError> {
    let caps = Caps::default();
    let k = grid.k();
    let det = sample_deterministic(g, grid, &caps).map_err(AppError::from_core)?;
    files.push((format!("adjacency_det_k{k}.csv"), matrix_csv(&det.adjacency, mode)?));
    for &seed in seeds {
        let rand = sample_random(g, grid, seed, false, &caps).map_err(AppError::from_core)?;
        files.push((format!("adjacency_k{k}_seed{seed}.csv"), matrix_csv(&rand.adjacency, mode)?));
    }
    Ok(())
}

fn matrix_csv(a: &nalgebra::DMatrix<f64>, mode: &str) -> Result<String, AppError> {
    let mut out = String::new();
    match mode {
        "triples" => {
            out.push_str("i,j,value\n");
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    if a[(i, j)] != 0.0 {
                        writeln!(out, "{i},{j},{}", fmt_f64(a[(i, j)])).unwrap();
                    }
                }
            }
        }
        "dense" => {
            for i in 0..a.nrows() {
                let row: Vec<String> = (0..a.ncols()).map(|j| fmt_f64(a[(i, j)])).collect();
                writeln!(out, "{}", row.join(",")).unwrap();
            }
        }
        other => {
            return Err(AppError::Config(format!(
                "export_adjacency must be `triples` or `dense`, got `{other}`"
            )))
        }
    }
    Ok(out)
}

pub fn projectors(model: &ResolvedModel, cfg: &ExperimentConfig) -> Result<OutFiles, AppError> {
    let caps = Caps::default();
    let g = &model.graphon;
    let nodes = resolve_nodes(g, &cfg.params.nodes)?;
    let gamma = cfg.params.gamma;
    let mut csv = String::from("k,seed,node,frobenius_error,delta,bound\n");
    let mut selection_mismatches = 0usize;
    for &k in &cfg.k {
        let grid = build_grid(g.tree(), k, &caps).map_err(AppError::from_core)?;
        let rows: Vec<Result<(Vec<String>, usize), AppError>> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let graph = sample_random(g, &grid, seed, false, &caps).map_err(AppError::from_core)?;
                let eig = empirical_spectrum(&graph.laplacian).map_err(AppError::from_core)?;
                let mut out = Vec::new();
                let mut mismatches = 0;
                for (name, node) in &nodes {
                    let rep = projector_report(g, &grid, &graph, &eig, *node)
                        .map_err(AppError::from_core)?;
                    let bound = 2.0 * 2f64.sqrt() * rep.multiplicity as f64 / rep.delta
                        * (rep.n as f64).powf(gamma - 0.5);
                    mismatches += rep.selection_mismatch as usize;
                    out.push(format!(
                        "{k},{seed},{name},{},{},{}",
                        fmt_f64(rep.frobenius_error),
                        fmt_f64(rep.delta),
                        fmt_f64(bound)
                    ));
                }
                Ok((out, mismatches))
            })
            .collect();
        for r in rows {
            let (lines, mismatches) = r?;
            selection_mismatches += mismatches;
            for line in lines {
                csv.push_str(&line);
                csv.push('\n');
            }
        }
    }
    if selection_mismatches > 0 {
        eprintln!(
            "projectors: index-based and nearest-value block selection disagreed in {selection_mismatches} cell(s)"
        );
    }
    Ok(vec![("projectors.csv".into(), csv)])
}

pub fn detect(model: &ResolvedModel, cfg: &ExperimentConfig) -> Result<OutFiles, AppError> {
    let caps = Caps::default();
    let g = &model.graphon;
    let nodes = resolve_nodes(g, &cfg.params.nodes)?;
    let mut csv = String::from("k,seed,node,n_components,misassigned,flag\n");
    for &k in &cfg.k {
        let grid = build_grid(g.tree(), k, &caps).map_err(AppError::from_core)?;
        let rows: Vec<Result<Vec<String>, AppError>> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let graph = sample_random(g, &grid, seed, false, &caps).map_err(AppError::from_core)?;
                let eig = empirical_spectrum(&graph.laplacian).map_err(AppError::from_core)?;
                let mut out = Vec::new();
                for (name, node) in &nodes {
                    let r = detect_children_with(g, &grid, &eig, *node, cfg.params.zero_tol)
                        .map_err(AppError::from_core)?;
                    let flag = match (r.ambiguous, r.merged_block) {
                        (false, false) => "ok",
                        (true, false) => "ambiguous",
                        (false, true) => "merged",
                        (true, true) => "ambiguous+merged",
                    };
                    out.push(format!(
                        "{k},{seed},{name},{},{},{flag}",
                        r.n_components, r.misassigned
                    ));
                }
                Ok(out)
            })
            .collect();
        for r in rows {
            for line in r? {
                csv.push_str(&line);
                csv.push('\n');
            }
        }
    }
    Ok(vec![("detection.csv".into(), csv)])
}

pub fn threshold(model: &ResolvedModel, cfg: &ExperimentConfig) -> Result<OutFiles, AppError> {
    let caps = Caps::default();
    if cfg.params.w_inter.is_empty() {
        return Err(AppError::Config("threshold needs a nonempty `w_inter` list".into()));
    }
    let g = &model.graphon;
    // Rebuild the one-level graphon at each swept inter-community density,
    // keeping the intra structure of the resolved model.
    let (tree, kernel) = (g.tree().clone(), g.kernel().clone());
    let intra = match g.mode() {
        Mode::OneLevel { intra, .. } => intra.clone(),
        Mode::Ultrametric => OneLevelIntra::Restriction,
    };
    let k = cfg.k[0];
    let grid = build_grid(&tree, k, &caps).map_err(AppError::from_core)?;
    let mut csv = String::from("w_inter,p_star,regime,fiedler_support\n");
    let rows: Vec<Result<String, AppError>> = cfg
        .params
        .w_inter
        .par_iter()
        .map(|&w| {
            let one = Graphon::one_level(tree.clone(), kernel.clone(), w, intra.clone())
                .map_err(AppError::from_core)?;
            let rep = detectability_threshold(&one, &grid, &caps).map_err(AppError::from_core)?;
            let regime = if rep.detectable { "detectable" } else { "undetectable" };
            Ok(format!("{},{},{regime},{}", fmt_f64(w), fmt_f64(rep.p_star), rep.fiedler_support))
        })
        .collect();
    for r in rows {
        csv.push_str(&r?);
        csv.push('\n');
    }
    Ok(vec![("threshold.csv".into(), csv)])
}

pub fn commute(model: &ResolvedModel, cfg: &ExperimentConfig) -> Result<OutFiles, AppError> {
    let caps = Caps::default();
    let g = &model.graphon;
    let pairs = cfg.params.pairs;
    let cells: Vec<Result<_, AppError>> = cfg
        .k
        .iter()
        .flat_map(|&k| cfg.seeds.iter().map(move |&s| (k, s)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(k, seed)| {
            collapse_experiment(g, &[k], &[seed], pairs, &caps).map_err(AppError::from_core)
        })
        .collect();
    let mut csv = String::from(
        "k,N_k,seed,i,j,finest_i,finest_j,C_over_Nk,limit_value,abs_error,limit_father,abs_error_father\n",
    );
    for cell in cells {
        for c in cell? {
            if c.skipped {
                continue;
            }
            for r in &c.rows {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    c.k,
                    c.n,
                    c.seed,
                    r.i,
                    r.j,
                    r.finest_i,
                    r.finest_j,
                    fmt_f64(r.c_over_n),
                    fmt_f64(r.limit),
                    fmt_f64(r.abs_error),
                    fmt_f64(r.limit_father),
                    fmt_f64(r.abs_error_father)
                )
                .unwrap();
            }
        }
    }
    Ok(vec![("commute.csv".into(), csv)])
}

pub fn sis(model: &ResolvedModel, cfg: &ExperimentConfig) -> Result<OutFiles, AppError> {
    let caps = Caps::default();
    let g = &model.graphon;
    let strategy = match cfg.params.strategy.as_str() {
        "global" => StrategyKind::Global,
        "targeted" => StrategyKind::Targeted,
        other => {
            return Err(AppError::Config(format!(
                "strategy must be `global` or `targeted`, got `{other}`"
            )))
        }
    };
    let c_label = cfg.params.c.or(model.concentration);
    let level_str =
        cfg.params.level_set.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-");

    let sweeps: Vec<Result<_, AppError>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let sweep_cfg = SweepConfig {
                strategy,
                level_set: cfg.params.level_set.clone(),
                taus: cfg.params.tau.clone(),
                budgets: cfg.params.budgets.clone(),
                k: cfg.k[0],
                seeds: vec![seed],
                epsilon: cfg.params.epsilon,
                fp_tol: 1e-8,
            };
            intervention_sweep(g, &sweep_cfg, &caps).map_err(AppError::from_core)
        })
        .collect();

    let mut csv = String::from(
        "strategy,level_set,c,seed,tau,B,rho_inf,lambda1,tau_max_crit,tau_avg_crit\n",
    );
    let c_str = c_label.map(fmt_f64).unwrap_or_default();
    for sweep in sweeps {
        let sweep = sweep?;
        let crit: std::collections::BTreeMap<u64, (f64, f64)> = sweep
            .crit_curves
            .iter()
            .map(|c| (c.budget.to_bits(), (c.tau_max_crit, c.tau_avg_crit)))
            .collect();
        for cell in &sweep.cells {
            let (tmax, tavg) = crit[&cell.budget.to_bits()];
            writeln!(
                csv,
                "{strategy},{level_str},{c_str},{},{},{},{},{},{},{}",
                cell.seed,
                fmt_f64(cell.tau),
                fmt_f64(cell.budget),
                fmt_f64(cell.rho_inf),
                fmt_f64(cell.lambda1),
                fmt_f64(tmax),
                fmt_f64(tavg)
            )
            .unwrap();
        }
    }
    Ok(vec![("sis_sweep.csv".into(), csv)])
}

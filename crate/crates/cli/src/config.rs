//! Experiment configuration and run manifests.
//!
//! A run is described by one JSON document: the tree source (builtin
//! fixture, tree file, inline tree, or seeded random tree), an optional
//! kernel block overriding the source's kernel, the `k` and seed lists, the
//! output directory, and experiment-specific parameters. Every run writes a
//! `manifest.json` holding the fully resolved config plus tool version;
//! feeding a manifest back through `--config` reproduces the run byte for
//! byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use ultragraphon::config::{load_tree_json, KernelConfig, NodeConfig, TreeFileConfig};
use ultragraphon::fixtures;
use ultragraphon::graphon::{Graphon, Kernel};
use ultragraphon::tree::{RandomTreeParams, UltrametricTree};

use crate::AppError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeSource {
    Fixture(String),
    File(PathBuf),
    Inline(NodeConfig),
    Random { depth: u32, concentration: f64, seed: u64, grid_units: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Spectrum,
    Projectors,
    Detect,
    Threshold,
    Commute,
    Sis,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Projectors => "projectors",
            ExperimentKind::Detect => "detect",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Commute => "commute",
            ExperimentKind::Sis => "sis",
        };
        f.write_str(s)
    }
}

fn default_pairs() -> usize {
    200
}

fn default_gamma() -> f64 {
    0.25
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_extinction_tol() -> f64 {
    1e-4
}

fn default_level_set() -> Vec<u32> {
    vec![2, 3, 4]
}

fn default_taus() -> Vec<f64> {
    (4..=20).map(|t| t as f64).collect()
}

fn default_budgets() -> Vec<f64> {
    (0..=19).map(|b| b as f64 / 20.0).collect()
}

/// Experiment-specific parameters, all optional in the JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Nodes (labels or paths) for `projectors` and `detect`.
    pub nodes: Vec<String>,
    /// Concentration exponent used in the Davis-Kahan bound column.
    pub gamma: f64,
    /// Sign-graph tolerance override for `detect`.
    pub zero_tol: Option<f64>,
    /// Inter-community densities swept by `threshold`.
    pub w_inter: Vec<f64>,
    /// Commute pairs sampled per cell.
    pub pairs: usize,
    /// `sis`: intervention strategy, `global` or `targeted`.
    pub strategy: String,
    /// `sis`: levels carrying the intervention.
    pub level_set: Vec<u32>,
    pub tau: Vec<f64>,
    pub budgets: Vec<f64>,
    pub epsilon: f64,
    pub extinction_tol: f64,
    /// Heterogeneity label for the `c` column of `sis_sweep.csv`; filled
    /// from the tree source when absent.
    pub c: Option<f64>,
    /// `spectrum`: also export adjacency matrices (`triples` or `dense`).
    pub export_adjacency: Option<String>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            nodes: vec!["root".into()],
            gamma: default_gamma(),
            zero_tol: None,
            w_inter: Vec::new(),
            pairs: default_pairs(),
            strategy: "global".into(),
            level_set: default_level_set(),
            tau: default_taus(),
            budgets: default_budgets(),
            epsilon: default_epsilon(),
            extinction_tol: default_extinction_tol(),
            c: None,
            export_adjacency: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub tree: TreeSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub k: Vec<u32>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    #[serde(default)]
    pub params: Params,
}

/// The manifest written next to every run's CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub resolved_seeds: Vec<u64>,
    pub config: ExperimentConfig,
}

/// Loads a config or a manifest (recognized by its `config` field).
pub fn load_config(path: &Path) -> Result<ExperimentConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    let payload = if value.get("config").is_some() && value.get("tool").is_some() {
        value.get("config").unwrap().clone()
    } else {
        value
    };
    serde_json::from_value(payload).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

/// The fully resolved model for a run.
pub struct ResolvedModel {
    pub graphon: Graphon,
    /// Concentration of the random tree source, for the sis `c` column.
    pub concentration: Option<f64>,
}

/// Builds the tree and kernel from the config's source plus overrides.
pub fn resolve_model(cfg: &ExperimentConfig) -> Result<ResolvedModel, AppError> {
    let kernel_override = cfg
        .kernel
        .as_ref()
        .map(ultragraphon::config::kernel_from_config)
        .transpose()
        .map_err(AppError::from_core)?;

    let (tree, source_kernel, concentration): (Arc<UltrametricTree>, Option<Kernel>, Option<f64>) =
        match &cfg.tree {
            TreeSource::Fixture(name) => {
                let fx = fixtures::fixture_by_name(name).map_err(AppError::from_core)?;
                let c = fx.concentration;
                // Fixture graphons already carry their kernel and mode.
                if kernel_override.is_none() {
                    return Ok(ResolvedModel { graphon: fx.graphon, concentration: c });
                }
                (fx.graphon.tree().clone(), None, c)
            }
            TreeSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    AppError::Config(format!("cannot read tree file {}: {e}", path.display()))
                })?;
                let (tree, kernel) = load_tree_json(&text).map_err(AppError::from_core)?;
                (tree, kernel, None)
            }
            TreeSource::Inline(node) => {
                let file = TreeFileConfig { tree: node.clone(), kernel: None };
                let (tree, kernel) =
                    ultragraphon::config::load_tree_config(&file).map_err(AppError::from_core)?;
                (tree, kernel, None)
            }
            TreeSource::Random { depth, concentration, seed, grid_units } => {
                let tree = UltrametricTree::random_binary(&RandomTreeParams {
                    depth: *depth,
                    concentration: *concentration,
                    seed: *seed,
                    grid_units: *grid_units,
                })
                .map_err(AppError::from_core)?;
                (tree, None, Some(*concentration))
            }
        };

    let kernel = kernel_override.or(source_kernel).ok_or_else(|| {
        AppError::Config("no kernel: add a `kernel` block or use a fixture".into())
    })?;
    let graphon = Graphon::new(tree, kernel).map_err(AppError::from_core)?;
    Ok(ResolvedModel { graphon, concentration })
}

/// Validates the k/seed lists for an experiment kind. Grid sampling needs at
/// least two points per finest cell (`k >= 2`) wherever finest intervals act
/// as internal nodes of the sampled space; the sis experiment runs on plain
/// adjacency spectra and admits `k = 1`.
pub fn validate_lists(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<(), AppError> {
    if cfg.seeds.is_empty() {
        return Err(AppError::Config("seed list must be nonempty".into()));
    }
    if cfg.k.is_empty() {
        return Err(AppError::Config("k list must be nonempty".into()));
    }
    let k_min = if kind == ExperimentKind::Sis { 1 } else { 2 };
    if let Some(k) = cfg.k.iter().find(|&&k| k < k_min) {
        return Err(AppError::Config(format!(
            "k = {k} below the minimum {k_min} for the {kind} experiment"
        )));
    }
    Ok(())
}

/// Serializes a manifest with stable field order.
pub fn manifest_json(kind: ExperimentKind, cfg: &ExperimentConfig) -> String {
    let manifest = Manifest {
        tool: "ultragraphon".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: kind,
        resolved_seeds: cfg.seeds.clone(),
        config: ExperimentConfig { experiment: Some(kind), ..cfg.clone() },
    };
    let mut out = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    out.push('\n');
    out
}

/// Formats a float for CSV: shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

/// Map of all builtin fixture names to descriptions (stable order).
pub fn fixture_table() -> BTreeMap<&'static str, String> {
    fixtures::builtin_fixtures()
        .into_iter()
        .map(|f| {
            let n = f.graphon.tree().denominator_lcm().unwrap_or(0);
            (f.name, format!("{} (N = {n}, default k = {})", f.description, f.default_k))
        })
        .collect()
}

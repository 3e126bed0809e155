//! `ultragraphon` - experiment harness for hierarchical community networks.
//!
//! One subcommand per experiment kind (`spectrum`, `projectors`, `detect`,
//! `threshold`, `commute`, `sis`) plus `gen-tree` and `fixtures`. Each run
//! reads a JSON config, writes the experiment's CSVs and a `manifest.json`
//! into the output directory, and is reproducible byte for byte from the
//! manifest. Exit codes: 0 success, 2 config error, 3 numerical failure.
//! `RAYON_NUM_THREADS` bounds the worker pool.

mod config;
mod drivers;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load_config, manifest_json, resolve_model, validate_lists, ExperimentKind};
use ultragraphon::Error as CoreError;

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Numerical(String),
}

impl AppError {
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::NotSymmetric(_)
            | CoreError::Disconnected { .. }
            | CoreError::NonConvergent { .. }
            | CoreError::CheegerBracket { .. } => AppError::Numerical(e.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Config(_) => ExitCode::from(2),
            AppError::Numerical(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Numerical(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ultragraphon",
    version,
    about = "Hierarchical community networks from ultrametric graphons: spectra, detection, random walks, epidemics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (or a manifest from a previous run).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed list, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Override the k list, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<u32>>,
}

#[derive(Args)]
struct GenTreeArgs {
    /// Number of binary splits (the tree gets 2^depth leaves).
    #[arg(long)]
    depth: u32,
    /// Beta(c, c) split concentration.
    #[arg(long)]
    concentration: f64,
    #[arg(long)]
    seed: u64,
    /// Denominator lattice for the interval endpoints.
    #[arg(long, default_value_t = 10_000)]
    grid_units: u64,
    /// Output tree-config path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FixturesArgs {
    /// Write each fixture's tree + kernel config into this directory.
    #[arg(long)]
    write: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form vs random eigenvalue pairing across k and seeds.
    Spectrum(RunArgs),
    /// Empirical spectral projector alignment per node.
    Projectors(RunArgs),
    /// Sign-structure community detection per node.
    Detect(RunArgs),
    /// Detectability threshold sweep over the inter-community density.
    Threshold(RunArgs),
    /// Commute-time collapse experiment.
    Commute(RunArgs),
    /// SIS intervention sweep: rho_inf(tau, B) heatmap data.
    Sis(RunArgs),
    /// Generate a random binary tree config.
    GenTree(GenTreeArgs),
    /// List builtin fixtures (or write their configs).
    Fixtures(FixturesArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Spectrum(args) => run(ExperimentKind::Spectrum, args),
        Cmd::Projectors(args) => run(ExperimentKind::Projectors, args),
        Cmd::Detect(args) => run(ExperimentKind::Detect, args),
        Cmd::Threshold(args) => run(ExperimentKind::Threshold, args),
        Cmd::Commute(args) => run(ExperimentKind::Commute, args),
        Cmd::Sis(args) => run(ExperimentKind::Sis, args),
        Cmd::GenTree(args) => gen_tree(args),
        Cmd::Fixtures(args) => fixtures_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), AppError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(declared) = cfg.experiment {
        if declared != kind {
            return Err(AppError::Config(format!(
                "config declares experiment `{declared}` but the `{kind}` subcommand was invoked"
            )));
        }
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    validate_lists(kind, &cfg)?;
    let model = resolve_model(&cfg)?;

    let files = match kind {
        ExperimentKind::Spectrum => drivers::spectrum(&model, &cfg)?,
        ExperimentKind::Projectors => drivers::projectors(&model, &cfg)?,
        ExperimentKind::Detect => drivers::detect(&model, &cfg)?,
        ExperimentKind::Threshold => drivers::threshold(&model, &cfg)?,
        ExperimentKind::Commute => drivers::commute(&model, &cfg)?,
        ExperimentKind::Sis => drivers::sis(&model, &cfg)?,
    };

    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| AppError::Config(format!("cannot create {}: {e}", cfg.out.display())))?;
    for (name, contents) in &files {
        let path = cfg.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| AppError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    let manifest = manifest_json(kind, &cfg);
    std::fs::write(cfg.out.join("manifest.json"), manifest)
        .map_err(|e| AppError::Config(format!("cannot write manifest: {e}")))?;
    println!("{kind}: wrote {} file(s) to {}", files.len() + 1, cfg.out.display());
    Ok(())
}

fn gen_tree(args: GenTreeArgs) -> Result<(), AppError> {
    use ultragraphon::tree::{RandomTreeParams, UltrametricTree};
    let tree = UltrametricTree::random_binary(&RandomTreeParams {
        depth: args.depth,
        concentration: args.concentration,
        seed: args.seed,
        grid_units: args.grid_units,
    })
    .map_err(AppError::from_core)?;
    let cfg = ultragraphon::config::tree_to_config(&tree, None);
    let mut json = serde_json::to_string_pretty(&cfg)
        .map_err(|e| AppError::Config(format!("serialize tree: {e}")))?;
    json.push('\n');
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| AppError::Config(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    std::fs::write(&args.out, json)
        .map_err(|e| AppError::Config(format!("cannot write {}: {e}", args.out.display())))?;
    println!(
        "gen-tree: depth {} concentration {} seed {} -> {}",
        args.depth,
        args.concentration,
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn fixtures_cmd(args: FixturesArgs) -> Result<(), AppError> {
    if let Some(dir) = &args.write {
        std::fs::create_dir_all(dir)
            .map_err(|e| AppError::Config(format!("cannot create {}: {e}", dir.display())))?;
        for fx in ultragraphon::fixtures::builtin_fixtures() {
            let cfg = ultragraphon::config::tree_to_config(
                fx.graphon.tree(),
                Some(fx.graphon.kernel()),
            );
            let mut json = serde_json::to_string_pretty(&cfg)
                .map_err(|e| AppError::Config(e.to_string()))?;
            json.push('\n');
            let path = dir.join(format!("{}.tree.json", fx.name));
            std::fs::write(&path, json)
                .map_err(|e| AppError::Config(format!("cannot write {}: {e}", path.display())))?;
        }
        println!("fixtures: wrote configs to {}", dir.display());
    } else {
        for (name, desc) in config::fixture_table() {
            println!("{name:18} {desc}");
        }
    }
    Ok(())
}

//! JSON descriptions of trees and kernels.
//!
//! A tree file is a nested record per node, each carrying its interval as a
//! `"p/q..r/s"` rational string, its height, an optional label, and its
//! children; a kernel block can sit alongside. Loading validates every tree
//! invariant and reports the first violation with the offending node path.
//!
//! ```json
//! {
//!   "tree": {
//!     "interval": "0/1..1/1", "height": 1.0, "children": [
//!       {"interval": "0/1..1/2", "height": 0.5},
//!       {"interval": "1/2..1/1", "height": 0.5}
//!     ]
//!   },
//!   "kernel": {"type": "table", "levels": {"1": 0.1, "2": 0.8}}
//! }
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graphon::Kernel;
use crate::tree::{NodeSpec, Rational, UltrametricTree};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeConfig {
    /// Half-open rational interval, e.g. `"4/14..8/14"`.
    pub interval: String,
    pub height: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum KernelConfig {
    #[serde(rename = "exp")]
    Exponential { sigma: f64 },
    #[serde(rename = "table")]
    Table { levels: BTreeMap<String, f64> },
    #[serde(rename = "powerlaw")]
    PowerLaw { wmin: f64, wmax: f64, gamma: f64, #[serde(rename = "L")] depth: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeFileConfig {
    pub tree: NodeConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
}

/// Parses `"p/q"` (or a bare integer) into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = num.parse().map_err(|_| Error::Config(format!("bad rational `{s}`")))?;
    let d: i64 = den.parse().map_err(|_| Error::Config(format!("bad rational `{s}`")))?;
    if d == 0 {
        return Err(Error::Config(format!("zero denominator in `{s}`")));
    }
    Ok(Rational::new(n, d))
}

/// Parses `"a..b"` into interval endpoints.
pub fn parse_interval(s: &str) -> Result<(Rational, Rational)> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| Error::Config(format!("interval `{s}` is not of the form a..b")))?;
    Ok((parse_rational(lo)?, parse_rational(hi)?))
}

fn node_spec(cfg: &NodeConfig) -> Result<NodeSpec> {
    let (lo, hi) = parse_interval(&cfg.interval)?;
    let mut spec = NodeSpec::new(lo, hi, cfg.height);
    spec.label = cfg.label.clone();
    spec.children = cfg.children.iter().map(node_spec).collect::<Result<_>>()?;
    Ok(spec)
}

pub fn kernel_from_config(cfg: &KernelConfig) -> Result<Kernel> {
    Ok(match cfg {
        KernelConfig::Exponential { sigma } => Kernel::Exponential { scale: *sigma },
        KernelConfig::Table { levels } => {
            let mut map = BTreeMap::new();
            for (k, v) in levels {
                let level: u32 =
                    k.parse().map_err(|_| Error::Config(format!("bad level key `{k}`")))?;
                map.insert(level, *v);
            }
            Kernel::LevelTable { levels: map }
        }
        KernelConfig::PowerLaw { wmin, wmax, gamma, depth } => Kernel::PowerLawLevels {
            w_min: *wmin,
            w_max: *wmax,
            gamma_w: *gamma,
            depth: *depth,
        },
    })
}

pub fn kernel_to_config(kernel: &Kernel) -> KernelConfig {
    match kernel {
        Kernel::Exponential { scale } => KernelConfig::Exponential { sigma: *scale },
        Kernel::LevelTable { levels } => KernelConfig::Table {
            levels: levels.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        },
        Kernel::PowerLawLevels { w_min, w_max, gamma_w, depth } => KernelConfig::PowerLaw {
            wmin: *w_min,
            wmax: *w_max,
            gamma: *gamma_w,
            depth: *depth,
        },
    }
}

/// Builds and validates a tree (plus optional kernel) from parsed config.
pub fn load_tree_config(cfg: &TreeFileConfig) -> Result<(Arc<UltrametricTree>, Option<Kernel>)> {
    let tree = UltrametricTree::from_spec(node_spec(&cfg.tree)?)?;
    let kernel = match &cfg.kernel {
        Some(kc) => {
            let k = kernel_from_config(kc)?;
            k.validate(tree.depth())?;
            Some(k)
        }
        None => None,
    };
    Ok((tree, kernel))
}

/// Parses a JSON document.
pub fn load_tree_json(json: &str) -> Result<(Arc<UltrametricTree>, Option<Kernel>)> {
    let cfg: TreeFileConfig =
        serde_json::from_str(json).map_err(|e| Error::Config(format!("tree config: {e}")))?;
    load_tree_config(&cfg)
}

/// Serializes a tree (and kernel) back into the config format.
pub fn tree_to_config(tree: &UltrametricTree, kernel: Option<&Kernel>) -> TreeFileConfig {
    fn node_cfg(tree: &UltrametricTree, id: crate::tree::NodeId) -> NodeConfig {
        let n = tree.node(id).unwrap();
        NodeConfig {
            interval: format!("{}/{}..{}/{}", n.lo.numer(), n.lo.denom(), n.hi.numer(), n.hi.denom()),
            height: n.height,
            label: n.label.clone(),
            children: n.children.iter().map(|&c| node_cfg(tree, c)).collect(),
        }
    }
    TreeFileConfig {
        tree: node_cfg(tree, tree.root().id),
        kernel: kernel.map(kernel_to_config),
    }
}

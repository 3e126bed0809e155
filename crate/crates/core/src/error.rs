use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0} outside [0, 1]")]
    PointOutOfRange(f64),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("no node named or addressed `{0}`")]
    NodeNotFound(String),

    #[error("invalid tree at {path}: {reason}")]
    InvalidTree { path: String, reason: String },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too fine: denominator lcm {lcm} exceeds cap {cap}")]
    GridTooFine { lcm: u64, cap: u64 },

    #[error("matrix dimension {n} exceeds cap {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("intervention factor {factor} is not positive (budget too large for epsilon)")]
    InterventionBudget { factor: f64 },

    #[error("operation requires an ultrametric-mode graphon")]
    UltrametricRequired,

    #[error("operation requires a one-level-mode graphon")]
    OneLevelRequired,

    #[error("operation requires intra-community probability 1 at the finest level (node {node} has {value})")]
    CliqueAtomsRequired { node: String, value: f64 },

    #[error("node {node} has {count} children/points; at least 2 required")]
    DegenerateNode { node: String, count: usize },

    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("graph is disconnected: {zeroed} eigenvalues below the zero cutoff")]
    Disconnected { zeroed: usize },

    #[error("{what} did not converge within {limit} iterations")]
    NonConvergent { what: &'static str, limit: usize },

    #[error("Cheeger bracket violated: lower {lower}, |lambda2| {lambda2}, upper {upper}")]
    CheegerBracket { lower: f64, lambda2: f64, upper: f64 },

    #[error("config error: {0}")]
    Config(String),
}

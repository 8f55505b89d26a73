use std::fmt;

use thiserror::Error;

/// Compatibility conditions checked when ingesting raw state data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `w0|_{Γ_j} = h0_j`.
    TraceMatch,
    /// Junction continuity of the thin displacement.
    JunctionContinuity,
    /// Kinematic identification `u|_Γ = h1 = w1|_Γ` together with `u|_{Γ_f} = 0`.
    Kinematic,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::TraceMatch => "(i) w0 trace = h0",
            Condition::JunctionContinuity => "(ii) h0 junction continuity",
            Condition::Kinematic => "(A.iii) u|_Gamma = h1 = w1|_Gamma, u|_Gamma_f = 0",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the allowed range {range}")]
    Bounds {
        what: &'static str,
        value: String,
        range: &'static str,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("hanging interface node {node}: {detail}")]
    HangingNode { node: usize, detail: String },

    #[error(
        "nonconforming interface segment ({a}, {b}): {fluid} fluid and {solid} solid triangles"
    )]
    NonconformingInterface {
        a: usize,
        b: usize,
        fluid: usize,
        solid: usize,
    },

    #[error("solid region is not convex at node {node}")]
    NonconvexSolid { node: usize },

    #[error("triangle {triangle} has nonpositive signed area {area:e}")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("mesh topology: {0}")]
    Topology(String),

    #[error(
        "compatibility condition {condition} violated at node {node} (deviation {deviation:e})"
    )]
    Compatibility {
        condition: Condition,
        node: usize,
        deviation: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{what} must satisfy {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("{what} failed (relative residual {residual:e})")]
    Numeric { what: &'static str, residual: f64 },

    #[error("factorization of {what} broke down at pivot {pivot}")]
    Factorization { what: &'static str, pivot: usize },

    #[error("{what}: mismatch {mismatch:e} exceeds {tolerance:e}")]
    Consistency {
        what: &'static str,
        mismatch: f64,
        tolerance: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use crate::lattice::Vertex;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("rectangle sides must be at least 1, got {k}x{l}")]
    EmptyRect { k: u32, l: u32 },

    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("edge index {index} out of range for a rectangle with {edge_count} edges")]
    EdgeIndexOutOfRange { index: usize, edge_count: usize },

    #[error("vertex ({}, {}) lies outside the rectangle", .0.x, .0.y)]
    VertexOutsideRect(Vertex),

    #[error("configuration does not cover the requested region")]
    ConfigurationTooSmall,

    #[error("enumeration over {edges} edges exceeds the cap of {cap} edges")]
    EnumerationTooLarge { edges: usize, cap: usize },

    #[error("exact rational evaluation overflowed 128-bit arithmetic")]
    RationalOverflow,

    #[error("sample count must be at least 1")]
    ZeroSamples,

    #[error("epsilon must lie strictly between 0 and 1/2, got {0}")]
    InvalidEpsilon(f64),

    #[error("radii must be positive, strictly increasing, and nonempty")]
    InvalidRadii,

    #[error("this check requires p > 1/2, got {0}")]
    SubcriticalP(f64),

    #[error("edge {0} is not pivotal in the given configuration")]
    NotPivotal(usize),

    #[error("malformed configuration dump: {0}")]
    Dump(String),

    #[error("malformed rectangle spec {input:?}: {reason}")]
    RectParse { input: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

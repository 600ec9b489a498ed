use thiserror::Error;

use crate::dynkin::AssumptionReport;
use crate::tree::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("not a stopping time: path to leaf {leaf} never meets the region")]
    NotAStoppingTime { leaf: NodeId },

    #[error("objects belong to different trees")]
    TreeMismatch,

    #[error("process has {found} values, tree has {expected} nodes")]
    IncompleteProcess { expected: usize, found: usize },

    #[error("node {0} is a leaf")]
    LeafNode(NodeId),

    #[error("node {0} is not a leaf")]
    NotALeaf(NodeId),

    #[error("node {0} does not exist")]
    UnknownNode(NodeId),

    #[error("game violates its standing assumptions:\n{0}")]
    AssumptionViolation(AssumptionReport),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("too many stopping times to enumerate: {count} (limit {limit})")]
    EnumerationTooLarge { count: String, limit: u64 },

    #[error("game is not zero-sum: {0}")]
    NotZeroSum(String),

    #[error("utility inverse undefined at {0}")]
    UtilityDomain(String),

    #[error("operation needs real-valued arithmetic: {0}")]
    NeedsFloat(String),

    #[error("invalid claim: {0}")]
    InvalidClaim(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

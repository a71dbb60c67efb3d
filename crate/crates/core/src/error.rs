use thiserror::Error;

use crate::domain::AgentId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),
    #[error("invalid ranking: {0}")]
    InvalidRanking(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("quota {quota} outside (0, {m})")]
    QuotaOutOfRange { quota: f64, m: usize },
    #[error("agent {reviewer} has no ranking covering proposal {proposal}")]
    MissingRanking { reviewer: AgentId, proposal: AgentId },
    #[error("agent {predictor} has no predicted ranking for reviewer {reviewer}")]
    MissingPrediction { predictor: AgentId, reviewer: AgentId },
    #[error("no review entry for proposal {proposal}, reviewer {reviewer}")]
    MissingReview { proposal: AgentId, reviewer: AgentId },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("board size {0} unsupported: truth-serum scoring needs m >= 3")]
    BoardTooSmall(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

use thiserror::Error;

use crate::alignment::SimilarityError;
use crate::endpoints::EndpointError;
use crate::gateway::{GatewayError, ParseError};

/// Failure of one pipeline stage.
#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error("precondition failed: {0}")]
    Precondition(&'static str),
    #[error("model returned an empty completion")]
    EmptyCompletion,
    #[error("no assumptions to build an argument from")]
    EmptyAssumptions,
    #[error("assumption {0} has not been evaluated")]
    UnevaluatedAssumption(usize),
    #[error("assumption index {index} out of range for {len} assumptions")]
    AssumptionIndex { index: usize, len: usize },
    #[error("verdict has no justification")]
    EmptyJustification,
    #[error("no intent passed the quality filter")]
    IntentUnavailable,
    #[error("no external verdict for claim {0:?}")]
    MissingExternalVerdict(String),
}

pub type StageResult<T> = Result<T, StageError>;

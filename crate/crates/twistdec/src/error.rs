use thiserror::Error;

/// Errors raised by word algebra and automorphism arithmetic.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("letter index {0} out of range for rank {1}")]
    LetterOutOfRange(i32, usize),
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("empty word has no primitive root")]
    EmptyRoot,
    #[error("images do not form a basis of the free group")]
    NotAnAutomorphism,
}

/// Errors raised by graph, representative and folding operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge path is not composable at position {0}")]
    NotComposable(usize),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("invalid upper-triangular data: {0}")]
    InvalidRep(String),
    #[error("operation requires a linearly growing representative, found {0}")]
    NotLinear(String),
    #[error("representative has no marking")]
    Unmarked,
    #[error("folding failed: {0}")]
    Fold(String),
    #[error("refinement hypothesis violated: {0}")]
    RefinementHypothesis(String),
}

/// Errors raised by graph-of-groups operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GogError {
    #[error("invalid graph of groups: {0}")]
    Invalid(String),
    #[error("word is not a member of the vertex group at `{0}`")]
    NotAMember(String),
    #[error("groupoid word is not composable")]
    NotComposable,
    #[error("groupoid word is not closed at the base vertex")]
    NotClosed,
    #[error("marking does not identify the fundamental group with the ambient free group: {0}")]
    BadMarking(String),
    #[error("Dehn twist is not efficient: {0}")]
    NotEfficient(String),
}

/// Errors raised by the dichotomy driver.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecideError {
    #[error("input is not linearly growing: {0}")]
    NotLinear(String),
    #[error("{0}")]
    Graph(String),
    #[error("{0}")]
    Gog(String),
    #[error("edge-twist digraph is acyclic; the cycle ping-pong check does not apply")]
    WrongCase,
}

impl From<GraphError> for DecideError {
    fn from(e: GraphError) -> Self {
        DecideError::Graph(e.to_string())
    }
}

impl From<GogError> for DecideError {
    fn from(e: GogError) -> Self {
        DecideError::Gog(e.to_string())
    }
}

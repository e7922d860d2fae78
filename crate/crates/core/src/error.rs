use thiserror::Error;

use crate::geometry::ModelKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("state kinds differ: {left:?} vs {right:?}")]
    KindMismatch { left: ModelKind, right: ModelKind },
    #[error("invalid control: {0}")]
    InvalidControl(String),
    #[error("invalid duration {0}, must be positive")]
    InvalidDuration(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeuristicError {
    #[error("goal position {0:?} is outside the map or blocked")]
    InvalidGoal([f64; 3]),
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("invalid overlap parameters: {0}")]
    InvalidParams(String),
    #[error("table format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start state is invalid: {0}")]
    InvalidStart(String),
    #[error("goal is invalid: {0}")]
    InvalidGoal(String),
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("broken parent chain at node {0}")]
    BrokenChain(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

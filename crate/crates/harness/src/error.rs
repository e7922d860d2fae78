use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    MapParse {
        path: PathBuf,
        source: sdd::ParseError,
    },
    #[error("{}: {source}", path.display())]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("scenario generation: {0}")]
    Scenario(String),
    #[error("heatmap: {0}")]
    Heatmap(String),
    #[error(transparent)]
    Table(#[from] sdd::TableError),
    #[error(transparent)]
    Plan(#[from] sdd::PlanError),
    #[error(transparent)]
    Heuristic(#[from] sdd::HeuristicError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

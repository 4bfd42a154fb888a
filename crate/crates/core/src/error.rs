use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Node;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    InputFormat,
    Precondition,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("cannot open {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("write failed: {0}")]
    Write(#[from] io::Error),

    #[error("node index {node} out of range (network has {node_count} nodes)")]
    NodeOutOfRange { node: Node, node_count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column `{0}` has zero variance")]
    ConstantColumn(String),

    #[error(
        "design matrix is rank deficient: smallest singular value {smallest_singular_value:.3e}, \
         condition number {condition:.3e}"
    )]
    RankDeficient {
        smallest_singular_value: f64,
        condition: f64,
    },

    #[error("RCI conservation violated in cascade {cascade_id}: residual {residual:.3e}")]
    Conservation { cascade_id: u64, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. } => ErrorKind::InputFormat,
            Error::Io { .. } | Error::Config(_) | Error::InvalidArgument(_) => ErrorKind::Config,
            Error::Write(_) => ErrorKind::Config,
            Error::NodeOutOfRange { .. }
            | Error::ConstantColumn(_)
            | Error::RankDeficient { .. }
            | Error::Conservation { .. }
            | Error::Precondition(_) => ErrorKind::Precondition,
        }
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}

use std::fmt;
use std::process::ExitCode;

use watermass::clustering::ClusterError;
use watermass::cvi::CviError;
use watermass::embedding::EmbedError;
use watermass::grid::GridError;
use watermass::nemi::NemiError;
use watermass::similarity::SimilarityError;
use watermass::sweep::SweepError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Numeric,
}

impl Kind {
    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Numeric => 3,
        })
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind: Kind::Usage,
            message: message.into(),
        }
    }

    pub fn data(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind: Kind::Data,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Maps a library error onto an exit category.
pub trait Classify: fmt::Display {
    fn kind(&self) -> Kind;
}

impl Classify for GridError {
    fn kind(&self) -> Kind {
        Kind::Data
    }
}

impl Classify for std::io::Error {
    fn kind(&self) -> Kind {
        Kind::Data
    }
}

impl Classify for csv::Error {
    fn kind(&self) -> Kind {
        Kind::Data
    }
}

impl Classify for EmbedError {
    fn kind(&self) -> Kind {
        match self {
            EmbedError::TooManyNeighbors { .. } | EmbedError::InvalidParameter(_) => Kind::Usage,
            EmbedError::NonFinite => Kind::Numeric,
            EmbedError::MissingValues | EmbedError::ShapeMismatch(_) | EmbedError::TooFewPoints { .. } => Kind::Data,
        }
    }
}

impl Classify for ClusterError {
    fn kind(&self) -> Kind {
        match self {
            ClusterError::NonFinite => Kind::Numeric,
            _ => Kind::Usage,
        }
    }
}

impl Classify for CviError {
    fn kind(&self) -> Kind {
        match self {
            CviError::LengthMismatch { .. } => Kind::Data,
            CviError::InvalidParameter(_) => Kind::Usage,
            _ => Kind::Numeric,
        }
    }
}

impl Classify for SimilarityError {
    fn kind(&self) -> Kind {
        match self {
            SimilarityError::NonFinite => Kind::Numeric,
            _ => Kind::Data,
        }
    }
}

impl Classify for NemiError {
    fn kind(&self) -> Kind {
        Kind::Data
    }
}

impl Classify for SweepError {
    fn kind(&self) -> Kind {
        match self {
            SweepError::InvalidParameter(_) => Kind::Usage,
            SweepError::NoElbow(_) => Kind::Numeric,
            SweepError::Cluster(e) => e.kind(),
            SweepError::Embed(e) => e.kind(),
            SweepError::Nemi(e) => e.kind(),
        }
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Classify> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| CliError {
            stage,
            kind: e.kind(),
            message: e.to_string(),
        })
    }
}

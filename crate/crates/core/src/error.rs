use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or inconsistent caller input (shapes, empty sets, bad symbols).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The genotype has probability zero under the model; `locus` is the first
    /// (0-based) locus at which the probability mass vanished.
    #[error("genotype has zero probability under the model (locus {locus})")]
    ZeroProbability { locus: usize },

    /// Failure inside one stage of a composed flow.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// The innermost error, looking through stage labels.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root_cause(),
            e => e,
        }
    }
}

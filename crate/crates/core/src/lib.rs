//! Weakly supervised biomedical QA data: BM25 answer labelling, COVID-19
//! question curation, morphological text transformations, staged
//! fine-tuning manifests and SQuAD-style evaluation.

pub mod bm25;
pub mod cli;
pub mod corpus;
pub mod curate;
pub mod io;
pub mod metrics;
pub mod morph;
pub mod schedule;
pub mod weak_label;

use thiserror::Error;

pub use bm25::{best_sentence, Bm25Params};
pub use corpus::{DatasetSubsetId, QAPair, StructuredAbstract, YesNoInstance};
pub use metrics::{evaluate, exact_match, token_f1, EvalReport};
pub use morph::{TransformChain, Transformer};
pub use schedule::{builtin_schedules, Schedule};
pub use weak_label::weak_label;

/// Any failure surfaced by the command-line tool.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Corpus {
        path: String,
        #[source]
        source: corpus::CorpusError,
    },
    #[error(transparent)]
    Label(#[from] weak_label::LabelError),
    #[error(transparent)]
    Curate(#[from] curate::CurateError),
    #[error(transparent)]
    Morph(#[from] morph::MorphError),
    #[error(transparent)]
    Schedule(#[from] schedule::ScheduleError),
    #[error(transparent)]
    Format(#[from] io::FormatError),
    #[error(transparent)]
    Eval(#[from] metrics::EvalError),
    #[error(transparent)]
    Bm25(#[from] bm25::Bm25Error),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// 0 success, 1 validation, 2 I/O, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        use io::FormatError;
        match self {
            Error::Io { .. }
            | Error::Corpus { source: corpus::CorpusError::Io { .. }, .. }
            | Error::Curate(curate::CurateError::Io { .. })
            | Error::Morph(morph::MorphError::Io { .. })
            | Error::Format(FormatError::Io { .. })
            | Error::Schedule(schedule::ScheduleError::Format(FormatError::Io { .. })) => 2,
            Error::Curate(curate::CurateError::Csv { source, .. }) if source.is_io_error() => 2,
            Error::Internal(_) => 3,
            _ => 1,
        }
    }
}

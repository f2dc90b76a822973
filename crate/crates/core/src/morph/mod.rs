//! Lemmas, neo-classical morphemes and the text transformations built on them.

pub mod lemma;
pub mod morpheme;
pub mod transform;

use thiserror::Error;

pub use lemma::{lemmatize_token, LemmaLexicon};
pub use morpheme::{decompose, load_morpheme_lexicon, Decomposition, MorphType, MorphemeEntry, MorphemeLexicon};
pub use transform::{
    transform_dataset, ChainOutput, FieldSelector, TransformChain, TransformJob, TransformKind, TransformOutcome,
    TransformSpec, TransformTarget, Transformable, TransformedDataset, Transformer,
};

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("{origin}:{line}: {reason}")]
    Parse { origin: String, line: usize, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid transformation chain: {0}")]
    InvalidChain(String),
}

//! Turns yes/no QA records into extractive pairs: the conclusions become the
//! context and the BM25-best conclusion sentence becomes the answer.

use std::collections::{BTreeSet, HashMap};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bm25::{best_sentence, Bm25Error, Bm25Params};
use crate::corpus::{
    byte_to_char_offset, normalize_answer, segment_sentences, DatasetSubsetId, Provenance, QAPair,
};

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("degenerate context")]
    DegenerateContext,
    #[error("empty question")]
    EmptyQuestion,
    #[error("subset {0} cannot be repurposed (expected pqa_l or pqa_a)")]
    UnsupportedSubset(DatasetSubsetId),
    #[error("gold and predicted ids differ: {0:?}")]
    IdMismatch(Vec<String>),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("no pairs to compare")]
    Empty,
    #[error(transparent)]
    Bm25(#[from] Bm25Error),
}

/// A yes/no source record reduced to what labeling needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSource {
    pub id: String,
    pub question: String,
    pub conclusions: String,
}

/// The answer chosen for one context.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakLabel {
    pub context: String,
    pub answer_text: String,
    /// Character offset of the answer in `context`.
    pub answer_start: usize,
    pub bm25_score: f64,
    pub n_candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakLabelRecord {
    pub pair: QAPair,
    pub source_subset: DatasetSubsetId,
    pub bm25_score: f64,
    pub n_candidates: usize,
}

pub fn weak_label(
    question: &str,
    conclusions: &str,
    params: &Bm25Params,
) -> Result<WeakLabel, LabelError> {
    if conclusions.trim().is_empty() {
        return Err(LabelError::DegenerateContext);
    }
    if question.trim().is_empty() {
        return Err(LabelError::EmptyQuestion);
    }
    let sentences = segment_sentences(conclusions);
    let (index, score) = best_sentence(question, &sentences, params)?;
    let chosen = &sentences[index];
    Ok(WeakLabel {
        context: conclusions.to_string(),
        answer_text: chosen.text.clone(),
        answer_start: byte_to_char_offset(conclusions, chosen.start),
        bm25_score: score,
        n_candidates: sentences.len(),
    })
}

impl WeakLabel {
    pub fn into_pair(
        self,
        id: String,
        question: String,
        subset: DatasetSubsetId,
        provenance: Provenance,
    ) -> QAPair {
        QAPair {
            id,
            question,
            context: self.context,
            answer_text: self.answer_text,
            answer_start: self.answer_start,
            subset,
            provenance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrimeSubset {
    pub subset: DatasetSubsetId,
    pub records: Vec<WeakLabelRecord>,
    /// Ids of inputs that could not be labelled.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelSummary {
    pub subset: DatasetSubsetId,
    pub emitted: usize,
    pub skipped: usize,
}

impl PrimeSubset {
    pub fn summary(&self) -> LabelSummary {
        LabelSummary {
            subset: self.subset,
            emitted: self.records.len(),
            skipped: self.skipped.len(),
        }
    }

    pub fn pairs(&self) -> Vec<QAPair> {
        self.records.iter().map(|r| r.pair.clone()).collect()
    }
}

/// Maps a yes/no source collection to its repurposed extractive subset.
pub fn prime_subset_of(source: DatasetSubsetId) -> Result<DatasetSubsetId, LabelError> {
    match source {
        DatasetSubsetId::PqaL => Ok(DatasetSubsetId::D1),
        DatasetSubsetId::PqaA => Ok(DatasetSubsetId::D2),
        other => Err(LabelError::UnsupportedSubset(other)),
    }
}

/// Labels every source in parallel. Output order follows input order;
/// degenerate inputs are skipped and counted.
pub fn build_prime_subset(
    sources: &[LabelSource],
    source_subset: DatasetSubsetId,
    params: &Bm25Params,
) -> Result<PrimeSubset, LabelError> {
    let subset = prime_subset_of(source_subset)?;
    params.validate()?;
    let results: Vec<Result<WeakLabelRecord, (String, LabelError)>> = sources
        .par_iter()
        .map(|src| {
            let label = weak_label(&src.question, &src.conclusions, params)
                .map_err(|e| (src.id.clone(), e))?;
            let (bm25_score, n_candidates) = (label.bm25_score, label.n_candidates);
            Ok(WeakLabelRecord {
                pair: label.into_pair(
                    src.id.clone(),
                    src.question.clone(),
                    subset,
                    Provenance::Bm25Weak,
                ),
                source_subset,
                bm25_score,
                n_candidates,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err((id, e)) => {
                warn!("{source_subset}: skipping `{id}`: {e}");
                skipped.push(id);
            }
        }
    }
    if !skipped.is_empty() {
        warn!(
            "{source_subset}: emitted {}, skipped {}",
            records.len(),
            skipped.len()
        );
    }
    Ok(PrimeSubset {
        subset,
        records,
        skipped,
    })
}

/// Fraction of ids whose normalized answers agree.
pub fn agreement_score(gold: &[QAPair], predicted: &[QAPair]) -> Result<f64, LabelError> {
    fn by_id(pairs: &[QAPair]) -> Result<HashMap<&str, &QAPair>, LabelError> {
        let mut m = HashMap::with_capacity(pairs.len());
        for p in pairs {
            if m.insert(p.id.as_str(), p).is_some() {
                return Err(LabelError::DuplicateId(p.id.clone()));
            }
        }
        Ok(m)
    }
    let g = by_id(gold)?;
    let p = by_id(predicted)?;
    let unmatched: BTreeSet<String> = g
        .keys()
        .filter(|id| !p.contains_key(*id))
        .chain(p.keys().filter(|id| !g.contains_key(*id)))
        .map(|id| id.to_string())
        .collect();
    if !unmatched.is_empty() {
        return Err(LabelError::IdMismatch(unmatched.into_iter().collect()));
    }
    if g.is_empty() {
        return Err(LabelError::Empty);
    }
    let agree = g
        .iter()
        .filter(|(id, gp)| normalize_answer(&gp.answer_text) == normalize_answer(&p[*id].answer_text))
        .count();
    Ok(agree as f64 / g.len() as f64)
}

//! Okapi BM25 over the sentences of a single section.
//!
//! Statistics (document frequency, average length) are computed over the
//! candidate sentences only, so a label never depends on the rest of the
//! corpus.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;

#[derive(Debug, Error, PartialEq)]
pub enum Bm25Error {
    #[error("invalid BM25 parameters: k1 = {k1}, b = {b} (need k1 >= 0 and 0 <= b <= 1)")]
    InvalidParams { k1: f64, b: f64 },
    #[error("document index {index} out of range for {n} candidates")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("no candidates")]
    NoCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    /// Term-frequency saturation.
    pub k1: f64,
    /// Length normalization.
    pub b: f64,
    /// Drop English function words from questions and candidates before
    /// scoring. Without this, a rare "to" or "with" can outweigh the content
    /// words a question shares with the right sentence.
    pub remove_stopwords: bool,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 1.2,
            b: 0.75,
            remove_stopwords: true,
        }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, Bm25Error> {
        let p = Bm25Params {
            k1,
            b,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Bm25Error> {
        let ok = self.k1.is_finite() && self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b);
        if ok {
            Ok(())
        } else {
            Err(Bm25Error::InvalidParams {
                k1: self.k1,
                b: self.b,
            })
        }
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn stopwords() -> &'static HashSet<&'static str> {
    static WORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| include_str!("../data/stopwords_en.txt").split_whitespace().collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Tokens that take part in scoring under `params`.
pub fn index_terms(text: &str, params: &Bm25Params) -> Vec<String> {
    let mut toks = tokenize(text);
    if params.remove_stopwords {
        toks.retain(|t| !is_stopword(t));
    }
    toks
}

#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    docs: Vec<Vec<String>>,
    term_freqs: Vec<HashMap<String, usize>>,
    df: HashMap<String, usize>,
    avgdl: f64,
}

impl CandidateSet {
    pub fn build(sentences: &[Sentence]) -> Self {
        Self::from_token_lists(sentences.iter().map(|s| tokenize(&s.text)).collect())
    }

    pub fn from_token_lists(docs: Vec<Vec<String>>) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut term_freqs = Vec::with_capacity(docs.len());
        for doc in &docs {
            let mut tf: HashMap<String, usize> = HashMap::new();
            for tok in doc {
                *tf.entry(tok.clone()).or_default() += 1;
            }
            for tok in tf.keys() {
                *df.entry(tok.clone()).or_default() += 1;
            }
            term_freqs.push(tf);
        }
        let total: usize = docs.iter().map(Vec::len).sum();
        let avgdl = if docs.is_empty() {
            0.0
        } else {
            total as f64 / docs.len() as f64
        };
        CandidateSet {
            docs,
            term_freqs,
            df,
            avgdl,
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Vec<String>] {
        &self.docs
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn df(&self, token: &str) -> usize {
        self.df.get(token).copied().unwrap_or(0)
    }

    /// Smoothed IDF, `ln(1 + (n - df + 0.5) / (df + 0.5))`. Never negative.
    pub fn idf(&self, token: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.df(token) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 score of candidate `index` for `query`. Repeated query tokens
    /// contribute once per occurrence.
    pub fn score(
        &self,
        query: &[String],
        index: usize,
        params: &Bm25Params,
    ) -> Result<f64, Bm25Error> {
        let tf_map = self.term_freqs.get(index).ok_or(Bm25Error::IndexOutOfRange {
            index,
            n: self.len(),
        })?;
        let dl = self.docs[index].len() as f64;
        let norm = params.k1 * (1.0 - params.b + params.b * dl / self.avgdl);
        let mut score = 0.0;
        for q in query {
            let Some(&tf) = tf_map.get(q) else { continue };
            let tf = tf as f64;
            score += self.idf(q) * (tf * (params.k1 + 1.0)) / (tf + norm);
        }
        Ok(score)
    }
}

pub fn bm25_score(
    query_tokens: &[String],
    doc_index: usize,
    candidates: &CandidateSet,
    params: &Bm25Params,
) -> Result<f64, Bm25Error> {
    candidates.score(query_tokens, doc_index, params)
}

/// Index and score of the best-matching sentence. Ties go to the earliest
/// sentence.
pub fn best_sentence(
    question: &str,
    sentences: &[Sentence],
    params: &Bm25Params,
) -> Result<(usize, f64), Bm25Error> {
    let docs = sentences.iter().map(|s| index_terms(&s.text, params)).collect();
    best_in_set(&index_terms(question, params), &CandidateSet::from_token_lists(docs), params)
}

pub fn best_in_set(
    query: &[String],
    candidates: &CandidateSet,
    params: &Bm25Params,
) -> Result<(usize, f64), Bm25Error> {
    if candidates.is_empty() {
        return Err(Bm25Error::NoCandidates);
    }
    let mut best = (0, candidates.score(query, 0, params)?);
    for i in 1..candidates.len() {
        let s = candidates.score(query, i, params)?;
        if s > best.1 {
            best = (i, s);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::segment_sentences;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(toks("Blood-glucose control!"), ["blood", "glucose", "control"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("COVID-19"), ["covid", "19"]);
    }

    #[test]
    fn candidate_stats() {
        let cs = CandidateSet::from_token_lists(vec![toks("a b c d"), toks("a e f g")]);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.avgdl(), 4.0);
        assert_eq!(cs.df("a"), 2);
        assert_eq!(cs.df("b"), 1);
        let empty = CandidateSet::build(&[]);
        assert_eq!(empty.len(), 0);
        assert_eq!(empty.avgdl(), 0.0);
    }

    #[test]
    fn single_candidate_reference_value() {
        let cs = CandidateSet::from_token_lists(vec![toks("fever")]);
        let s = cs.score(&toks("fever"), 0, &Bm25Params::default()).unwrap();
        // ln(1 + 0.5 / 1.5) * (1 * 2.2) / (1 + 1.2)
        assert!((s - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((s - 0.2877).abs() < 1e-4);
    }

    #[test]
    fn absent_tokens_contribute_nothing() {
        let cs = CandidateSet::from_token_lists(vec![toks("a b"), toks("c d")]);
        let p = Bm25Params::default();
        let with = cs.score(&toks("a zzz"), 0, &p).unwrap();
        let without = cs.score(&toks("a"), 0, &p).unwrap();
        assert_eq!(with, without);
        assert_eq!(cs.score(&toks("zzz"), 1, &p).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_index() {
        let cs = CandidateSet::from_token_lists(vec![toks("a")]);
        assert_eq!(
            cs.score(&toks("a"), 1, &Bm25Params::default()),
            Err(Bm25Error::IndexOutOfRange { index: 1, n: 1 })
        );
    }

    #[test]
    fn params_validated() {
        assert!(Bm25Params::new(-0.1, 0.5).is_err());
        assert!(Bm25Params::new(1.0, 1.5).is_err());
        assert!(Bm25Params::new(f64::NAN, 0.5).is_err());
        assert!(Bm25Params::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn best_sentence_examples() {
        let p = Bm25Params::default();
        let text = "Mice were dosed daily. Fever resolved in treated mice. Weight was stable.";
        let sents = segment_sentences(text);
        assert_eq!(
            best_sentence("Fever resolved in treated mice.", &sents, &p).unwrap().0,
            1
        );

        let same = segment_sentences("Same words here. Same words here. Same words here.");
        assert_eq!(best_sentence("same words", &same, &p).unwrap().0, 0);

        let (idx, score) = best_sentence("unrelated query", &sents, &p).unwrap();
        assert_eq!((idx, score), (0, 0.0));

        assert_eq!(best_sentence("q", &[], &p), Err(Bm25Error::NoCandidates));
    }

    #[test]
    fn identical_candidates_score_equally() {
        let cs = CandidateSet::from_token_lists(vec![toks("x y z"), toks("x y z")]);
        let p = Bm25Params::default();
        let q = toks("y z");
        assert_eq!(cs.score(&q, 0, &p).unwrap(), cs.score(&q, 1, &p).unwrap());
    }

    #[test]
    fn all_empty_documents_score_zero() {
        let cs = CandidateSet::from_token_lists(vec![vec![], vec![]]);
        assert_eq!(cs.score(&toks("a"), 0, &Bm25Params::default()).unwrap(), 0.0);
    }

    #[test]
    fn function_words_do_not_decide_the_label() {
        let sents = segment_sentences(
            "Fever is common in patients with asthma. Patients with asthma need to rest.",
        );
        let q = "Is fever common with asthma?";
        assert_eq!(best_sentence(q, &sents, &Bm25Params::default()).unwrap().0, 0);
        assert_eq!(index_terms(q, &Bm25Params::default()), ["fever", "common", "asthma"]);
        let raw = Bm25Params {
            remove_stopwords: false,
            ..Default::default()
        };
        assert_eq!(index_terms(q, &raw).len(), 5);
        let p: Bm25Params = serde_json::from_str(r#"{"k1":1.2,"b":0.75}"#).unwrap();
        assert!(p.remove_stopwords);
    }
}

//! Exact match, token F1 and yes/no accuracy.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_answer, YesNo};
use crate::io::RunProvenance;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no gold answers for `{0}`")]
    EmptyGolds(String),
    #[error("gold set is empty")]
    NoInstances,
    #[error("duplicate prediction for `{0}`")]
    DuplicatePrediction(String),
    #[error("prediction `{0}` has no {1}")]
    WrongKind(String, &'static str),
    #[error("prediction ids do not match gold ids (missing: {missing:?}, extra: {extra:?})")]
    IdMismatch { missing: Vec<String>, extra: Vec<String> },
}

fn f1_tokens(pred: &str) -> Vec<String> {
    normalize_answer(pred).split_whitespace().map(str::to_string).collect()
}

/// 1 when the normalized prediction equals any normalized gold.
pub fn exact_match(pred: &str, golds: &[String]) -> Result<u8, EvalError> {
    if golds.is_empty() {
        return Err(EvalError::EmptyGolds(String::new()));
    }
    let p = normalize_answer(pred);
    Ok(u8::from(golds.iter().any(|g| normalize_answer(g) == p)))
}

fn f1_single(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for g in gold {
        *counts.entry(g).or_default() += 1;
    }
    let mut overlap = 0usize;
    for p in pred {
        if let Some(c) = counts.get_mut(p.as_str()).filter(|c| **c > 0) {
            *c -= 1;
            overlap += 1;
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Multiset token F1 on normalized text, maximized over golds.
pub fn token_f1(pred: &str, golds: &[String]) -> Result<f64, EvalError> {
    if golds.is_empty() {
        return Err(EvalError::EmptyGolds(String::new()));
    }
    let p = f1_tokens(pred);
    Ok(golds
        .iter()
        .map(|g| f1_single(&p, &f1_tokens(g)))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTask {
    Extractive,
    #[serde(alias = "yes_no")]
    Yesno,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<YesNo>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GoldSet {
    Extractive(BTreeMap<String, Vec<String>>),
    YesNo(BTreeMap<String, YesNo>),
}

impl GoldSet {
    pub fn task(&self) -> EvalTask {
        match self {
            GoldSet::Extractive(_) => EvalTask::Extractive,
            GoldSet::YesNo(_) => EvalTask::Yesno,
        }
    }

    fn ids(&self) -> Vec<&String> {
        match self {
            GoldSet::Extractive(m) => m.keys().collect(),
            GoldSet::YesNo(m) => m.keys().collect(),
        }
    }
}

/// EM and F1 are percentages; accuracy is a fraction in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: EvalTask,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<RunProvenance>,
}

fn index_predictions<'a>(gold: &GoldSet, preds: &'a [Prediction]) -> Result<HashMap<&'a str, &'a Prediction>, EvalError> {
    let mut by_id = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.id.clone()));
        }
    }
    let gold_ids = gold.ids();
    let missing: Vec<String> = gold_ids.iter().filter(|id| !by_id.contains_key(id.as_str())).map(|s| s.to_string()).collect();
    let known: std::collections::HashSet<&str> = gold_ids.iter().map(|s| s.as_str()).collect();
    let mut extra: Vec<String> = preds.iter().filter(|p| !known.contains(p.id.as_str())).map(|p| p.id.clone()).collect();
    extra.sort();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(EvalError::IdMismatch { missing, extra });
    }
    Ok(by_id)
}

/// Scores predictions against the gold set. Every gold id needs exactly
/// one prediction. Sums run in id order, so the report does not depend on
/// prediction order.
pub fn evaluate(gold: &GoldSet, preds: &[Prediction]) -> Result<EvalReport, EvalError> {
    let by_id = index_predictions(gold, preds)?;
    let mut report = EvalReport {
        task: gold.task(),
        n: 0,
        exact_match: None,
        f1: None,
        accuracy: None,
        provenance: None,
    };
    match gold {
        GoldSet::Extractive(golds) => {
            if golds.is_empty() {
                return Err(EvalError::NoInstances);
            }
            let (mut em, mut f1) = (0.0, 0.0);
            for (id, answers) in golds {
                if answers.is_empty() {
                    return Err(EvalError::EmptyGolds(id.clone()));
                }
                let text = by_id[id.as_str()]
                    .predicted_text
                    .as_deref()
                    .ok_or_else(|| EvalError::WrongKind(id.clone(), "predicted_text"))?;
                em += f64::from(exact_match(text, answers)?);
                f1 += token_f1(text, answers)?;
            }
            let n = golds.len() as f64;
            report.n = golds.len();
            report.exact_match = Some(100.0 * em / n);
            report.f1 = Some(100.0 * f1 / n);
        }
        GoldSet::YesNo(labels) => {
            if labels.is_empty() {
                return Err(EvalError::NoInstances);
            }
            let mut correct = 0usize;
            for (id, label) in labels {
                let pred = by_id[id.as_str()]
                    .predicted_label
                    .ok_or_else(|| EvalError::WrongKind(id.clone(), "predicted_label"))?;
                correct += usize::from(pred == *label);
            }
            report.n = labels.len();
            report.accuracy = Some(correct as f64 / labels.len() as f64);
        }
    }
    Ok(report)
}

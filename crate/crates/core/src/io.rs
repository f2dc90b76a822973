//! On-disk formats: SQuAD-v1.1 style extractive datasets, yes/no JSONL,
//! PubMedQA source files, and atomic writes.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DatasetSubsetId, Provenance, QAPair, YesNo, YesNoInstance};
use crate::weak_label::LabelSource;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| FormatError::Invalid {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).map_err(|e| FormatError::io(path, e))
}

fn read_to_string(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

/// Identifies the run that produced an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
}

impl RunProvenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        RunProvenance {
            config_hash: config_hash.into(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadAnswer {
    pub text: String,
    pub answer_start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadQa {
    pub id: String,
    pub question: String,
    pub answers: Vec<SquadAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadParagraph {
    pub context: String,
    pub qas: Vec<SquadQa>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadArticle {
    pub title: String,
    pub paragraphs: Vec<SquadParagraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadDataset {
    pub version: String,
    pub data: Vec<SquadArticle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<RunProvenance>,
}

impl SquadDataset {
    /// One article per pair, titled by the pair id, in input order.
    pub fn from_pairs(pairs: &[QAPair], provenance: Option<RunProvenance>) -> Self {
        SquadDataset {
            version: "1.1".into(),
            data: pairs
                .iter()
                .map(|p| SquadArticle {
                    title: p.id.clone(),
                    paragraphs: vec![SquadParagraph {
                        context: p.context.clone(),
                        qas: vec![SquadQa {
                            id: p.id.clone(),
                            question: p.question.clone(),
                            answers: vec![SquadAnswer {
                                text: p.answer_text.clone(),
                                answer_start: p.answer_start,
                            }],
                        }],
                    }],
                })
                .collect(),
            provenance,
        }
    }

    /// Flattens back into pairs using each question's first answer.
    pub fn to_pairs(&self, subset: DatasetSubsetId, provenance: Provenance) -> Vec<QAPair> {
        let mut out = Vec::new();
        for article in &self.data {
            for para in &article.paragraphs {
                for qa in &para.qas {
                    let Some(first) = qa.answers.first() else { continue };
                    out.push(QAPair {
                        id: qa.id.clone(),
                        question: qa.question.clone(),
                        context: para.context.clone(),
                        answer_text: first.text.clone(),
                        answer_start: first.answer_start,
                        subset,
                        provenance,
                    });
                }
            }
        }
        out
    }

    /// Gold answer texts keyed by question id.
    pub fn gold_answers(&self) -> BTreeMap<String, Vec<String>> {
        let mut out = BTreeMap::new();
        for article in &self.data {
            for para in &article.paragraphs {
                for qa in &para.qas {
                    out.insert(
                        qa.id.clone(),
                        qa.answers.iter().map(|a| a.text.clone()).collect(),
                    );
                }
            }
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        serde_json::from_str(&read_to_string(path)?).map_err(|source| FormatError::Json {
            path: path.display().to_string(),
            line: source.line(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        write_json(path, self)
    }
}

/// Reads JSON lines, skipping blank lines.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, FormatError> {
    let file = std::fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| FormatError::Json {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn jsonl_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), FormatError> {
    write_atomic(path, &jsonl_bytes(items)).map_err(|e| FormatError::io(path, e))
}

#[derive(Deserialize)]
struct PubmedQaEntry {
    #[serde(rename = "QUESTION")]
    question: String,
    #[serde(rename = "CONTEXTS", default)]
    contexts: Vec<String>,
    #[serde(rename = "LONG_ANSWER", default)]
    long_answer: String,
    #[serde(default)]
    final_decision: Option<String>,
}

/// A yes/no collection read from disk, with everything needed both for
/// extractive labeling and for yes/no schedules.
#[derive(Debug, Clone, Default)]
pub struct PubmedQaSource {
    pub label_sources: Vec<LabelSource>,
    pub yes_no: Vec<YesNoInstance>,
    /// Records whose decision was neither yes nor no.
    pub dropped_labels: usize,
}

#[derive(Deserialize)]
struct FlatSource {
    id: String,
    question: String,
    #[serde(default)]
    conclusions: String,
    #[serde(default)]
    context: Option<String>,
    #[serde(default)]
    label: Option<String>,
}

/// Reads either the PubMedQA release layout (a JSON object keyed by pmid with
/// `QUESTION`, `CONTEXTS`, `LONG_ANSWER`, `final_decision`) or JSON lines of
/// `{id, question, conclusions, context?, label?}`. Records are ordered by id
/// for the keyed layout and kept in file order for JSON lines.
pub fn read_pubmedqa(path: &Path) -> Result<PubmedQaSource, FormatError> {
    let text = read_to_string(path)?;
    let mut out = PubmedQaSource::default();
    let push_yes_no = |id: &str, q: &str, ctx: &str, label: Option<&str>, out: &mut PubmedQaSource| {
        match label.map(str::parse::<YesNo>) {
            Some(Ok(label)) if !ctx.trim().is_empty() => out.yes_no.push(YesNoInstance {
                id: id.to_string(),
                question: q.to_string(),
                context: ctx.to_string(),
                label,
            }),
            None => {}
            _ => out.dropped_labels += 1,
        }
    };

    if let Ok(keyed) = serde_json::from_str::<BTreeMap<String, PubmedQaEntry>>(&text) {
        for (id, e) in keyed {
            let context = e.contexts.join(" ");
            push_yes_no(&id, &e.question, &context, e.final_decision.as_deref(), &mut out);
            out.label_sources.push(LabelSource {
                id,
                question: e.question,
                conclusions: e.long_answer,
            });
        }
        return Ok(out);
    }

    for flat in read_jsonl::<FlatSource>(path)? {
        let context = flat.context.as_deref().unwrap_or(&flat.conclusions);
        push_yes_no(&flat.id, &flat.question, context, flat.label.as_deref(), &mut out);
        out.label_sources.push(LabelSource {
            id: flat.id,
            question: flat.question,
            conclusions: flat.conclusions,
        });
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = out.label_sources.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(FormatError::Invalid {
            path: path.display().to_string(),
            reason: format!("duplicate id `{}`", dup.id),
        });
    }
    Ok(out)
}

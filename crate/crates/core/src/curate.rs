//! COVID-specific QA curation.
//!
//! Two routes: parameterized template questions whose answers a reviewer
//! selects from candidate sentences (`d3`), and fully automatic pairs built
//! from abstracts that carry a question and a conclusion section (`d4`).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bm25::Bm25Params;
use crate::corpus::{
    segment_sentences, AbstractSection, DatasetSubsetId, Provenance, QAPair, Sentence,
    StructuredAbstract,
};
use crate::weak_label::weak_label;

#[derive(Debug, Error)]
pub enum CurateError {
    #[error("template `{template}`: {reason}")]
    Template { template: String, reason: String },
    #[error("template `{template}` references unknown vocabulary `{vocabulary}`")]
    UnknownVocabulary { template: String, vocabulary: String },
    #[error("vocabulary `{0}` has no values")]
    EmptyVocabulary(String),
    #[error("vocabulary `{name}`: value `{value}` has arity {got}, expected {expected}")]
    MixedArity {
        name: String,
        value: String,
        got: usize,
        expected: usize,
    },
    #[error("candidate for question `{question}` / pmid {pmid} already reviewed")]
    AlreadyReviewed { question: String, pmid: String },
    #[error("review queue {path}: {reason}")]
    Queue { path: String, reason: String },
    #[error("review queue {path}: invalid selections for {offenders:?}")]
    Selection { path: String, offenders: Vec<String> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// A vocabulary value: a single term, or a tuple filling consecutive slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Single(String),
    Tuple(Vec<String>),
}

impl ParamValue {
    pub fn terms(&self) -> Vec<&str> {
        match self {
            ParamValue::Single(s) => vec![s.as_str()],
            ParamValue::Tuple(v) => v.iter().map(String::as_str).collect(),
        }
    }

    fn key(&self) -> String {
        self.terms().join("/").to_lowercase()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterVocabulary {
    pub name: String,
    pub values: Vec<ParamValue>,
    /// Alternate spellings searched alongside a term.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aliases: BTreeMap<String, Vec<String>>,
}

impl ParameterVocabulary {
    pub fn new(name: &str, values: &[&str]) -> Self {
        ParameterVocabulary {
            name: name.to_string(),
            values: values.iter().map(|v| ParamValue::Single(v.to_string())).collect(),
            aliases: BTreeMap::new(),
        }
    }

    /// Drops case-insensitive duplicates (first occurrence wins) and checks
    /// that values are non-empty and share one arity.
    pub fn normalized(mut self) -> Result<Self, CurateError> {
        let mut seen = HashSet::new();
        self.values.retain(|v| {
            let fresh = seen.insert(v.key());
            if !fresh {
                warn!("vocabulary `{}`: dropping duplicate value `{}`", self.name, v.key());
            }
            fresh
        });
        self.arity()?;
        Ok(self)
    }

    pub fn arity(&self) -> Result<usize, CurateError> {
        let first = self
            .values
            .first()
            .ok_or_else(|| CurateError::EmptyVocabulary(self.name.clone()))?;
        let expected = first.terms().len();
        for v in &self.values {
            let got = v.terms().len();
            if got != expected || v.terms().iter().any(|t| t.trim().is_empty()) {
                return Err(CurateError::MixedArity {
                    name: self.name.clone(),
                    value: v.key(),
                    got,
                    expected,
                });
            }
        }
        Ok(expected)
    }

    fn spellings<'a>(&'a self, term: &'a str) -> Vec<&'a str> {
        let mut out = vec![term];
        if let Some(alts) = self.aliases.get(term) {
            out.extend(alts.iter().map(String::as_str));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub template_id: String,
    /// Text with bracketed slots such as `[CONDITION]`.
    pub pattern: String,
    /// Vocabulary names in slot order. A tuple vocabulary fills as many
    /// consecutive slots as its arity.
    pub slot_types: Vec<String>,
}

/// Byte ranges of `[SLOT]` markers in a pattern.
fn slot_spans(pattern: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut rest = 0;
    while let Some(open) = pattern[rest..].find('[').map(|o| o + rest) {
        let Some(close) = pattern[open..].find(']').map(|c| c + open) else {
            break;
        };
        let inner = &pattern[open + 1..close];
        if !inner.is_empty() && inner.chars().all(|c| c.is_ascii_uppercase() || c == '_') {
            spans.push((open, close + 1));
        }
        rest = close + 1;
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateInstance {
    pub template_id: String,
    pub question: String,
    pub parameters: Vec<String>,
    /// Vocabulary each parameter came from, aligned with `parameters`.
    #[serde(skip)]
    pub parameter_sources: Vec<String>,
}

/// Fills every template with the Cartesian product of its vocabularies, in
/// template order and then vocabulary order.
pub fn instantiate_templates(
    templates: &[QuestionTemplate],
    vocabs: &[ParameterVocabulary],
) -> Result<Vec<TemplateInstance>, CurateError> {
    let by_name: HashMap<&str, &ParameterVocabulary> =
        vocabs.iter().map(|v| (v.name.as_str(), v)).collect();
    let mut out = Vec::new();
    for t in templates {
        let spans = slot_spans(&t.pattern);
        if spans.is_empty() {
            return Err(CurateError::Template {
                template: t.template_id.clone(),
                reason: "pattern has no [SLOT]".into(),
            });
        }
        let mut groups = Vec::with_capacity(t.slot_types.len());
        let mut arity_total = 0;
        for name in &t.slot_types {
            let vocab = by_name.get(name.as_str()).ok_or_else(|| CurateError::UnknownVocabulary {
                template: t.template_id.clone(),
                vocabulary: name.clone(),
            })?;
            arity_total += vocab.arity()?;
            groups.push(*vocab);
        }
        if arity_total != spans.len() {
            return Err(CurateError::Template {
                template: t.template_id.clone(),
                reason: format!(
                    "{} slots but slot types supply {arity_total} values",
                    spans.len()
                ),
            });
        }

        // Odometer over the vocabularies; the last vocabulary varies fastest.
        let mut idx = vec![0usize; groups.len()];
        'odometer: loop {
            let mut params = Vec::with_capacity(spans.len());
            let mut sources = Vec::with_capacity(spans.len());
            for (g, &i) in groups.iter().zip(&idx) {
                for term in g.values[i].terms() {
                    params.push(term.to_string());
                    sources.push(g.name.clone());
                }
            }
            let mut question = String::with_capacity(t.pattern.len());
            let mut last = 0;
            for ((s, e), p) in spans.iter().zip(&params) {
                question.push_str(&t.pattern[last..*s]);
                question.push_str(p);
                last = *e;
            }
            question.push_str(&t.pattern[last..]);
            out.push(TemplateInstance {
                template_id: t.template_id.clone(),
                question,
                parameters: params,
                parameter_sources: sources,
            });

            for g in (0..groups.len()).rev() {
                idx[g] += 1;
                if idx[g] < groups[g].values.len() {
                    continue 'odometer;
                }
                idx[g] = 0;
            }
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationConfig {
    pub templates: Vec<QuestionTemplate>,
    pub vocabularies: Vec<ParameterVocabulary>,
}

impl CurationConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn normalized(self) -> Result<Self, CurateError> {
        let vocabularies = self
            .vocabularies
            .into_iter()
            .map(ParameterVocabulary::normalized)
            .collect::<Result<_, _>>()?;
        Ok(CurationConfig {
            templates: self.templates,
            vocabularies,
        })
    }

    /// Risk and adverse-effect templates with the published parameter values.
    pub fn builtin() -> Self {
        let mut treatments = ParameterVocabulary::new(
            "TREATMENT",
            &[
                "Azithromycin",
                "Dexamethasone",
                "Hydroxychloroquine",
                "Infliximab",
                "Ivermectin",
                "Tocilizuma",
            ],
        );
        treatments
            .aliases
            .insert("Tocilizuma".into(), vec!["Tocilizumab".into()]);
        let pairs = ParameterVocabulary {
            name: "TREATMENT_CONDITION".into(),
            values: [
                ("Dexamethasone", "arthritis"),
                ("Dexamethasone", "post-operative nausea"),
                ("Dexamethasone", "chemotherapy-induced nausea"),
            ]
            .iter()
            .map(|(t, c)| ParamValue::Tuple(vec![t.to_string(), c.to_string()]))
            .collect(),
            aliases: BTreeMap::new(),
        };
        CurationConfig {
            templates: vec![
                QuestionTemplate {
                    template_id: "risk".into(),
                    pattern: "What risks does a person with [CONDITION] face with respect to COVID-19?"
                        .into(),
                    slot_types: vec!["CONDITION".into()],
                },
                QuestionTemplate {
                    template_id: "adverse_effect".into(),
                    pattern: "What adverse effects are associated with [TREATMENT]?".into(),
                    slot_types: vec!["TREATMENT".into()],
                },
                QuestionTemplate {
                    template_id: "adverse_effect_condition".into(),
                    pattern: "What adverse effects are associated with [TREATMENT] for [CONDITION]?"
                        .into(),
                    slot_types: vec!["TREATMENT_CONDITION".into()],
                },
            ],
            vocabularies: vec![
                ParameterVocabulary::new(
                    "CONDITION",
                    &[
                        "asthma",
                        "cardiovascular disease",
                        "diabetes",
                        "kidney disease",
                        "obesity",
                    ],
                ),
                treatments,
                pairs,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchField {
    AbstractText,
    SectionLabels,
    Keywords,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovidFilterPolicy {
    pub phrases: Vec<String>,
    /// Abstracts published before this date are ignored.
    pub cutoff_date: NaiveDate,
    pub fields_searched: Vec<SearchField>,
}

impl Default for CovidFilterPolicy {
    fn default() -> Self {
        CovidFilterPolicy {
            phrases: vec!["COVID".into(), "SARS-CoV-2".into(), "novel coronavirus".into()],
            cutoff_date: NaiveDate::from_ymd_opt(2019, 11, 1).expect("valid date"),
            fields_searched: vec![
                SearchField::AbstractText,
                SearchField::SectionLabels,
                SearchField::Keywords,
            ],
        }
    }
}

fn contains_ci(haystack: &str, needle_lower: &str) -> bool {
    haystack.to_lowercase().contains(needle_lower)
}

/// True when the abstract is dated on or after the cutoff and mentions one of
/// the phrases (case-insensitively) in a searched field. Undated abstracts
/// never pass.
pub fn covid_filter(a: &StructuredAbstract, policy: &CovidFilterPolicy) -> bool {
    let Some(date) = a.pub_date else {
        debug!("pmid {}: no pub_date, rejected", a.pmid);
        return false;
    };
    if date < policy.cutoff_date {
        return false;
    }
    let phrases: Vec<String> = policy.phrases.iter().map(|p| p.to_lowercase()).collect();
    let hit = |s: &str| phrases.iter().any(|p| contains_ci(s, p));
    policy.fields_searched.iter().any(|f| match f {
        SearchField::AbstractText => a.sections.iter().any(|s| hit(&s.text)),
        SearchField::SectionLabels => a.sections.iter().any(|s| hit(&s.label)),
        SearchField::Keywords => a.keywords.iter().any(|k| hit(k)),
    })
}

/// The question of an abstract: its QUESTION section if present, otherwise
/// its title when the title contains '?'.
pub fn extract_question(a: &StructuredAbstract) -> Option<String> {
    a.sections
        .iter()
        .find(|s| s.label.contains("QUESTION") && !s.degenerate)
        .map(|s| s.text.trim().to_string())
        .or_else(|| a.title.contains('?').then(|| a.title.trim().to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConclusionRules {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

impl Default for ConclusionRules {
    fn default() -> Self {
        ConclusionRules {
            include: ["ANSWER", "CONCLUSION", "CONCULSION", "CONLUSION"]
                .map(String::from)
                .to_vec(),
            exclude: ["RESULT", "SUMMARY", "FINDING", "DISCUSSION"]
                .map(String::from)
                .to_vec(),
        }
    }
}

impl ConclusionRules {
    pub fn accepts(&self, label: &str) -> bool {
        let label = label.to_uppercase();
        self.include.iter().any(|k| label.contains(&k.to_uppercase()))
            && !self.exclude.iter().any(|k| label.contains(&k.to_uppercase()))
    }
}

/// First section whose label qualifies as a conclusion or answer.
pub fn extract_conclusion_section<'a>(
    a: &'a StructuredAbstract,
    rules: &ConclusionRules,
) -> Option<&'a AbstractSection> {
    a.sections.iter().find(|s| rules.accepts(&s.label))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedAbstract {
    pub pmid: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ArtificialPairs {
    pub pairs: Vec<QAPair>,
    pub skipped: Vec<SkippedAbstract>,
    /// Abstracts rejected by the COVID filter.
    pub filtered_out: usize,
}

/// Builds `d4`: filter, extract question and conclusion, then BM25-label.
/// Output is sorted by pmid.
pub fn build_artificial_pairs(
    corpus: &[StructuredAbstract],
    policy: &CovidFilterPolicy,
    rules: &ConclusionRules,
    params: &Bm25Params,
) -> ArtificialPairs {
    let mut sorted: Vec<&StructuredAbstract> = corpus.iter().collect();
    sorted.sort_by(|a, b| a.pmid.cmp(&b.pmid));
    let mut out = ArtificialPairs::default();
    for a in sorted {
        if !covid_filter(a, policy) {
            out.filtered_out += 1;
            continue;
        }
        let mut skip = |reason: String| {
            debug!("pmid {}: {reason}", a.pmid);
            out.skipped.push(SkippedAbstract {
                pmid: a.pmid.clone(),
                reason,
            });
        };
        let Some(question) = extract_question(a) else {
            skip("no question".into());
            continue;
        };
        let Some(section) = extract_conclusion_section(a, rules) else {
            skip("no conclusion section".into());
            continue;
        };
        match weak_label(&question, &section.text, params) {
            Ok(label) => out.pairs.push(label.into_pair(
                format!("d4-{}", a.pmid),
                question,
                DatasetSubsetId::D4,
                Provenance::PubmedArtificial,
            )),
            Err(e) => skip(e.to_string()),
        }
    }
    out
}

/// Search string for an external PubMed query: each parameter (with its
/// aliases) ANDed together and with the COVID phrases.
pub fn search_query(
    instance: &TemplateInstance,
    vocabs: &[ParameterVocabulary],
    policy: &CovidFilterPolicy,
) -> String {
    let quote = |s: &str| format!("\"{s}\"");
    let mut clauses = Vec::new();
    for (param, source) in instance.parameters.iter().zip(&instance.parameter_sources) {
        let spellings: Vec<String> = vocabs
            .iter()
            .find(|v| &v.name == source)
            .map(|v| v.spellings(param))
            .unwrap_or_else(|| vec![param.as_str()])
            .into_iter()
            .map(quote)
            .collect();
        clauses.push(if spellings.len() == 1 {
            spellings.into_iter().next().unwrap()
        } else {
            format!("({})", spellings.join(" OR "))
        });
    }
    if !policy.phrases.is_empty() {
        let phrases: Vec<String> = policy.phrases.iter().map(|p| quote(p)).collect();
        clauses.push(format!("({})", phrases.join(" OR ")));
    }
    clauses.join(" AND ")
}

/// Local stand-in for the search step: every parameter (or one of its
/// aliases) and one COVID phrase must appear in the abstract.
pub fn matches_instance(
    a: &StructuredAbstract,
    instance: &TemplateInstance,
    vocabs: &[ParameterVocabulary],
    policy: &CovidFilterPolicy,
) -> bool {
    let mut haystack = a.title.to_lowercase();
    for s in &a.sections {
        haystack.push('\n');
        haystack.push_str(&s.text.to_lowercase());
    }
    for k in &a.keywords {
        haystack.push('\n');
        haystack.push_str(&k.to_lowercase());
    }
    let params_ok = instance
        .parameters
        .iter()
        .zip(&instance.parameter_sources)
        .all(|(p, source)| {
            let spellings = vocabs
                .iter()
                .find(|v| &v.name == source)
                .map(|v| v.spellings(p))
                .unwrap_or_else(|| vec![p.as_str()]);
            spellings.iter().any(|s| haystack.contains(&s.to_lowercase()))
        });
    params_ok && covid_filter(a, policy)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurationCandidate {
    pub question: String,
    pub pmid: String,
    pub candidate_sentences: Vec<Sentence>,
    pub selected_index: Option<usize>,
}

fn is_result_or_conclusion(label: &str, rules: &ConclusionRules) -> bool {
    label.contains("RESULT") || rules.accepts(label)
}

/// Review candidates for each instance: abstracts matching the instance,
/// sorted by pmid and capped at `queue_depth`, with sentences drawn from their
/// Results and Conclusions sections.
pub fn collect_candidates(
    instances: &[TemplateInstance],
    corpus: &[StructuredAbstract],
    vocabs: &[ParameterVocabulary],
    policy: &CovidFilterPolicy,
    rules: &ConclusionRules,
    queue_depth: usize,
) -> Vec<CurationCandidate> {
    let mut sorted: Vec<&StructuredAbstract> = corpus.iter().collect();
    sorted.sort_by(|a, b| a.pmid.cmp(&b.pmid));
    let mut out = Vec::new();
    for inst in instances {
        let mut taken = 0;
        for a in &sorted {
            if taken == queue_depth {
                break;
            }
            if !matches_instance(a, inst, vocabs, policy) {
                continue;
            }
            let sentences: Vec<Sentence> = a
                .sections
                .iter()
                .filter(|s| !s.degenerate && is_result_or_conclusion(&s.label, rules))
                .flat_map(|s| segment_sentences(&s.text))
                .collect();
            if sentences.is_empty() {
                continue;
            }
            taken += 1;
            out.push(CurationCandidate {
                question: inst.question.clone(),
                pmid: a.pmid.clone(),
                candidate_sentences: sentences,
                selected_index: None,
            });
        }
        if taken < queue_depth {
            debug!("`{}`: {taken} of {queue_depth} candidates", inst.question);
        }
    }
    out
}

const QUEUE_HEADER: [&str; 5] = ["question", "pmid", "sentence_index", "sentence_text", "selected"];

/// Writes the review queue as TSV, one row per candidate sentence with the
/// `selected` column blank.
pub fn write_review_queue<W: Write>(
    candidates: &[CurationCandidate],
    writer: W,
) -> Result<(), CurateError> {
    let csv_err = |source| CurateError::Csv {
        path: "<writer>".into(),
        source,
    };
    if let Some(c) = candidates.iter().find(|c| c.selected_index.is_some()) {
        return Err(CurateError::AlreadyReviewed {
            question: c.question.clone(),
            pmid: c.pmid.clone(),
        });
    }
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(QUEUE_HEADER).map_err(csv_err)?;
    for c in candidates {
        for (i, s) in c.candidate_sentences.iter().enumerate() {
            w.write_record([c.question.as_str(), &c.pmid, &i.to_string(), &s.text, ""])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|source| CurateError::Io {
        path: "<writer>".into(),
        source,
    })
}

pub fn export_review_queue(
    candidates: &[CurationCandidate],
    path: &Path,
) -> Result<(), CurateError> {
    let mut buf = Vec::new();
    write_review_queue(candidates, &mut buf)?;
    crate::io::write_atomic(path, &buf).map_err(|source| CurateError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ReviewImport {
    pub pairs: Vec<QAPair>,
    /// `question / pmid` groups with no selection.
    pub unreviewed: Vec<String>,
}

/// Reads a reviewed queue. Each (question, pmid) group with exactly one row
/// marked `x` becomes a pair whose context is the group's sentences joined by
/// single spaces. Groups with no mark are reported, not emitted; groups with
/// more than one mark are an error.
pub fn read_review_queue<R: Read>(reader: R, origin: &str) -> Result<ReviewImport, CurateError> {
    let queue_err = |reason: String| CurateError::Queue {
        path: origin.to_string(),
        reason,
    };
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .from_reader(reader);
    let header = r
        .headers()
        .map_err(|source| CurateError::Csv {
            path: origin.to_string(),
            source,
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != QUEUE_HEADER {
        return Err(queue_err(format!("unexpected header {:?}", header)));
    }

    struct Group {
        question: String,
        pmid: String,
        sentences: Vec<String>,
        selected: Vec<usize>,
    }
    let mut order: Vec<Group> = Vec::new();
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    for (row_no, rec) in r.records().enumerate() {
        let rec = rec.map_err(|source| CurateError::Csv {
            path: origin.to_string(),
            source,
        })?;
        let line = row_no + 2;
        let (question, pmid, idx, text, mark) = (&rec[0], &rec[1], &rec[2], &rec[3], rec[4].trim());
        let key = (question.to_string(), pmid.to_string());
        let g = *index.entry(key).or_insert_with(|| {
            order.push(Group {
                question: question.to_string(),
                pmid: pmid.to_string(),
                sentences: Vec::new(),
                selected: Vec::new(),
            });
            order.len() - 1
        });
        let group = &mut order[g];
        let expected = group.sentences.len();
        if idx.trim().parse::<usize>().ok() != Some(expected) {
            return Err(queue_err(format!(
                "line {line}: sentence_index `{idx}` out of sequence (expected {expected})"
            )));
        }
        match mark {
            "" => {}
            m if m.eq_ignore_ascii_case("x") => group.selected.push(expected),
            other => return Err(queue_err(format!("line {line}: unrecognized mark `{other}`"))),
        }
        group.sentences.push(text.to_string());
    }

    let offenders: Vec<String> = order
        .iter()
        .filter(|g| g.selected.len() > 1)
        .map(|g| format!("{} / {}", g.question, g.pmid))
        .collect();
    if !offenders.is_empty() {
        return Err(CurateError::Selection {
            path: origin.to_string(),
            offenders,
        });
    }

    let mut out = ReviewImport::default();
    let mut question_ids: HashMap<String, usize> = HashMap::new();
    for g in &order {
        let Some(&sel) = g.selected.first() else {
            out.unreviewed.push(format!("{} / {}", g.question, g.pmid));
            continue;
        };
        let next = question_ids.len();
        let qid = *question_ids.entry(g.question.clone()).or_insert(next);
        let answer_start: usize = g.sentences[..sel]
            .iter()
            .map(|s| s.chars().count() + 1)
            .sum();
        out.pairs.push(QAPair {
            id: format!("d3-q{qid}-{}", g.pmid),
            question: g.question.clone(),
            context: g.sentences.join(" "),
            answer_text: g.sentences[sel].clone(),
            answer_start,
            subset: DatasetSubsetId::D3,
            provenance: Provenance::TemplateManual,
        });
    }
    if !out.unreviewed.is_empty() {
        warn!("{origin}: {} unreviewed candidate(s) excluded", out.unreviewed.len());
    }
    Ok(out)
}

pub fn import_review_queue(path: &Path) -> Result<ReviewImport, CurateError> {
    let file = std::fs::File::open(path).map_err(|source| CurateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_review_queue(file, &path.display().to_string())
}

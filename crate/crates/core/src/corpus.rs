//! Structured abstracts, QA instances and the sentence segmenter shared by
//! every downstream stage.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: invalid record: missing or empty field `{field}`")]
    MissingField { line: usize, field: String },
    #[error("line {line}: invalid pub_date `{value}` (expected YYYY-MM-DD)")]
    BadDate { line: usize, value: String },
    #[error("line {line}: duplicate pmid `{pmid}`")]
    DuplicatePmid { line: usize, pmid: String },
    #[error("line {line}: read failure: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

/// Subsets of training data. `d1`..`d4` are the extractive subsets; `pqa_l`
/// and `pqa_a` are the original yes/no collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSubsetId {
    /// Repurposed PQA-L.
    D1,
    /// Repurposed PQA-A.
    D2,
    /// Parameterized COVID questions with manually selected answers.
    D3,
    /// Automatically labelled COVID abstracts.
    D4,
    PqaL,
    PqaA,
}

impl DatasetSubsetId {
    pub const ALL: [DatasetSubsetId; 6] = [
        DatasetSubsetId::D1,
        DatasetSubsetId::D2,
        DatasetSubsetId::D3,
        DatasetSubsetId::D4,
        DatasetSubsetId::PqaL,
        DatasetSubsetId::PqaA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetSubsetId::D1 => "d1",
            DatasetSubsetId::D2 => "d2",
            DatasetSubsetId::D3 => "d3",
            DatasetSubsetId::D4 => "d4",
            DatasetSubsetId::PqaL => "pqa_l",
            DatasetSubsetId::PqaA => "pqa_a",
        }
    }

    /// Whether the subset holds extractive pairs (as opposed to yes/no).
    pub fn is_extractive(self) -> bool {
        !matches!(self, DatasetSubsetId::PqaL | DatasetSubsetId::PqaA)
    }
}

impl fmt::Display for DatasetSubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetSubsetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DatasetSubsetId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown dataset subset `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractSection {
    /// Trimmed, uppercased label.
    pub label: String,
    pub text: String,
    /// Set when `text` is blank. Such sections are kept so curation rules can
    /// reject the abstract.
    pub degenerate: bool,
}

impl AbstractSection {
    pub fn new(label: &str, text: impl Into<String>) -> Self {
        let text = text.into();
        AbstractSection {
            label: label.trim().to_uppercase(),
            degenerate: text.trim().is_empty(),
            text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredAbstract {
    pub pmid: String,
    pub title: String,
    pub pub_date: Option<NaiveDate>,
    pub keywords: Vec<String>,
    pub sections: Vec<AbstractSection>,
}

#[derive(Deserialize)]
struct RawSection {
    label: Option<String>,
    #[serde(default)]
    text: String,
}

#[derive(Deserialize)]
struct RawAbstract {
    pmid: Option<String>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    pub_date: Option<String>,
    #[serde(default)]
    keywords: Vec<String>,
    sections: Option<Vec<RawSection>>,
}

#[derive(Serialize)]
struct OutSection<'a> {
    label: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct OutAbstract<'a> {
    pmid: &'a str,
    title: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub_date: Option<String>,
    keywords: &'a [String],
    sections: Vec<OutSection<'a>>,
}

impl StructuredAbstract {
    /// Serializes to one JSON line in the corpus schema.
    pub fn to_json_line(&self) -> String {
        let out = OutAbstract {
            pmid: &self.pmid,
            title: &self.title,
            pub_date: self.pub_date.map(|d| d.format("%Y-%m-%d").to_string()),
            keywords: &self.keywords,
            sections: self
                .sections
                .iter()
                .map(|s| OutSection {
                    label: &s.label,
                    text: &s.text,
                })
                .collect(),
        };
        serde_json::to_string(&out).expect("abstract serialization cannot fail")
    }

    pub fn section(&self, label: &str) -> Option<&AbstractSection> {
        self.sections.iter().find(|s| s.label == label)
    }
}

/// Parses a single JSON-lines record. Errors report `line` 1; use
/// [`read_corpus`] for real line numbers.
pub fn parse_abstract_record(record: &str) -> Result<StructuredAbstract, CorpusError> {
    parse_record_at(record, 1)
}

fn parse_record_at(record: &str, line: usize) -> Result<StructuredAbstract, CorpusError> {
    let raw: RawAbstract =
        serde_json::from_str(record).map_err(|source| CorpusError::Json { line, source })?;
    let missing = |field: &str| CorpusError::MissingField {
        line,
        field: field.to_string(),
    };

    let pmid = raw
        .pmid
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .ok_or_else(|| missing("pmid"))?;
    let raw_sections = raw.sections.ok_or_else(|| missing("sections"))?;
    let mut sections = Vec::with_capacity(raw_sections.len());
    for s in raw_sections {
        let label = s.label.unwrap_or_default();
        if label.trim().is_empty() {
            return Err(missing("sections.label"));
        }
        sections.push(AbstractSection::new(&label, s.text));
    }
    let pub_date = match raw.pub_date.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(value) => Some(NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|_| {
            CorpusError::BadDate {
                line,
                value: value.to_string(),
            }
        })?),
    };

    Ok(StructuredAbstract {
        pmid,
        title: raw.title,
        pub_date,
        keywords: raw.keywords,
        sections,
    })
}

/// Reads a JSON-lines corpus. Blank lines are skipped; pmids must be unique.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<StructuredAbstract>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            line: line_no,
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record_at(&line, line_no)?;
        if !seen.insert(record.pmid.clone()) {
            return Err(CorpusError::DuplicatePmid {
                line: line_no,
                pmid: record.pmid,
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// A sentence span. `start`/`end` are byte offsets into the parent text, so
/// `&parent[start..end] == text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

const ABBREVIATIONS: &[&str] = &[
    "vs", "e.g", "i.e", "dr", "fig", "figs", "al", "approx", "cf", "ca", "mr", "mrs", "ms",
    "prof", "eq", "ref", "vol", "jr", "sr", "st", "resp",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// True when the word ending right before byte `dot` is a known abbreviation.
fn abbreviation_before(text: &str, dot: usize) -> bool {
    let head = &text[..dot];
    let word_start = head
        .char_indices()
        .rev()
        .find(|&(_, c)| c.is_whitespace() || c == '(' || c == '[')
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    let word = head[word_start..].to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Splits `text` into sentences.
///
/// A boundary falls after a run of `.?!` (plus trailing quotes or brackets)
/// when followed by whitespace and then an uppercase letter or digit. Known
/// abbreviations never end a sentence, and no split happens inside an open
/// parenthesis that is closed later in the text. Decimal numbers never split
/// because the terminator is not followed by whitespace.
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let last_close = text.rfind(')');
    let mut sentences = Vec::new();
    let mut sent_start: Option<usize> = None;
    let mut depth = 0usize;
    let mut i = 0;

    let push = |start: usize, end: usize, out: &mut Vec<Sentence>| {
        out.push(Sentence {
            text: text[start..end].to_string(),
            start,
            end,
        });
    };

    while i < chars.len() {
        let (pos, c) = chars[i];
        if sent_start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            sent_start = Some(pos);
        }
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if !is_terminator(c) {
            i += 1;
            continue;
        }

        // Extend over the terminator run and any closers.
        let mut j = i + 1;
        while j < chars.len() && is_terminator(chars[j].1) {
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && is_closer(chars[k].1) {
            if chars[k].1 == ')' {
                depth = depth.saturating_sub(1);
            }
            k += 1;
        }
        let end = chars.get(k).map(|&(p, _)| p).unwrap_or(text.len());

        let mut m = k;
        while m < chars.len() && chars[m].1.is_whitespace() {
            m += 1;
        }
        let has_space = m > k;
        while m < chars.len() && is_opener(chars[m].1) {
            m += 1;
        }
        let next_ok = chars
            .get(m)
            .map(|&(_, n)| n.is_uppercase() || n.is_ascii_digit())
            .unwrap_or(false);
        let abbreviated = c == '.' && j == i + 1 && abbreviation_before(text, pos);
        let blocked = depth > 0 && last_close.is_some_and(|lc| lc > end);

        if has_space && next_ok && !abbreviated && !blocked {
            push(sent_start.take().unwrap(), end, &mut sentences);
        }
        i = k;
    }

    if let Some(start) = sent_start {
        let end = start + text[start..].trim_end().len();
        push(start, end, &mut sentences);
    }
    sentences
}

/// Lowercases, strips ASCII punctuation, drops the articles "a", "an", "the"
/// as whole tokens and collapses whitespace.
pub fn normalize_answer(text: &str) -> String {
    let stripped: String = text
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    stripped
        .split_whitespace()
        .filter(|t| !matches!(*t, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Converts a byte offset into `text` to a character offset.
pub fn byte_to_char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Converts a character offset into `text` to a byte offset, if in range.
pub fn char_to_byte_offset(text: &str, chars: usize) -> Option<usize> {
    if chars == 0 {
        return Some(0);
    }
    match text.char_indices().nth(chars) {
        Some((b, _)) => Some(b),
        None if text.chars().count() == chars => Some(text.len()),
        None => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Bm25Weak,
    TemplateManual,
    PubmedArtificial,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnchorError {
    #[error("pair `{0}`: question is empty")]
    EmptyQuestion(String),
    #[error("pair `{0}`: context is empty")]
    EmptyContext(String),
    #[error("pair `{id}`: answer does not occur at character offset {start}")]
    Misanchored { id: String, start: usize },
}

/// Extractive QA instance. `answer_start` is a character (not byte) offset
/// into `context`, matching the SQuAD convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: String,
    pub question: String,
    pub context: String,
    pub answer_text: String,
    pub answer_start: usize,
    pub subset: DatasetSubsetId,
    pub provenance: Provenance,
}

impl QAPair {
    /// Checks the non-empty and exact-substring anchoring invariants.
    pub fn validate(&self) -> Result<(), AnchorError> {
        if self.question.trim().is_empty() {
            return Err(AnchorError::EmptyQuestion(self.id.clone()));
        }
        if self.context.trim().is_empty() {
            return Err(AnchorError::EmptyContext(self.id.clone()));
        }
        let misanchored = || AnchorError::Misanchored {
            id: self.id.clone(),
            start: self.answer_start,
        };
        let b = char_to_byte_offset(&self.context, self.answer_start).ok_or_else(misanchored)?;
        if self.context[b..].starts_with(&self.answer_text) {
            Ok(())
        } else {
            Err(misanchored())
        }
    }

    /// Byte range of the answer inside the context.
    pub fn answer_byte_span(&self) -> Option<(usize, usize)> {
        let b = char_to_byte_offset(&self.context, self.answer_start)?;
        Some((b, b + self.answer_text.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YesNo {
    Yes,
    No,
}

impl FromStr for YesNo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" => Ok(YesNo::Yes),
            "no" => Ok(YesNo::No),
            other => Err(format!("unsupported label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesNoInstance {
    pub id: String,
    pub question: String,
    pub context: String,
    pub label: YesNo,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(s: &str) -> Vec<String> {
        segment_sentences(s).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn minimal_record() {
        let a = parse_abstract_record(
            r#"{"pmid":"1","title":"T?","pub_date":"2020-03-01","keywords":[],"sections":[{"label":"conclusions","text":"A."}]}"#,
        )
        .unwrap();
        assert_eq!(a.sections.len(), 1);
        assert_eq!(a.sections[0].label, "CONCLUSIONS");
        assert_eq!(a.pub_date, NaiveDate::from_ymd_opt(2020, 3, 1));
    }

    #[test]
    fn missing_pmid_names_field() {
        let err = parse_abstract_record(r#"{"title":"x","sections":[]}"#).unwrap_err();
        assert!(matches!(err, CorpusError::MissingField { ref field, .. } if field == "pmid"));
        assert!(err.to_string().contains("pmid"));
        let err = parse_abstract_record(r#"{"pmid":"2","title":"x"}"#).unwrap_err();
        assert!(err.to_string().contains("sections"));
    }

    #[test]
    fn label_trimmed_and_uppercased() {
        let a = parse_abstract_record(
            r#"{"pmid":"1","title":"","sections":[{"label":" Results ","text":"x"}]}"#,
        )
        .unwrap();
        assert_eq!(a.sections[0].label, "RESULTS");
        assert_eq!(a.pub_date, None);
    }

    #[test]
    fn empty_section_flagged_not_dropped() {
        let a = parse_abstract_record(
            r#"{"pmid":"1","title":"","sections":[{"label":"Methods","text":"  "},{"label":"Conclusions","text":"Ok."}]}"#,
        )
        .unwrap();
        assert_eq!(a.sections.len(), 2);
        assert!(a.sections[0].degenerate);
        assert!(!a.sections[1].degenerate);
    }

    #[test]
    fn corpus_errors_carry_line_numbers() {
        let input = "{\"pmid\":\"1\",\"sections\":[]}\n\n{not json}\n";
        match read_corpus(input.as_bytes()).unwrap_err() {
            CorpusError::Json { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let dup = "{\"pmid\":\"1\",\"sections\":[]}\n{\"pmid\":\"1\",\"sections\":[]}\n";
        assert!(matches!(
            read_corpus(dup.as_bytes()).unwrap_err(),
            CorpusError::DuplicatePmid { line: 2, .. }
        ));
        let bad_date = r#"{"pmid":"1","pub_date":"2020/01/01","sections":[]}"#;
        assert!(matches!(
            parse_abstract_record(bad_date).unwrap_err(),
            CorpusError::BadDate { .. }
        ));
    }

    #[test]
    fn segments_basic_examples() {
        assert_eq!(texts("A b. C d."), vec!["A b.", "C d."]);
        assert_eq!(
            texts("Dose was 3.5 mg. It worked."),
            vec!["Dose was 3.5 mg.", "It worked."]
        );
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("   \n ").is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            texts("Smith et al. Reported this. Risk vs. Benefit was weighed."),
            vec!["Smith et al. Reported this.", "Risk vs. Benefit was weighed."]
        );
        assert_eq!(
            texts("See Fig. 2 for details. Dr. Who agreed."),
            vec!["See Fig. 2 for details.", "Dr. Who agreed."]
        );
        assert_eq!(texts("Drugs, e.g. Aspirin, help."), vec!["Drugs, e.g. Aspirin, help."]);
    }

    #[test]
    fn questions_quotes_and_parentheses() {
        assert_eq!(
            texts("Does it work? Yes! \"Maybe.\" Then 5 more."),
            vec!["Does it work?", "Yes!", "\"Maybe.\"", "Then 5 more."]
        );
        assert_eq!(
            texts("Values rose (mean 2. Range 1-3) overall. Next one."),
            vec!["Values rose (mean 2. Range 1-3) overall.", "Next one."]
        );
        assert_eq!(texts("lowercase. next stays."), vec!["lowercase. next stays."]);
    }

    #[test]
    fn segments_unicode_offsets() {
        let t = "Über alles. Ärzte sagen ja.";
        for s in segment_sentences(t) {
            assert_eq!(&t[s.start..s.end], s.text);
        }
        assert_eq!(segment_sentences(t).len(), 2);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_answer("The Answer."), "answer");
        assert_eq!(
            normalize_answer("tear  gland   inflammation"),
            "tear gland inflammation"
        );
        assert_eq!(normalize_answer("An anomaly"), "anomaly");
        assert_eq!(normalize_answer(" A  the an "), "");
    }

    #[test]
    fn qapair_anchoring() {
        let mut p = QAPair {
            id: "q".into(),
            question: "Why?".into(),
            context: "Ärzte sagen. Ja wirklich.".into(),
            answer_text: "Ja wirklich.".into(),
            answer_start: 13,
            subset: DatasetSubsetId::D1,
            provenance: Provenance::Bm25Weak,
        };
        p.validate().unwrap();
        p.answer_start = 14;
        assert!(p.validate().is_err());
        p.answer_start = 400;
        assert!(p.validate().is_err());
    }

    #[test]
    fn subset_ids_round_trip() {
        for id in DatasetSubsetId::ALL {
            assert_eq!(id.as_str().parse::<DatasetSubsetId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
        }
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            Just("Alpha".to_string()),
            Just("beta".to_string()),
            Just("3.5".to_string()),
            Just("vs.".to_string()),
            Just("et al.".to_string()),
            Just("(see".to_string()),
            Just("it)".to_string()),
            Just("end.".to_string()),
            Just("why?".to_string()),
            Just("Now!".to_string()),
            Just("\"Quote.\"".to_string()),
            Just("Émile".to_string()),
            Just("12".to_string()),
        ];
        let sep = prop_oneof![Just(" "), Just("  "), Just("\n"), Just(" \t")];
        proptest::collection::vec((piece, sep), 0..25).prop_map(|v| {
            v.into_iter()
                .map(|(p, s)| format!("{p}{s}"))
                .collect::<String>()
        })
    }

    proptest! {
        #[test]
        fn sentences_round_trip_and_cover(text in text_strategy()) {
            let sents = segment_sentences(&text);
            let mut prev_end = 0;
            for s in &sents {
                prop_assert!(s.start < s.end);
                prop_assert!(s.start >= prev_end);
                prop_assert_eq!(&text[s.start..s.end], s.text.as_str());
                prop_assert!(text[prev_end..s.start].trim().is_empty());
                prev_end = s.end;
            }
            prop_assert!(text[prev_end..].trim().is_empty());
        }

        #[test]
        fn resegmenting_a_sentence_is_stable(text in text_strategy()) {
            for s in segment_sentences(&text) {
                let again = segment_sentences(&s.text);
                prop_assert_eq!(again.len(), 1);
                prop_assert_eq!(&again[0].text, &s.text);
            }
        }

        #[test]
        fn normalization_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize_answer(&s);
            prop_assert_eq!(normalize_answer(&once), once);
        }

        #[test]
        fn record_round_trip(
            pmid in "[0-9]{1,8}",
            title in "[A-Za-z ?]{0,20}",
            labels in proptest::collection::vec("[A-Za-z ]{0,6}[A-Za-z][A-Za-z ]{0,6}", 0..4),
            day in 1u32..28,
        ) {
            let sections: Vec<_> = labels
                .iter()
                .map(|l| serde_json::json!({"label": l, "text": format!("{l} text.")}))
                .collect();
            let line = serde_json::json!({
                "pmid": pmid, "title": title, "pub_date": format!("2020-02-{day:02}"),
                "keywords": ["k"], "sections": sections,
            })
            .to_string();
            let a = parse_abstract_record(&line).unwrap();
            let b = parse_abstract_record(&a.to_json_line()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

//! Replacement, concatenation and augmentation over lemmas, neo-classical
//! forms and form meanings.
//!
//! Text is handled as a run of word and gap pieces. Words are maximal runs of
//! alphanumeric characters; everything else is a gap and is never edited.
//! Form pieces introduced by a neo-form step remember their lexicon entry so
//! a later meaning step can expand exactly those pieces.

use std::collections::HashSet;
use std::fmt;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lemma::LemmaLexicon;
use super::morpheme::{decompose, MorphemeEntry, MorphemeLexicon};
use super::MorphError;
use crate::bm25::Bm25Params;
use crate::corpus::{byte_to_char_offset, QAPair, YesNoInstance};
use crate::weak_label::weak_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Replacement,
    Concatenation,
    Augmentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformTarget {
    Lemma,
    NeoForm,
    NeoMeaning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub target: TransformTarget,
}

impl TransformSpec {
    pub const fn new(kind: TransformKind, target: TransformTarget) -> Self {
        TransformSpec { kind, target }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({:?})", self.kind, self.target)
    }
}

/// Ordered transformation specs, at most one per target. A neo-form step may
/// not follow a meaning step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TransformSpec>", into = "Vec<TransformSpec>")]
pub struct TransformChain {
    specs: Vec<TransformSpec>,
}

impl TryFrom<Vec<TransformSpec>> for TransformChain {
    type Error = MorphError;

    fn try_from(specs: Vec<TransformSpec>) -> Result<Self, Self::Error> {
        TransformChain::new(specs)
    }
}

impl From<TransformChain> for Vec<TransformSpec> {
    fn from(c: TransformChain) -> Self {
        c.specs
    }
}

impl TransformChain {
    pub fn new(specs: Vec<TransformSpec>) -> Result<Self, MorphError> {
        let mut seen = HashSet::new();
        let mut meaning_seen = false;
        for s in &specs {
            if !seen.insert(s.target) {
                return Err(MorphError::InvalidChain(format!(
                    "target {:?} appears more than once",
                    s.target
                )));
            }
            match s.target {
                TransformTarget::NeoMeaning => meaning_seen = true,
                TransformTarget::NeoForm if meaning_seen => {
                    return Err(MorphError::InvalidChain(
                        "neo-classical forms cannot follow form meanings".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(TransformChain { specs })
    }

    pub fn empty() -> Self {
        TransformChain::default()
    }

    pub fn specs(&self) -> &[TransformSpec] {
        &self.specs
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn needs_morphemes(&self) -> bool {
        self.specs.iter().any(|s| s.target != TransformTarget::Lemma)
    }

    fn augmentations(&self) -> usize {
        self.specs
            .iter()
            .filter(|s| s.kind == TransformKind::Augmentation)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Gap(String),
    Word {
        text: String,
        form: Option<MorphemeEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Doc(Vec<Piece>);

impl Doc {
    fn parse(text: &str) -> Doc {
        let mut pieces = Vec::new();
        let mut cur = String::new();
        let mut in_word = false;
        for c in text.chars() {
            let w = c.is_alphanumeric();
            if w != in_word && !cur.is_empty() {
                pieces.push(Self::piece(std::mem::take(&mut cur), in_word));
            }
            in_word = w;
            cur.push(c);
        }
        if !cur.is_empty() {
            pieces.push(Self::piece(cur, in_word));
        }
        Doc(pieces)
    }

    fn piece(text: String, word: bool) -> Piece {
        if word {
            Piece::Word { text, form: None }
        } else {
            Piece::Gap(text)
        }
    }

    fn forms(parts: &[MorphemeEntry]) -> Vec<Piece> {
        let mut out = Vec::with_capacity(parts.len() * 2);
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                out.push(Piece::Gap(" ".into()));
            }
            out.push(Piece::Word {
                text: p.morpheme.clone(),
                form: Some(p.clone()),
            });
        }
        out
    }

    fn render(&self) -> String {
        self.0
            .iter()
            .map(|p| match p {
                Piece::Gap(s) => s.as_str(),
                Piece::Word { text, .. } => text.as_str(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformOutcome {
    pub edited: String,
    /// The fully replaced variant, for augmentation, when it differs.
    pub extra_example: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainOutput {
    pub text: String,
    pub is_new_example: bool,
}

/// Lexicons plus decomposition settings.
#[derive(Debug, Clone)]
pub struct Transformer {
    pub lemmas: LemmaLexicon,
    pub morphemes: MorphemeLexicon,
    /// Shorter words are never decomposed.
    pub min_word_len: usize,
}

pub const DEFAULT_MIN_WORD_LEN: usize = 6;

impl Transformer {
    pub fn new(lemmas: LemmaLexicon, morphemes: MorphemeLexicon) -> Self {
        Transformer {
            lemmas,
            morphemes,
            min_word_len: DEFAULT_MIN_WORD_LEN,
        }
    }

    /// Injected pieces for one word, or `None` when the word is unaffected.
    fn injection(&self, word: &str, form: Option<&MorphemeEntry>, target: TransformTarget, forms_mode: bool) -> Option<Vec<Piece>> {
        match target {
            TransformTarget::Lemma => {
                let lemma = self.lemmas.lemmatize(word);
                (lemma != word).then(|| Doc::parse(&lemma).0)
            }
            TransformTarget::NeoForm => {
                if form.is_some() {
                    return None;
                }
                let d = decompose(&word.to_lowercase(), &self.morphemes, self.min_word_len)?;
                (d.parts.len() > 1).then(|| Doc::forms(&d.parts))
            }
            TransformTarget::NeoMeaning if forms_mode => form.map(|e| Doc::parse(&e.meaning).0),
            TransformTarget::NeoMeaning => {
                if form.is_some() {
                    return None;
                }
                let lower = word.to_lowercase();
                let d = decompose(&lower, &self.morphemes, self.min_word_len)?;
                let meanings = d.meanings();
                (meanings != lower).then(|| Doc::parse(&meanings).0)
            }
        }
    }

    /// Applies one edit to every word. Replacement swaps the word for the
    /// injection; concatenation keeps the word and appends the injection.
    fn edit(&self, doc: &Doc, target: TransformTarget, concat: bool, forms_mode: bool) -> Doc {
        let mut out = Vec::with_capacity(doc.0.len());
        for p in &doc.0 {
            let Piece::Word { text, form } = p else {
                out.push(p.clone());
                continue;
            };
            match self.injection(text, form.as_ref(), target, forms_mode) {
                None => out.push(p.clone()),
                Some(x) => {
                    if concat {
                        out.push(p.clone());
                        out.push(Piece::Gap(" ".into()));
                    }
                    out.extend(x);
                }
            }
        }
        Doc(out)
    }

    /// Runs the chain over every augmentation branch. Returns one text per
    /// branch mask; bit `k` set means the `k`-th augmentation was taken.
    /// Mask 0 is the in-line edited original.
    pub fn chain_branches(&self, text: &str, chain: &TransformChain) -> Vec<(u32, String)> {
        let mut branches: Vec<(u32, Doc)> = vec![(0, Doc::parse(text))];
        let mut aug_bit = 0;
        let mut form_seen = false;
        for spec in chain.specs() {
            let forms_mode = spec.target == TransformTarget::NeoMeaning && form_seen;
            branches = match spec.kind {
                TransformKind::Replacement | TransformKind::Concatenation => {
                    let concat = spec.kind == TransformKind::Concatenation;
                    branches
                        .into_iter()
                        .map(|(m, d)| (m, self.edit(&d, spec.target, concat, forms_mode)))
                        .collect()
                }
                TransformKind::Augmentation => {
                    let mut next = Vec::with_capacity(branches.len() * 2);
                    for (m, d) in branches {
                        let replaced = self.edit(&d, spec.target, false, forms_mode);
                        next.push((m, d));
                        next.push((m | (1 << aug_bit), replaced));
                    }
                    aug_bit += 1;
                    next
                }
            };
            if spec.target == TransformTarget::NeoForm {
                form_seen = true;
            }
        }
        let mut out: Vec<(u32, String)> = branches.into_iter().map(|(m, d)| (m, d.render())).collect();
        out.sort_by_key(|(m, _)| *m);
        debug_assert_eq!(out.len(), 1 << chain.augmentations());
        out
    }

    pub fn transform_text(&self, text: &str, spec: TransformSpec) -> TransformOutcome {
        let chain = TransformChain { specs: vec![spec] };
        let mut branches = self.chain_branches(text, &chain).into_iter();
        let (_, edited) = branches.next().expect("main branch");
        let extra_example = branches.next().map(|(_, t)| t).filter(|t| t != text);
        TransformOutcome {
            edited,
            extra_example,
        }
    }

    /// The in-line result first, then each distinct augmented variant.
    pub fn apply_chain(&self, text: &str, chain: &TransformChain) -> Vec<ChainOutput> {
        let mut seen = HashSet::new();
        self.chain_branches(text, chain)
            .into_iter()
            .filter(|(_, t)| seen.insert(t.clone()))
            .map(|(m, text)| ChainOutput {
                text,
                is_new_example: m != 0,
            })
            .collect()
    }
}

/// Which text fields of an instance are transformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSelector {
    pub question: bool,
    pub context: bool,
}

impl Default for FieldSelector {
    fn default() -> Self {
        FieldSelector {
            question: true,
            context: true,
        }
    }
}

pub struct TransformJob<'a> {
    pub transformer: &'a Transformer,
    pub chain: &'a TransformChain,
    pub fields: FieldSelector,
    /// Used to re-label answers in augmented extractive examples.
    pub bm25: Bm25Params,
}

impl TransformJob<'_> {
    fn branches(&self, text: &str, selected: bool) -> Vec<String> {
        let n = 1usize << self.chain.augmentations();
        if selected {
            self.chain_branches(text)
        } else {
            vec![text.to_string(); n]
        }
    }

    fn chain_branches(&self, text: &str) -> Vec<String> {
        self.transformer
            .chain_branches(text, self.chain)
            .into_iter()
            .map(|(_, t)| t)
            .collect()
    }
}

/// Instance types that can be pushed through a chain.
pub trait Transformable: Sized + Send + Sync {
    fn id(&self) -> &str;

    /// The edited instance followed by any new augmented instances.
    fn transform(&self, job: &TransformJob<'_>) -> Result<Vec<Self>, String>;
}

fn aug_id(id: &str, k: usize) -> String {
    format!("{id}#aug{k}")
}

impl Transformable for YesNoInstance {
    fn id(&self) -> &str {
        &self.id
    }

    fn transform(&self, job: &TransformJob<'_>) -> Result<Vec<Self>, String> {
        let qs = job.branches(&self.question, job.fields.question);
        let cs = job.branches(&self.context, job.fields.context);
        let main = YesNoInstance {
            question: qs[0].clone(),
            context: cs[0].clone(),
            ..self.clone()
        };
        let mut seen = HashSet::new();
        seen.insert((main.question.clone(), main.context.clone()));
        let mut out = vec![main];
        for (q, c) in qs.into_iter().zip(cs).skip(1) {
            if seen.insert((q.clone(), c.clone())) {
                out.push(YesNoInstance {
                    id: aug_id(&self.id, out.len()),
                    question: q,
                    context: c,
                    label: self.label,
                });
            }
        }
        Ok(out)
    }
}

impl Transformable for QAPair {
    fn id(&self) -> &str {
        &self.id
    }

    /// In-line context edits keep the original answer: the answer and the
    /// text before it are transformed separately and the answer must still
    /// sit at the shifted offset. Augmented variants are re-labelled with
    /// BM25 over their transformed context.
    fn transform(&self, job: &TransformJob<'_>) -> Result<Vec<Self>, String> {
        let qs = job.branches(&self.question, job.fields.question);
        let cs = job.branches(&self.context, job.fields.context);

        let (b_start, b_end) = self
            .answer_byte_span()
            .filter(|&(s, e)| self.context.get(s..e) == Some(self.answer_text.as_str()))
            .ok_or_else(|| format!("pair `{}` is not anchored", self.id))?;
        let mut main = QAPair {
            question: qs[0].clone(),
            context: cs[0].clone(),
            ..self.clone()
        };
        if main.context != self.context {
            let prefix = job.chain_branches(&self.context[..b_start]).swap_remove(0);
            let answer = job.chain_branches(&self.context[b_start..b_end]).swap_remove(0);
            if !main.context[prefix.len()..].starts_with(&answer) || main.context.get(..prefix.len()) != Some(prefix.as_str()) {
                return Err(format!("pair `{}`: in-line edit breaks the answer span", self.id));
            }
            main.answer_start = byte_to_char_offset(&main.context, prefix.len());
            main.answer_text = answer;
        }
        main.validate().map_err(|e| e.to_string())?;

        let mut seen = HashSet::new();
        seen.insert((main.question.clone(), main.context.clone()));
        let mut out = vec![main];
        for (q, c) in qs.into_iter().zip(cs).skip(1) {
            if !seen.insert((q.clone(), c.clone())) {
                continue;
            }
            let label = weak_label(&q, &c, &job.bm25).map_err(|e| format!("pair `{}`: {e}", self.id))?;
            let id = aug_id(&self.id, out.len());
            out.push(label.into_pair(id, q, self.subset, self.provenance));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct TransformedDataset<T> {
    pub instances: Vec<T>,
    /// `(id, reason)` for instances that could not be transformed.
    pub rejected: Vec<(String, String)>,
}

/// Transforms every instance in parallel, keeping input order. Augmented
/// copies follow their source instance.
pub fn transform_dataset<T: Transformable>(instances: &[T], job: &TransformJob<'_>) -> TransformedDataset<T> {
    let results: Vec<Result<Vec<T>, (String, String)>> = instances
        .par_iter()
        .map(|i| i.transform(job).map_err(|e| (i.id().to_string(), e)))
        .collect();
    let mut out = TransformedDataset {
        instances: Vec::with_capacity(instances.len()),
        rejected: Vec::new(),
    };
    for r in results {
        match r {
            Ok(v) => out.instances.extend(v),
            Err((id, reason)) => {
                warn!("rejected `{id}`: {reason}");
                out.rejected.push((id, reason));
            }
        }
    }
    out
}

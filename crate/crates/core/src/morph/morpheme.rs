//! Neo-classical combining forms: the `MORPHEME|MEANING|TYPE` lexicon and
//! word decomposition against it.

use std::cmp::Reverse;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use super::MorphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphType {
    Prefix,
    Root,
    Terminal,
}

impl FromStr for MorphType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "prefix" | "pre" | "p" => Ok(MorphType::Prefix),
            "root" | "r" => Ok(MorphType::Root),
            "terminal" | "term" | "suffix" | "t" => Ok(MorphType::Terminal),
            other => Err(format!("unknown morpheme type `{other}`")),
        }
    }
}

impl fmt::Display for MorphType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MorphType::Prefix => "Prefix",
            MorphType::Root => "Root",
            MorphType::Terminal => "Term",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MorphemeEntry {
    pub morpheme: String,
    pub meaning: String,
    pub mtype: MorphType,
}

impl fmt::Display for MorphemeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.mtype, self.morpheme)
    }
}

#[derive(Debug, Clone, Default)]
pub struct MorphemeLexicon {
    entries: Vec<MorphemeEntry>,
    index: HashMap<(String, MorphType), usize>,
    longest: usize,
}

impl MorphemeLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entry; an existing `(morpheme, type)` key is replaced.
    pub fn insert(&mut self, entry: MorphemeEntry) -> bool {
        self.longest = self.longest.max(entry.morpheme.len());
        let key = (entry.morpheme.clone(), entry.mtype);
        match self.index.get(&key) {
            Some(&i) => {
                self.entries[i] = entry;
                true
            }
            None => {
                self.index.insert(key, self.entries.len());
                self.entries.push(entry);
                false
            }
        }
    }

    pub fn entries(&self) -> &[MorphemeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, morpheme: &str, mtype: MorphType) -> Option<&MorphemeEntry> {
        self.index
            .get(&(morpheme.to_string(), mtype))
            .map(|&i| &self.entries[i])
    }

    /// Parses pipe-delimited lines. `#` starts a comment line. Duplicate keys
    /// keep the last entry.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self, MorphError> {
        let mut lex = MorphemeLexicon::new();
        lex.merge_str(text, origin)?;
        Ok(lex)
    }

    pub fn merge_str(&mut self, text: &str, origin: &str) -> Result<(), MorphError> {
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| MorphError::Parse {
                origin: origin.to_string(),
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let morpheme = fields[0].trim_matches('-').to_lowercase();
            if morpheme.is_empty() || !morpheme.chars().all(|c| c.is_ascii_lowercase()) {
                return Err(err(format!("morpheme `{}` is not alphabetic", fields[0])));
            }
            if fields[1].is_empty() {
                return Err(err("empty meaning".into()));
            }
            let mtype = fields[2].parse::<MorphType>().map_err(err)?;
            let replaced = self.insert(MorphemeEntry {
                morpheme,
                meaning: fields[1].to_string(),
                mtype,
            });
            if replaced {
                warn!("{origin}:{line_no}: duplicate `{}` ({mtype}), keeping last", fields[0]);
            }
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), MorphError> {
        let text = std::fs::read_to_string(path).map_err(|source| MorphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.merge_str(&text, &path.display().to_string())
    }
}

/// Loads one or more lexicon files; later files override earlier ones.
pub fn load_morpheme_lexicon<P: AsRef<Path>>(paths: &[P]) -> Result<MorphemeLexicon, MorphError> {
    let mut lex = MorphemeLexicon::new();
    for p in paths {
        lex.merge_file(p.as_ref())?;
    }
    Ok(lex)
}

/// A word split as `prefix? root root? terminal?`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub word: String,
    pub parts: Vec<MorphemeEntry>,
}

impl Decomposition {
    /// Space-joined constituent forms.
    pub fn forms(&self) -> String {
        self.parts
            .iter()
            .map(|p| p.morpheme.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Space-joined meanings of the parts, in order.
    pub fn meanings(&self) -> String {
        meanings_of(self)
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

pub fn meanings_of(d: &Decomposition) -> String {
    d.parts
        .iter()
        .map(|p| p.meaning.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Grammar position after consuming some parts.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Start,
    AfterPrefix,
    OneRoot,
    TwoRoots,
    AfterTerminal,
}

impl Slot {
    fn next(self, t: MorphType) -> Option<Slot> {
        use MorphType::*;
        use Slot::*;
        match (self, t) {
            (Start, Prefix) => Some(AfterPrefix),
            (Start | AfterPrefix, Root) => Some(OneRoot),
            (OneRoot, Root) => Some(TwoRoots),
            (OneRoot | TwoRoots, Terminal) => Some(AfterTerminal),
            _ => None,
        }
    }

    fn accepting(self) -> bool {
        matches!(self, Slot::OneRoot | Slot::TwoRoots | Slot::AfterTerminal)
    }
}

/// Every full-coverage segmentation of `word` allowed by the grammar.
pub fn all_decompositions(word: &str, lex: &MorphemeLexicon) -> Vec<Vec<MorphemeEntry>> {
    fn walk(
        word: &str,
        pos: usize,
        slot: Slot,
        lex: &MorphemeLexicon,
        path: &mut Vec<MorphemeEntry>,
        out: &mut Vec<Vec<MorphemeEntry>>,
    ) {
        if pos == word.len() {
            if slot.accepting() {
                out.push(path.clone());
            }
            return;
        }
        let max = (word.len() - pos).min(lex.longest);
        for len in 1..=max {
            let piece = &word[pos..pos + len];
            for t in [MorphType::Prefix, MorphType::Root, MorphType::Terminal] {
                let Some(next) = slot.next(t) else { continue };
                if let Some(e) = lex.get(piece, t) {
                    path.push(e.clone());
                    walk(word, pos + len, next, lex, path, out);
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    if word.is_empty() || !word.chars().all(|c| c.is_ascii_lowercase()) {
        return out;
    }
    walk(word, 0, Slot::Start, lex, &mut Vec::new(), &mut out);
    out
}

/// Best decomposition of a lowercase word of at least `min_len` characters:
/// fewest parts, then longest first part (then longest later parts).
pub fn decompose(word: &str, lex: &MorphemeLexicon, min_len: usize) -> Option<Decomposition> {
    if word.len() < min_len {
        return None;
    }
    all_decompositions(word, lex)
        .into_iter()
        .min_by_key(|parts| {
            (
                parts.len(),
                parts.iter().map(|p| Reverse(p.morpheme.len())).collect::<Vec<_>>(),
                parts.iter().map(|p| p.mtype).collect::<Vec<_>>(),
            )
        })
        .map(|parts| Decomposition {
            word: word.to_string(),
            parts,
        })
}

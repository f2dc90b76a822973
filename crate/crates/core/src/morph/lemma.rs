//! Exception-table plus suffix-rule lemmatizer.

use std::collections::HashMap;

use super::MorphError;

/// Exception table shipped with the crate.
pub const DEFAULT_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.txt");

/// One suffix rewrite. Rules are tried in order and the first that applies
/// wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SuffixRule {
    /// Replace `suffix` with `replacement` when at least `min_stem` characters
    /// remain and the stem does not end with any of `not_after`.
    Rewrite {
        suffix: &'static str,
        replacement: &'static str,
        min_stem: usize,
        not_after: &'static [&'static str],
    },
    /// Strip a verbal ending (`ed`, `ing`), then undouble a final consonant
    /// or restore a silent `e`.
    Verbal { suffix: &'static str, min_stem: usize },
}

const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

pub fn default_rules() -> Vec<SuffixRule> {
    use SuffixRule::*;
    vec![
        Rewrite { suffix: "ies", replacement: "y", min_stem: 2, not_after: &[] },
        Rewrite { suffix: "ied", replacement: "y", min_stem: 2, not_after: &[] },
        Rewrite { suffix: "sses", replacement: "ss", min_stem: 1, not_after: &[] },
        Rewrite { suffix: "xes", replacement: "x", min_stem: 1, not_after: &[] },
        Rewrite { suffix: "zzes", replacement: "zz", min_stem: 1, not_after: &[] },
        Rewrite { suffix: "ches", replacement: "ch", min_stem: 1, not_after: &[] },
        Rewrite { suffix: "shes", replacement: "sh", min_stem: 1, not_after: &[] },
        Rewrite { suffix: "uses", replacement: "us", min_stem: 2, not_after: VOWELS },
        Rewrite { suffix: "s", replacement: "", min_stem: 3, not_after: &["s", "u", "i"] },
        Rewrite { suffix: "eed", replacement: "eed", min_stem: 0, not_after: &[] },
        Verbal { suffix: "ed", min_stem: 3 },
        Verbal { suffix: "ing", min_stem: 3 },
    ]
}

#[derive(Debug, Clone)]
pub struct LemmaLexicon {
    exceptions: HashMap<String, String>,
    rules: Vec<SuffixRule>,
}

impl Default for LemmaLexicon {
    fn default() -> Self {
        LemmaLexicon::from_exceptions_str(DEFAULT_EXCEPTIONS, "<builtin>")
            .expect("builtin exceptions are valid")
    }
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn is_consonant(c: u8) -> bool {
    c.is_ascii_lowercase() && !is_vowel(c)
}

fn vowel_groups(s: &[u8]) -> usize {
    let mut groups = 0;
    let mut prev = false;
    for &c in s {
        let v = is_vowel(c) || c == b'y';
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    groups
}

/// Whether a stripped verbal stem needs its silent `e` back.
fn needs_e(stem: &[u8]) -> bool {
    let n = stem.len();
    let at = |i: usize| stem[n - i];
    let last = at(1);
    let prev = at(2);
    if last == prev {
        return false;
    }
    let before_prev = if n >= 3 { Some(at(3)) } else { None };
    let cons_before_prev = before_prev.is_some_and(is_consonant);
    match (prev, last) {
        (_, b'v' | b'c' | b'z') => true,
        (p, b's') if is_vowel(p) => true,
        (b'a', b't') => before_prev.is_some_and(|c| c == b'i' || is_consonant(c)),
        (b'u', b't') => cons_before_prev,
        (b'a' | b'i' | b'u', b'r') => cons_before_prev,
        (b'b' | b'p' | b'g' | b't' | b'd' | b'k' | b'c' | b'f' | b'z', b'l') => true,
        (b'u', b'l') => cons_before_prev,
        (b'i', b'n') | (b'u', b'm') | (b'o', b'k') | (b'i', b'b') => cons_before_prev,
        (b'a' | b'e', b'g') => true,
        (b'n', b'g') => matches!(before_prev, Some(b'a' | b'e')),
        (b'r' | b'l', b'g') => true,
        (b'i' | b'u', b'd') => cons_before_prev,
        _ => false,
    }
}

impl SuffixRule {
    fn apply(&self, word: &str) -> Option<String> {
        match *self {
            SuffixRule::Rewrite {
                suffix,
                replacement,
                min_stem,
                not_after,
            } => {
                let stem = word.strip_suffix(suffix)?;
                if stem.len() < min_stem || not_after.iter().any(|n| stem.ends_with(n)) {
                    return None;
                }
                Some(format!("{stem}{replacement}"))
            }
            SuffixRule::Verbal { suffix, min_stem } => {
                let stem = word.strip_suffix(suffix)?;
                let b = stem.as_bytes();
                if b.len() < min_stem || !b.iter().any(|&c| is_vowel(c) || c == b'y') {
                    return None;
                }
                let n = b.len();
                let (last, prev) = (b[n - 1], b[n - 2]);
                if last == prev && is_consonant(last) {
                    let keep_double = match last {
                        b'l' => vowel_groups(b) < 2,
                        b's' | b'z' | b'f' => true,
                        _ => false,
                    };
                    if !keep_double {
                        return Some(stem[..n - 1].to_string());
                    }
                    return Some(stem.to_string());
                }
                if needs_e(b) {
                    return Some(format!("{stem}e"));
                }
                Some(stem.to_string())
            }
        }
    }
}

impl LemmaLexicon {
    /// Builds a lexicon from `SURFACE|LEMMA` lines plus the default rules.
    /// Every exception lemma is made a fixed point of the lexicon.
    pub fn from_exceptions_str(text: &str, origin: &str) -> Result<Self, MorphError> {
        let mut exceptions = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
                return Err(MorphError::Parse {
                    origin: origin.to_string(),
                    line: i + 1,
                    reason: format!("expected SURFACE|LEMMA, got `{line}`"),
                });
            }
            exceptions.insert(fields[0].to_lowercase(), fields[1].to_lowercase());
        }
        let mut lex = LemmaLexicon {
            exceptions,
            rules: default_rules(),
        };
        lex.close_exceptions(origin)?;
        Ok(lex)
    }

    pub fn with_extra_exceptions(mut self, text: &str, origin: &str) -> Result<Self, MorphError> {
        let extra = LemmaLexicon::from_exceptions_str(text, origin)?;
        self.exceptions.extend(extra.exceptions);
        self.close_exceptions(origin)?;
        Ok(self)
    }

    fn close_exceptions(&mut self, origin: &str) -> Result<(), MorphError> {
        let lemmas: Vec<String> = self.exceptions.values().cloned().collect();
        for lemma in lemmas {
            match self.exceptions.get(&lemma) {
                Some(target) if *target != lemma => {
                    return Err(MorphError::Parse {
                        origin: origin.to_string(),
                        line: 0,
                        reason: format!("lemma `{lemma}` is itself mapped to `{target}`"),
                    })
                }
                Some(_) => {}
                None => {
                    if self.apply_rules(&lemma) != lemma {
                        self.exceptions.insert(lemma.clone(), lemma);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn exceptions(&self) -> &HashMap<String, String> {
        &self.exceptions
    }

    fn apply_rules(&self, word: &str) -> String {
        self.rules
            .iter()
            .find_map(|r| r.apply(word))
            .unwrap_or_else(|| word.to_string())
    }

    /// Lemma of a lowercase word.
    fn lemma_lower(&self, word: &str) -> String {
        if let Some(l) = self.exceptions.get(word) {
            return l.clone();
        }
        let candidate = self.apply_rules(word);
        if candidate == word {
            return candidate;
        }
        if let Some(l) = self.exceptions.get(&candidate) {
            return l.clone();
        }
        // Only accept outputs that are themselves stable.
        if self.apply_rules(&candidate) == candidate {
            candidate
        } else {
            word.to_string()
        }
    }

    /// Lemma of `token`. Tokens with digits, non-ASCII letters or uppercase
    /// past the first character are returned unchanged; a leading capital is
    /// preserved.
    pub fn lemmatize(&self, token: &str) -> String {
        let mut chars = token.chars();
        let Some(first) = chars.next() else {
            return String::new();
        };
        if !token.chars().all(|c| c.is_ascii_alphabetic())
            || chars.any(|c| c.is_ascii_uppercase())
        {
            return token.to_string();
        }
        let lower = token.to_ascii_lowercase();
        let lemma = self.lemma_lower(&lower);
        if first.is_ascii_uppercase() {
            let mut out = lemma;
            if let Some(f) = out.get_mut(0..1) {
                f.make_ascii_uppercase();
            }
            out
        } else {
            lemma
        }
    }
}

pub fn lemmatize_token(token: &str, lex: &LemmaLexicon) -> String {
    lex.lemmatize(token)
}

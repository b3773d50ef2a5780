//! The spam pattern store and the text normalization that defeats the usual
//! obfuscations (letter spacing, spelled-out "dot").
//!
//! Store files are line-oriented text, one pattern per line:
//! `field|kind|pattern`. Lines starting with `#` and blank lines are skipped.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetField {
    FromUser,
    FromHost,
    FromDisplay,
    Contact,
    CallId,
    Subject,
    ContentType,
    SourceIp,
}

impl TargetField {
    pub const ALL: [TargetField; 8] = [
        TargetField::FromUser,
        TargetField::FromHost,
        TargetField::FromDisplay,
        TargetField::Contact,
        TargetField::CallId,
        TargetField::Subject,
        TargetField::ContentType,
        TargetField::SourceIp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TargetField::FromUser => "from_user",
            TargetField::FromHost => "from_host",
            TargetField::FromDisplay => "from_display",
            TargetField::Contact => "contact",
            TargetField::CallId => "call_id",
            TargetField::Subject => "subject",
            TargetField::ContentType => "content_type",
            TargetField::SourceIp => "source_ip",
        }
    }
}

impl fmt::Display for TargetField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetField {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        TargetField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchKind {
    Exact,
    Substring,
}

impl MatchKind {
    pub fn name(&self) -> &'static str {
        match self {
            MatchKind::Exact => "exact",
            MatchKind::Substring => "substring",
        }
    }
}

impl fmt::Display for MatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatchKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "exact" => Ok(MatchKind::Exact),
            "substring" => Ok(MatchKind::Substring),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpamPattern {
    pub field: TargetField,
    pub kind: MatchKind,
    /// Already normalized.
    pub pattern: String,
}

impl SpamPattern {
    pub fn new(field: TargetField, kind: MatchKind, pattern: &str) -> Self {
        SpamPattern {
            field,
            kind,
            pattern: normalize(pattern),
        }
    }
}

/// Lowercase, strip characters outside letters/digits/@/./-/space, collapse
/// whitespace, fold runs of >= 3 spaced single characters into one word
/// (spelled-out `d o t` becomes "."), and glue the standalone word "dot"
/// to its neighbors as ".".
pub fn normalize(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped: String = lowered
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || matches!(c, '@' | '.' | '-') || c.is_whitespace())
        .collect();
    let tokens: Vec<&str> = stripped.split_whitespace().collect();

    let mut folded: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].chars().count() == 1 {
            let mut j = i;
            while j < tokens.len() && tokens[j].chars().count() == 1 {
                j += 1;
            }
            if j - i >= 3 {
                folded.push(fold_run(&tokens[i..j]));
            } else {
                folded.extend(tokens[i..j].iter().map(|t| (*t).to_string()));
            }
            i = j;
        } else {
            folded.push(tokens[i].to_string());
            i += 1;
        }
    }

    let mut out: Vec<String> = Vec::new();
    let mut k = 0;
    while k < folded.len() {
        if folded[k] == "dot" {
            let mut merged = out.pop().unwrap_or_default();
            merged.push('.');
            if k + 1 < folded.len() && folded[k + 1] != "dot" {
                merged.push_str(&folded[k + 1]);
                k += 1;
            }
            out.push(merged);
        } else {
            out.push(folded[k].clone());
        }
        k += 1;
    }
    out.join(" ")
}

fn fold_run(tokens: &[&str]) -> String {
    let mut word = String::new();
    let mut i = 0;
    while i < tokens.len() {
        if i + 3 <= tokens.len() && tokens[i] == "d" && tokens[i + 1] == "o" && tokens[i + 2] == "t" {
            word.push('.');
            i += 3;
        } else {
            word.push_str(tokens[i]);
            i += 1;
        }
    }
    word
}

/// An immutable, loaded pattern database.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternStore {
    patterns: Vec<SpamPattern>,
    path: Option<PathBuf>,
    pub duplicates_dropped: usize,
}

impl PatternStore {
    pub fn empty() -> Self {
        PatternStore {
            patterns: Vec::new(),
            path: None,
            duplicates_dropped: 0,
        }
    }

    /// The patterns shipped by default: the known anonymous-caller and
    /// commercial-name examples.
    pub fn default_patterns() -> Self {
        let mut store = PatternStore::empty();
        for (field, kind, pattern) in [
            (TargetField::FromUser, MatchKind::Exact, "anonymous"),
            (TargetField::FromHost, MatchKind::Exact, "anonymous.net"),
            (TargetField::FromDisplay, MatchKind::Substring, "summer offer"),
            (TargetField::FromDisplay, MatchKind::Substring, "coming soon"),
            (TargetField::FromDisplay, MatchKind::Substring, "testcompany"),
        ] {
            store.patterns.push(SpamPattern::new(field, kind, pattern));
        }
        store
    }

    pub fn patterns(&self) -> &[SpamPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut store = PatternStore::empty();
        store.path = Some(path.to_path_buf());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '|');
            let (Some(field), Some(kind), Some(pattern)) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::PatternFile {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: format!("expected field|kind|pattern, got {line:?}"),
                });
            };
            let field: TargetField = field.parse().map_err(|()| Error::PatternFile {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("unknown field {field:?}"),
            })?;
            let kind: MatchKind = kind.parse().map_err(|()| Error::PatternFile {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("unknown kind {kind:?}"),
            })?;
            if pattern.contains('|') {
                return Err(Error::PatternFile {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: "'|' is not allowed inside patterns".into(),
                });
            }
            let entry = SpamPattern::new(field, kind, pattern);
            if entry.pattern.is_empty() {
                return Err(Error::PatternFile {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: "pattern normalizes to empty".into(),
                });
            }
            if store.patterns.contains(&entry) {
                store.duplicates_dropped += 1;
            } else {
                store.patterns.push(entry);
            }
        }
        Ok(store)
    }

    /// Rewrite the store file atomically (temp file, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::from("# spitgate pattern store: field|kind|pattern\n");
        for p in &self.patterns {
            text.push_str(&format!("{}|{}|{}\n", p.field, p.kind, p.pattern));
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    /// First pattern of `field` matching the normalized value.
    pub fn lookup(&self, field: TargetField, value: &str) -> Option<&SpamPattern> {
        let normalized = normalize(value);
        self.patterns.iter().find(|p| {
            p.field == field
                && match p.kind {
                    MatchKind::Exact => normalized == p.pattern,
                    MatchKind::Substring => normalized.contains(&p.pattern),
                }
        })
    }

    pub fn add(&mut self, pattern: SpamPattern) -> Result<()> {
        if self.patterns.contains(&pattern) {
            return Err(Error::DuplicatePattern {
                field: pattern.field.to_string(),
                pattern: pattern.pattern,
            });
        }
        self.patterns.push(pattern);
        self.persist()
    }

    pub fn remove(&mut self, pattern: &SpamPattern) -> Result<()> {
        let Some(pos) = self.patterns.iter().position(|p| p == pattern) else {
            return Err(Error::PatternAbsent {
                field: pattern.field.to_string(),
                pattern: pattern.pattern.clone(),
            });
        };
        self.patterns.remove(pos);
        self.persist()
    }

    fn persist(&self) -> Result<()> {
        match &self.path {
            Some(path) => self.save(&path.clone()),
            None => Ok(()),
        }
    }
}

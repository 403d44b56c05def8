//! Flat `key = value` text with `[section]` headers.
//!
//! Comments start with `#` or `;` at the beginning of a line or after
//! whitespace. Keys are case-sensitive; duplicate sections or keys are errors.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ini {
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (k, &b) in bytes.iter().enumerate() {
        if (b == b'#' || b == b';') && (k == 0 || bytes[k - 1].is_ascii_whitespace()) {
            return &line[..k];
        }
    }
    line
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut ini = Ini::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |message: String| ParseError { line, message };
            let s = strip_comment(raw).trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err("section header is missing `]`".into()))?
                    .trim();
                if !valid_name(name) {
                    return Err(err(format!("invalid section name {name:?}")));
                }
                if let Some(prev) = ini.sections.iter().find(|s| s.name == name) {
                    return Err(err(format!("section [{name}] already defined on line {}", prev.line)));
                }
                ini.sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found {s:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !valid_name(key) {
                return Err(err(format!("invalid key {key:?}")));
            }
            let section = ini
                .sections
                .last_mut()
                .ok_or_else(|| err(format!("key `{key}` appears before any section header")))?;
            if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
                return Err(err(format!(
                    "key `{key}` in [{}] already set on line {}",
                    section.name, prev.line
                )));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(ini)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

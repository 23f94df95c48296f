//! Flat `key = value` experiment configuration.
//!
//! Repeated keys build lists, and a value may also hold several
//! comma-separated items. A bare `key =` declares an empty list. `#`
//! starts a comment.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, field `{field}`: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { line, field: field.into(), message: message.into() }
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "n",
    "a",
    "o_tau",
    "d",
    "i",
    "k",
    "k_b",
    "n_cp",
    "cp_fraction",
    "sample_rate",
    "elements",
    "spacing",
    "carrier",
    "angles",
    "form",
    "snr_db",
    "seed",
    "upsample",
    "model",
    "equalize",
    "revert_precoder",
    "impairment_db",
    "impairment_deg",
    "resolution",
    "guard",
    "source",
    "window",
    "alloc",
    "strict",
    "golden",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, Vec<Entry>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::new(line, body, "expected `key = value`"));
            };
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::new(line, key, "unknown key"));
            }
            entries.entry(key).or_default().push(Entry { value: value.trim().to_string(), line });
        }
        Ok(Self { entries })
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Items of a list key with their line numbers; `None` if the key is absent.
    fn items(&self, key: &str) -> Option<Vec<(&str, usize)>> {
        let entries = self.entries.get(key)?;
        let mut out = Vec::new();
        for e in entries {
            if key == "golden" {
                if !e.value.is_empty() {
                    out.push((e.value.as_str(), e.line));
                }
                continue;
            }
            out.extend(e.value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| (s, e.line)));
        }
        Some(out)
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).and_then(|v| v.last()).map_or(0, |e| e.line)
    }

    /// Raw string items; `default` when the key is absent.
    pub fn strings(&self, key: &str, default: &[&str]) -> Vec<String> {
        match self.items(key) {
            Some(items) => items.into_iter().map(|(s, _)| s.to_string()).collect(),
            None => default.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Raw items with line numbers, for callers that parse their own syntax.
    pub fn raw_items(&self, key: &str) -> Vec<(String, usize)> {
        self.items(key).unwrap_or_default().into_iter().map(|(s, l)| (s.to_string(), l)).collect()
    }

    pub fn list<T>(&self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError>
    where
        T: FromStr + Clone,
        T::Err: Display,
    {
        match self.items(key) {
            None => Ok(default.to_vec()),
            Some(items) => items
                .into_iter()
                .map(|(s, line)| {
                    s.parse::<T>().map_err(|e| ConfigError::new(line, key, format!("`{s}`: {e}")))
                })
                .collect(),
        }
    }

    pub fn optional<T>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr + Clone,
        T::Err: Display,
    {
        let values: Vec<T> = self.list(key, &[])?;
        match values.len() {
            0 => Ok(None),
            1 => Ok(values.into_iter().next()),
            n => Err(ConfigError::new(self.line_of(key), key, format!("expected one value, got {n}"))),
        }
    }

    pub fn scalar<T>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr + Clone,
        T::Err: Display,
    {
        Ok(self.optional(key)?.unwrap_or(default))
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(self.line_of(key), key, message)
    }

    /// Comment- and layout-independent rendering, used for hashing.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (key, entries) in &self.entries {
            for e in entries {
                out.push_str(key);
                out.push('=');
                out.push_str(&e.value);
                out.push('\n');
            }
        }
        out
    }

    /// Replaces every value of `key` with `value`.
    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), vec![Entry { value, line: 0 }]);
    }
}

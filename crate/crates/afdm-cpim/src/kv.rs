//! Flat `key = value` structured-text parsing shared by config and codebook
//! files. `#` starts a comment, `[section]` headers are accepted as cosmetic
//! grouping (keys stay flat and must be unique across the file).

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    consumed: bool,
}

/// A parsed key-value file with unknown-key detection.
#[derive(Debug, Clone)]
pub struct KvMap {
    entries: BTreeMap<String, Entry>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                continue; // cosmetic section header
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line_no}: expected `key = value`, got `{line}`"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key")));
            }
            if entries
                .insert(
                    key.clone(),
                    Entry {
                        value,
                        line: line_no,
                        consumed: false,
                    },
                )
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key `{key}`"
                )));
            }
        }
        Ok(KvMap { entries })
    }

    /// Applies `key=value` override strings on top of the parsed file.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for ov in overrides {
            let Some((key, value)) = ov.split_once('=') else {
                return Err(Error::Config(format!(
                    "override `{ov}` must have the form key=value"
                )));
            };
            let key = key.trim();
            if !self.entries.contains_key(key) {
                // Insert so that consumers can pick it up (and reject it
                // if the key is unknown to them).
                self.entries.insert(
                    key.to_string(),
                    Entry {
                        value: value.trim().to_string(),
                        line: 0,
                        consumed: false,
                    },
                );
            } else if let Some(e) = self.entries.get_mut(key) {
                e.value = value.trim().to_string();
            }
        }
        Ok(())
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.get_mut(key).map(|e| {
            e.consumed = true;
            e.value.clone()
        })
    }

    pub fn require_str(&mut self, key: &str) -> Result<String> {
        self.take_str(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_str(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!(
                    "key `{key}`: cannot parse `{v}` as {}",
                    std::any::type_name::<T>()
                ))
            }),
        }
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take::<T>(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take::<T>(key)?.unwrap_or(default))
    }

    /// Whitespace-separated list value.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.take_str(key) {
            None => Ok(None),
            Some(v) => v
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<T>().map_err(|_| {
                        Error::Config(format!("key `{key}`: cannot parse list item `{tok}`"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn take_bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take_str(key) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                other => Err(Error::Config(format!(
                    "key `{key}`: expected a boolean, got `{other}`"
                ))),
            },
        }
    }

    /// Errors if any key was never consumed (unknown keys are rejected).
    pub fn finish(self) -> Result<()> {
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(_, e)| !e.consumed)
            .map(|(k, e)| {
                if e.line > 0 {
                    format!("`{k}` (line {})", e.line)
                } else {
                    format!("`{k}` (override)")
                }
            })
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unknown key(s): {}",
                unknown.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_sections_and_values() {
        let text = "# header\n[system]\nn = 32 # trailing\nlabel = hello world\n\n[grid]\nebn0 = 0 2 4\n";
        let mut kv = KvMap::parse(text).unwrap();
        assert_eq!(kv.require::<usize>("n").unwrap(), 32);
        assert_eq!(kv.require_str("label").unwrap(), "hello world");
        assert_eq!(
            kv.take_list::<f64>("ebn0").unwrap().unwrap(),
            vec![0.0, 2.0, 4.0]
        );
        kv.finish().unwrap();
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let mut kv = KvMap::parse("a = 1\nb = 2\n").unwrap();
        let _ = kv.require::<u32>("a").unwrap();
        let err = kv.finish().unwrap_err();
        assert!(err.to_string().contains("`b`"));

        assert!(KvMap::parse("a = 1\na = 2\n").is_err());
        assert!(KvMap::parse("just a line\n").is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut kv = KvMap::parse("seed = 1\n").unwrap();
        kv.apply_overrides(&["seed=7".to_string()]).unwrap();
        assert_eq!(kv.require::<u64>("seed").unwrap(), 7);
        kv.finish().unwrap();
    }
}

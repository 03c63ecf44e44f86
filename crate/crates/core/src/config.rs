//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed key/value map that remembers source lines and rejects unknown keys.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, (String, usize)>,
}

impl Config {
    /// Parses `text`. Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Config { line: i + 1, msg: "empty key".into() });
            }
            if entries.insert(key.to_string(), (v.trim().to_string(), i + 1)).is_some() {
                return Err(Error::Config { line: i + 1, msg: format!("duplicate key `{key}`") });
            }
        }
        Ok(Config { entries })
    }

    /// Errors on the first key not listed in `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.entries.get(key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| Error::Config {
                line: *line,
                msg: format!("cannot parse `{v}` for `{key}`"),
            }),
        }
    }

    /// Comma-separated list.
    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.entries.get(key) {
            None => Ok(default),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| Error::Config {
                        line: *line,
                        msg: format!("cannot parse `{s}` in `{key}`"),
                    })
                })
                .collect(),
        }
    }

    /// Fully resolved configuration, one `key = value` per line, sorted by key.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, (v, _)) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_lines() {
        let c = Config::parse("# comment\nC = 1.5\n\nF.kind = const\nks = 1, 2, 4\n").unwrap();
        assert_eq!(c.get_or("C", 0.0).unwrap(), 1.5);
        assert_eq!(c.raw("F.kind"), Some("const"));
        assert_eq!(c.list_or::<u32>("ks", vec![]).unwrap(), vec![1, 2, 4]);
        match c.get_or::<f64>("F.kind", 0.0) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Config::parse("a = 1\nnonsense\n"), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn unknown_keys_rejected() {
        let c = Config::parse("grid.n = 64\nbogus = 3\n").unwrap();
        match c.check_keys(&["grid.n"]) {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "bogus"),
            other => panic!("{other:?}"),
        }
    }
}

//! Line-oriented `key=value` configuration text.
//!
//! Blank lines and lines starting with `#` are ignored. A key may repeat
//! (layer lists use this); single-valued lookups reject repeats. Every lookup
//! marks its key as used so [`KeyValues::finish`] can reject typos.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KeyValues {
    entries: Vec<Entry>,
    used: RefCell<BTreeSet<String>>,
    /// Directory used to resolve relative paths.
    base: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            entries.push(Entry {
                key: key.to_string(),
                value: v.trim().to_string(),
                line: i + 1,
            });
        }
        Ok(Self {
            entries,
            used: RefCell::new(BTreeSet::new()),
            base: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut kv = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        kv.base = path.parent().map(Path::to_path_buf);
        Ok(kv)
    }

    /// Adds or replaces a single-valued key.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.retain(|e| e.key != key);
        self.entries.push(Entry {
            key: key.into(),
            value: value.to_string(),
            line: 0,
        });
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    pub fn get_str(&self, key: &str) -> Result<Option<&str>> {
        self.used.borrow_mut().insert(key.to_string());
        let mut it = self.entries.iter().filter(|e| e.key == key);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(Error::Config(format!("key `{key}` repeated (line {})", dup.line)));
        }
        Ok(first.map(|e| e.value.as_str()))
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries
            .iter()
            .filter(|e| e.key == key)
            .map(|e| e.value.as_str())
            .collect()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key)? {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get_str(key)? {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::Config(format!("key `{key}`: expected a boolean, got `{v}`"))),
        }
    }

    /// Resolves a path-valued key relative to the config file's directory.
    pub fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.get_str(key)?.map(|v| self.resolve(v)))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn resolve(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        match &self.base {
            Some(base) if p.is_relative() => base.join(p),
            _ => p,
        }
    }

    /// Fails if any key was never looked up.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().find(|e| !used.contains(&e.key)) {
            Some(e) => Err(Error::Config(format!("unknown key `{}` (line {})", e.key, e.line))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_repeats() {
        let kv = KeyValues::parse("# c\nseed = 4\n\nlayer=a\nlayer=b\n").unwrap();
        assert_eq!(kv.require::<u64>("seed").unwrap(), 4);
        assert_eq!(kv.get_all("layer"), vec!["a", "b"]);
        assert!(kv.get_str("layer").is_err());
        kv.finish().unwrap();
    }

    #[test]
    fn unknown_keys_are_reported() {
        let kv = KeyValues::parse("sede=4\n").unwrap();
        assert_eq!(kv.get_or("seed", 1u64).unwrap(), 1);
        let err = kv.finish().unwrap_err();
        assert!(err.to_string().contains("sede"));
    }

    #[test]
    fn malformed_line() {
        assert!(KeyValues::parse("just words").is_err());
    }
}

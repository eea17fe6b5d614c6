//! Line-oriented `key=value` config files. Later lines override earlier
//! ones, `#` starts a comment, and command-line flags override everything.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self {
            values: BTreeMap::new(),
        }
    }

    /// Parses the file and rejects any key not in `allowed`.
    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading {}: {e}", path.display()))?;
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(format!(
                "{} line {}: expected key=value, got '{line}'",
                path.display(),
                i + 1
            ))?;
            let key = key.trim();
            if !allowed.contains(&key) {
                return Err(format!(
                    "{} line {}: unknown config key '{key}'",
                    path.display(),
                    i + 1
                ));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Parsed value for `key`, or None when the file does not set it.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key '{key}': cannot parse '{raw}'")),
        }
    }

    /// Comma-separated list value for `key`.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<T>()
                        .map_err(|_| format!("config key '{key}': cannot parse '{v}'"))
                })
                .collect::<Result<Vec<T>, String>>()
                .map(Some),
        }
    }
}

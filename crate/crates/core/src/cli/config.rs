//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! process = wishart
//! T = 1
//! wishart.alpha = 3
//! wishart.Q = [[1,2],[0,-3]]
//! ```
//!
//! Values are JSON when they parse as JSON and bare strings otherwise.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use super::CliError;
use crate::matrix::{general_from_rows, GeneralMatrix, PsdMatrix, SymMatrix};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, Value)>,
}

type Result<T> = std::result::Result<T, CliError>;

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(CliError::Config(format!("line {line_no}: bad key `{key}`")));
            }
            if value.is_empty() {
                return Err(CliError::Config(format!("line {line_no}: `{key}` has no value")));
            }
            let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
            if entries.insert(key.to_string(), (line_no, parsed)).is_some() {
                return Err(CliError::Config(format!("line {line_no}: duplicate key `{key}`")));
            }
        }
        Ok(Config { entries })
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.entries.insert(key.to_string(), (0, value));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Rejects keys for which `allowed` is false, which catches typos in
    /// parameter names.
    pub fn check_keys(&self, allowed: impl Fn(&str) -> bool) -> Result<()> {
        match self.entries.iter().find(|(k, _)| !allowed(k.as_str())) {
            Some((k, (line, _))) => Err(CliError::Config(format!("line {line}: unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|(_, v)| v)
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        let line = self.entries.get(key).map_or(0, |(l, _)| *l);
        if line == 0 {
            CliError::Config(format!("`{key}`: expected {what}"))
        } else {
            CliError::Config(format!("line {line}: `{key}` expected {what}"))
        }
    }

    fn missing(key: &str) -> CliError {
        CliError::Config(format!("missing required key `{key}`"))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.bad(key, "a finite number")),
            },
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| Self::missing(key))
    }

    pub fn opt_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.as_u64().map(Some).ok_or_else(|| self.bad(key, "a non-negative integer")),
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.opt_u64(key)?.ok_or_else(|| Self::missing(key))
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<&str>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.as_str().map(Some).ok_or_else(|| self.bad(key, "a string")),
        }
    }

    pub fn opt_strings(&self, key: &str) -> Result<Option<Vec<String>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|i| i.as_str().map(str::to_string).ok_or_else(|| self.bad(key, "an array of strings")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(Value::String(s)) => Ok(Some(s.split(',').map(|t| t.trim().to_string()).collect())),
            Some(_) => Err(self.bad(key, "an array of strings")),
        }
    }

    /// A matrix written as nested rows; a bare number is read as `1×1`.
    pub fn opt_matrix(&self, key: &str) -> Result<Option<GeneralMatrix>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        if let Some(x) = v.as_f64() {
            return Ok(Some(GeneralMatrix::from_element(1, 1, x)));
        }
        let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone()).map_err(|_| self.bad(key, "a matrix [[..],..]"))?;
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(self.bad(key, "finite matrix entries"));
        }
        general_from_rows(&rows).map(Some).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    pub fn matrix(&self, key: &str) -> Result<GeneralMatrix> {
        self.opt_matrix(key)?.ok_or_else(|| Self::missing(key))
    }

    pub fn opt_psd(&self, key: &str) -> Result<Option<PsdMatrix>> {
        let Some(m) = self.opt_matrix(key)? else { return Ok(None) };
        let sym = SymMatrix::try_from_matrix(m).map_err(|e| CliError::Config(format!("`{key}`: {e}")))?;
        PsdMatrix::new(sym)
            .map(Some)
            .map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }
}

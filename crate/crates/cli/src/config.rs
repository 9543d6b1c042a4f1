//! Flat `key = value` configuration with dotted keys.
//!
//! Lines are `key = value`; `#` starts a comment. `--set key=value` flags
//! are applied on top, so flags override file keys.

use lpkit_core::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    keys: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut keys = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            keys.insert(k.to_string(), unquote(v.trim()).to_string());
        }
        Ok(Self { keys })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{assignment}'")))?;
        self.keys.insert(k.trim().to_string(), unquote(v.trim()).to_string());
        Ok(())
    }

    pub fn insert(&mut self, k: &str, v: &str) {
        self.keys.insert(k.to_string(), v.to_string());
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.keys.get(k).map(String::as_str)
    }

    pub fn keys(&self) -> &BTreeMap<String, String> {
        &self.keys
    }

    pub fn num<T: FromStr>(&self, k: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(k) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::Config(format!("{k} = '{v}': {e}"))),
        }
    }

    pub fn opt_num<T: FromStr>(&self, k: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(k)
            .map(|v| v.parse().map_err(|e| Error::Config(format!("{k} = '{v}': {e}"))))
            .transpose()
    }

    /// Comma-separated list (brackets optional).
    pub fn list(&self, k: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(k) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .trim_matches(|c| c == '[' || c == ']')
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|e| Error::Config(format!("{k}: '{s}': {e}"))))
                .collect(),
        }
    }

    pub fn flag(&self, k: &str, default: bool) -> Result<bool> {
        match self.get(k) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(Error::Config(format!("{k} = '{v}' is not a boolean"))),
        }
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys_and_comments() {
        let c = Config::parse("# standard\nparams.rho = 1.5\nkernel.id = \"circle-harmonic-1\" # builtin\n\n").unwrap();
        assert_eq!(c.get("params.rho"), Some("1.5"));
        assert_eq!(c.get("kernel.id"), Some("circle-harmonic-1"));
        assert_eq!(c.num::<f64>("params.rho", 0.0).unwrap(), 1.5);
        assert_eq!(c.num::<f64>("params.lambda", 3.0).unwrap(), 3.0);
    }

    #[test]
    fn overrides_win_and_lists_parse() {
        let mut c = Config::parse("params.beta = 0.4\nlp.radii = [0.25, 0.5]").unwrap();
        c.set("params.beta=0.6").unwrap();
        assert_eq!(c.get("params.beta"), Some("0.6"));
        assert_eq!(c.list("lp.radii", &[]).unwrap(), vec![0.25, 0.5]);
        assert!(c.set("nonsense").is_err());
        assert!(Config::parse("novalue").is_err());
    }
}

//! Flat `key = value` configuration files with `#` comments.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "patch",
    "height",
    "stride",
    "k",
    "epsilon",
    "lambda",
    "modes",
    "max_sweeps",
    "enforce",
    "seed",
    "dims",
    "ellipsoids",
    "factor",
    "heights",
    "peak",
    "record_runtime",
    "lo",
    "hi",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::validation(format!("config line {}: unknown key {key:?}", n + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::validation(format!("config line {}: duplicate key {key:?}", n + 1)));
            }
        }
        Ok(Config { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::validation(format!("config key {key:?}: cannot parse {v:?}")))
            })
            .transpose()
    }

    /// Whitespace- or comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.values
            .get(key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::validation(format!("config key {key:?}: cannot parse {s:?}")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Flag beats config file beats built-in default.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn resolve_list<T: FromStr>(&self, flag: Option<Vec<T>>, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get_list(key)?.unwrap_or(default)),
        }
    }
}

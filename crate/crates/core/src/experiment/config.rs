//! Flat `key = value` configuration with typed, validated lookups.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::catalog::{ExperimentKind, KeyDoc};
use crate::error::{Error, Result};

/// A parsed configuration. Keys outside the experiment's schema are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    entries: BTreeMap<String, String>,
}

/// Keys accepted by every experiment.
pub const COMMON_KEYS: &[KeyDoc] = &[
    KeyDoc::new("experiment", "", "experiment name"),
    KeyDoc::new("seed", "0", "master seed; every random stream derives from it"),
    KeyDoc::new("out", "results", "output directory"),
];

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k}", n + 1)));
            }
        }
        let name = entries
            .get("experiment")
            .ok_or_else(|| Error::Config("missing key: experiment".into()))?;
        let kind = ExperimentKind::from_name(name)?;
        let cfg = ExperimentConfig { kind, entries };
        cfg.check_keys()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Defaults only.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("experiment".to_string(), kind.name().to_string());
        ExperimentConfig { kind, entries }
    }

    fn known(&self, key: &str) -> Option<&'static KeyDoc> {
        COMMON_KEYS.iter().chain(self.kind.keys()).find(|d| d.key == key)
    }

    fn check_keys(&self) -> Result<()> {
        for k in self.entries.keys() {
            if self.known(k).is_none() {
                return Err(Error::Config(format!(
                    "unknown key {k:?} for experiment {}; run `describe {}` for the accepted keys",
                    self.kind.name(),
                    self.kind.name()
                )));
            }
        }
        Ok(())
    }

    /// Overrides one key; `experiment` itself cannot be changed this way.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "experiment" {
            return Err(Error::Config("the experiment cannot be overridden".into()));
        }
        if self.known(key).is_none() {
            return Err(Error::Config(format!("unknown key {key:?} for experiment {}", self.kind.name())));
        }
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override must be key=value, got {assignment:?}")))?;
        self.set(k.trim(), v)
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        if let Some(v) = self.entries.get(key) {
            return Ok(v);
        }
        self.known(key)
            .map(|d| d.default)
            .ok_or_else(|| Error::Config(format!("unknown key {key:?}")))
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key)?;
        let v = parse_f64(raw).map_err(|e| Error::Config(format!("{key}: {e}")))?;
        if !v.is_finite() {
            return Err(Error::Config(format!("{key}: {raw} is not finite")));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("{key}: expected a nonnegative integer, got {raw:?}")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("{key}: expected a nonnegative integer, got {raw:?}")))
    }

    pub fn string(&self, key: &str) -> Result<String> {
        Ok(self.raw(key)?.to_string())
    }

    pub fn vector(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(self.raw(key)?).map_err(|e| Error::Config(format!("{key}: {e}")))
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        self.raw(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: bad integer {s:?}")))
            })
            .collect()
    }

    /// Rows separated by `;`, entries by `,`.
    pub fn matrix(&self, key: &str) -> Result<DMatrix<f64>> {
        let raw = self.raw(key)?;
        let rows: Vec<Vec<f64>> = raw
            .split(';')
            .map(|r| parse_list(r).map_err(|e| Error::Config(format!("{key}: {e}"))))
            .collect::<Result<_>>()?;
        let ncols = rows.first().map_or(0, Vec::len);
        if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Config(format!("{key}: rows must be nonempty and of equal length")));
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64("seed")
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        Ok(PathBuf::from(self.raw("out")?))
    }
}

/// Accepts decimals and simple fractions such as `1/3`.
fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (f64, f64) = (
            a.trim().parse().map_err(|_| format!("bad number {s:?}"))?,
            b.trim().parse().map_err(|_| format!("bad number {s:?}"))?,
        );
        return Ok(a / b);
    }
    s.parse().map_err(|_| format!("bad number {s:?}"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

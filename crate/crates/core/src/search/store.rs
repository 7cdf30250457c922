//! Persistent best-results store: a JSON array of [`SearchResult`] records.
//!
//! Writers take an exclusive lock file next to the store, re-read the current
//! contents, append only strict improvements and replace the file atomically
//! through a temporary sibling. Readers never see a partial file.

use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::SearchResult;
use crate::constants::CertifiedLowers;
use crate::error::{Error, Result};
use crate::scalar::ScalarField;

/// Improvements smaller than this are not recorded.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

const LOCK_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq)]
pub struct ResultStore {
    path: PathBuf,
    records: Vec<SearchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CommitOutcome {
    Stored { previous: Option<f64> },
    NotImproved { stored: f64 },
}

impl ResultStore {
    /// Read the store; a missing file is an empty store.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => String::new(),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let records = parse_records(&path, &text)?;
        Ok(Self { path, records })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[SearchResult] {
        &self.records
    }

    /// Best record for an exact shape.
    pub fn best(&self, field: ScalarField, degree: usize, dim: usize) -> Option<&SearchResult> {
        self.records
            .iter()
            .filter(|r| r.field == field && r.degree == degree && r.dim == dim)
            .fold(None, |best: Option<&SearchResult>, r| match best {
                Some(b) if b.certified_lower >= r.certified_lower => Some(b),
                _ => Some(r),
            })
    }

    /// Append `result` if it beats the stored record for its shape.
    pub fn commit(path: impl AsRef<Path>, result: &SearchResult) -> Result<CommitOutcome> {
        let path = path.as_ref();
        let _lock = LockGuard::acquire(path)?;
        let mut store = Self::open(path)?;
        let previous = store
            .best(result.field, result.degree, result.dim)
            .map(|r| r.certified_lower);
        if let Some(stored) = previous {
            if result.certified_lower <= stored + IMPROVEMENT_TOL {
                return Ok(CommitOutcome::NotImproved { stored });
            }
        }
        store.records.push(result.clone());
        store.write()?;
        Ok(CommitOutcome::Stored { previous })
    }

    fn write(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.records)?;
        let tmp = sibling(&self.path, "tmp");
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(text.as_bytes())
            .and_then(|_| f.write_all(b"\n"))
            .and_then(|_| f.sync_all())
            .map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &self.path).map_err(|e| Error::io(&self.path, e))
    }
}

fn parse_records(path: &Path, text: &str) -> Result<Vec<SearchResult>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let corrupt = |record: usize, reason: String| Error::CorruptStore {
        path: path.to_path_buf(),
        record,
        reason,
    };
    let values: Vec<serde_json::Value> = serde_json::from_str(text)
        .map_err(|e| corrupt(0, format!("not a JSON array of records: {e}")))?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let r: SearchResult =
                serde_json::from_value(v).map_err(|e| corrupt(i, e.to_string()))?;
            r.validate().map_err(|e| corrupt(i, e.to_string()))?;
            Ok(r)
        })
        .collect()
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(store: &Path) -> Result<Self> {
        let path = sibling(store, "lock");
        let start = Instant::now();
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(Self(path)),
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    if start.elapsed() > LOCK_TIMEOUT {
                        return Err(Error::io(
                            &path,
                            std::io::Error::new(
                                ErrorKind::WouldBlock,
                                "store is locked by another writer",
                            ),
                        ));
                    }
                    thread::sleep(Duration::from_millis(10));
                }
                Err(e) => return Err(Error::io(&path, e)),
            }
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl CertifiedLowers<f64> for ResultStore {
    fn best_certified(&self, field: ScalarField, n: usize) -> Option<(f64, String)> {
        self.records
            .iter()
            .filter(|r| r.field == field && r.degree == n)
            .fold(None, |best: Option<&SearchResult>, r| match best {
                Some(b) if b.certified_lower >= r.certified_lower => Some(b),
                _ => Some(r),
            })
            .map(|r| {
                (
                    r.certified_lower,
                    format!("search N={} {}", r.dim, r.sup.kind.as_str()),
                )
            })
    }
}

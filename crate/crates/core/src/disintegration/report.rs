use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact text of the two sides, for exact backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactValues {
    pub lhs: String,
    pub rhs: String,
    pub difference: String,
}

/// One `(test, depth)` comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub test: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactValues>,
    pub pass: bool,
}

impl CheckEntry {
    /// `|lhs − rhs| ≤ tol`; with `tol = 0` on an exact backend the difference
    /// must be exactly zero.
    pub fn compare<S: Scalar>(test: &str, depth: Option<usize>, lhs: &S, rhs: &S, tol: f64) -> Self {
        let diff = lhs.clone() - rhs.clone();
        let discrepancy = diff.abs().to_f64();
        let pass = if S::is_exact() && tol == 0.0 { diff.is_zero() } else { discrepancy <= tol };
        let exact = S::is_exact().then(|| ExactValues {
            lhs: lhs.to_text(),
            rhs: rhs.to_text(),
            difference: diff.to_text(),
        });
        CheckEntry { test: test.to_string(), depth, lhs: lhs.to_f64(), rhs: rhs.to_f64(), discrepancy, exact, pass }
    }
}

/// Results of one check over a test family.
///
/// Runtimes are kept out of the serialized form so report files are
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle_id: Option<String>,
    pub tolerance: f64,
    pub max_discrepancy: f64,
    pub pass: bool,
    pub config: BTreeMap<String, String>,
    pub entries: Vec<CheckEntry>,
    #[serde(skip)]
    pub runtime: Option<Duration>,
}

impl CheckReport {
    pub fn new(check: &str, tolerance: f64) -> Self {
        CheckReport {
            check: check.to_string(),
            bundle_id: None,
            tolerance,
            max_discrepancy: 0.0,
            pass: true,
            config: BTreeMap::new(),
            entries: Vec::new(),
            runtime: None,
        }
    }

    pub fn with_bundle(mut self, id: &str) -> Self {
        self.bundle_id = Some(id.to_string());
        self
    }

    pub fn echo(&mut self, key: &str, value: impl Into<String>) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn push(&mut self, entry: CheckEntry) {
        // NaN compares false both ways; count it as a failure and surface it
        if entry.discrepancy > self.max_discrepancy || entry.discrepancy.is_nan() {
            self.max_discrepancy = entry.discrepancy;
        }
        self.pass &= entry.pass;
        self.entries.push(entry);
    }

    /// Appends the entries of `other`, which must come from the same bundle.
    pub fn merge(&mut self, other: CheckReport) -> Result<()> {
        if self.bundle_id != other.bundle_id {
            return Err(Error::InvalidInput(format!(
                "cannot merge reports of bundles {:?} and {:?}",
                self.bundle_id, other.bundle_id
            )));
        }
        for e in other.entries {
            self.push(e);
        }
        for (k, v) in other.config {
            self.config.entry(k).or_insert(v);
        }
        Ok(())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

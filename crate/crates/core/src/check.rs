//! Uniform record type for verification checks.
//!
//! Every quantitative check in the laboratory produces a [`CheckRecord`]:
//! a named comparison of a left-hand side against a right-hand side at a
//! stated tolerance, tagged with the anchor of the identity or inequality
//! it verifies. Runners collect these into manifests and CSV tables.

use serde::{Deserialize, Serialize};

/// Result of one verification check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Unique check name, stable across runs.
    pub name: String,
    /// Identifier of the identity/inequality verified, e.g. "cn" or "tk".
    pub anchor: String,
    /// Measure (or other subject) the check ran against.
    pub subject: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Tolerance the comparison was run at (absolute or relative per check).
    pub tolerance: f64,
    /// Signed slack; nonnegative means pass for one-sided checks.
    pub margin: f64,
    pub pass: bool,
    /// Pass-required checks gate the exit status; diagnostic ones do not.
    pub required: bool,
}

impl CheckRecord {
    /// Two-sided comparison |lhs - rhs| <= tol.
    pub fn close(
        name: impl Into<String>,
        anchor: impl Into<String>,
        subject: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) -> Self {
        let margin = tol - (lhs - rhs).abs();
        Self {
            name: name.into(),
            anchor: anchor.into(),
            subject: subject.into(),
            lhs,
            rhs,
            tolerance: tol,
            margin,
            pass: margin >= 0.0,
            required: true,
        }
    }

    /// One-sided comparison lhs <= rhs + tol.
    pub fn upper_bound(
        name: impl Into<String>,
        anchor: impl Into<String>,
        subject: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) -> Self {
        let margin = rhs + tol - lhs;
        Self {
            name: name.into(),
            anchor: anchor.into(),
            subject: subject.into(),
            lhs,
            rhs,
            tolerance: tol,
            margin,
            pass: margin >= 0.0,
            required: true,
        }
    }

    /// Boolean check with an attached measurement.
    pub fn flag(
        name: impl Into<String>,
        anchor: impl Into<String>,
        subject: impl Into<String>,
        pass: bool,
        lhs: f64,
        rhs: f64,
    ) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            subject: subject.into(),
            lhs,
            rhs,
            tolerance: 0.0,
            margin: if pass { 0.0 } else { -1.0 },
            pass,
            required: true,
        }
    }

    /// Mark the check as diagnostic (reported, never gating).
    pub fn diagnostic(mut self) -> Self {
        self.required = false;
        self
    }
}

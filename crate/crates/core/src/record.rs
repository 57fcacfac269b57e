//! Outcome records shared by the inequality checks.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// One side-term of an inequality with its certified interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Term {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), lower, upper }
    }

    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, value)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `lhs ≥ Σ rhs + rhs_constant`, evaluated on intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub check: String,
    pub lhs: Term,
    pub rhs: Vec<Term>,
    pub rhs_constant: f64,
    /// Tolerance granted before a violation counts as a failure.
    pub allowance: f64,
    /// Margin of the failure test; negative means failed.
    pub slack: f64,
    pub status: CheckStatus,
    pub note: String,
}

impl InequalityRecord {
    pub fn rhs_lower(&self) -> f64 {
        self.rhs.iter().map(|t| t.lower).sum::<f64>() + self.rhs_constant
    }

    pub fn rhs_upper(&self) -> f64 {
        self.rhs.iter().map(|t| t.upper).sum::<f64>() + self.rhs_constant
    }
}

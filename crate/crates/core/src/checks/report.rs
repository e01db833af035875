use serde::{Deserialize, Serialize};

use crate::constants::ConstantPrimitives;
use crate::scalar::Real;

/// Verdict of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    RatioExtracted,
    HypothesisNotMet,
    Unavailable,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::RatioExtracted => "ratio-extracted",
            Status::HypothesisNotMet => "hypothesis-not-met",
            Status::Unavailable => "unavailable",
        })
    }
}

/// One sampled comparison `lhs` vs `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Detail<T> {
    pub t: Option<T>,
    pub label: Option<String>,
    pub lhs: T,
    pub rhs: T,
    /// Check-specific score; larger is worse.
    pub score: T,
}

impl<T: Real> Detail<T> {
    pub fn at(t: T, lhs: T, rhs: T, score: T) -> Self {
        Self {
            t: Some(t),
            label: None,
            lhs,
            rhs,
            score,
        }
    }

    pub fn labeled(label: impl Into<String>, lhs: T, rhs: T, score: T) -> Self {
        Self {
            t: None,
            label: Some(label.into()),
            lhs,
            rhs,
            score,
        }
    }
}

/// Hypothesis verdict for one rigidity criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Verdict<T> {
    pub criterion: String,
    /// `None` when a required invariant is missing.
    pub holds: Option<bool>,
    pub quantity: Option<T>,
    pub threshold: Option<T>,
    /// `threshold - quantity`.
    pub margin: Option<T>,
    pub conclusion: String,
    pub notes: Vec<String>,
}

pub const MAX_DETAILS: usize = 5;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CheckReport<T> {
    pub name: String,
    pub status: Status,
    pub sup_ratio: Option<T>,
    pub fitted_constant: Option<T>,
    pub samples: usize,
    /// Worst offenders, highest score first.
    pub details: Vec<Detail<T>>,
    pub notes: Vec<String>,
    /// Every sample was degenerate (for example zero curvature throughout).
    pub vacuous: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<Verdict<T>>,
    pub primitives_echo: Option<ConstantPrimitives<T>>,
}

impl<T: Real> CheckReport<T> {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        Self {
            name: name.into(),
            status,
            sup_ratio: None,
            fitted_constant: None,
            samples: 0,
            details: Vec::new(),
            notes: Vec::new(),
            vacuous: false,
            verdicts: Vec::new(),
            primitives_echo: None,
        }
    }

    pub fn with_primitives(mut self, p: &ConstantPrimitives<T>) -> Self {
        self.primitives_echo = Some(*p);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Keeps the worst `MAX_DETAILS` entries.
    pub fn set_details(&mut self, mut all: Vec<Detail<T>>) {
        all.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
        all.truncate(MAX_DETAILS);
        self.details = all;
    }

    /// Explicit-constant failure.
    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Sorts reports by name so concurrent runs merge deterministically.
pub fn sort_reports<T>(reports: &mut [CheckReport<T>]) {
    reports.sort_by(|a, b| a.name.cmp(&b.name));
}

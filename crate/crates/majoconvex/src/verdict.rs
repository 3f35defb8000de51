//! Outcomes of sampled property checks.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Verified,
    Refuted,
    Inconclusive,
}

/// The input on which a property failed, kept as JSON so reports stay
/// self-describing, together with the violating margin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub input: serde_json::Value,
    pub margin: f64,
}

/// Result of a sampled check. `worst_margin` is the most adverse margin
/// seen over all samples (sign convention: nonnegative means the property
/// held), recorded even for verified outcomes so thresholds can be audited.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub samples_checked: u64,
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    pub fn verified(samples_checked: u64, worst_margin: f64) -> Self {
        Verdict {
            status: VerdictStatus::Verified,
            samples_checked,
            worst_margin,
            witness: None,
            detail: None,
        }
    }

    pub fn refuted(samples_checked: u64, witness: Witness) -> Self {
        Verdict {
            status: VerdictStatus::Refuted,
            samples_checked,
            worst_margin: witness.margin,
            witness: Some(witness),
            detail: None,
        }
    }

    pub fn inconclusive(samples_checked: u64, reason: impl Into<String>) -> Self {
        Verdict {
            status: VerdictStatus::Inconclusive,
            samples_checked,
            worst_margin: f64::NAN,
            witness: None,
            detail: Some(reason.into()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn is_verified(&self) -> bool {
        self.status == VerdictStatus::Verified
    }

    pub fn is_refuted(&self) -> bool {
        self.status == VerdictStatus::Refuted
    }
}

/// Tracks the most adverse margin over a sweep and the first witness that
/// crossed the tolerance.
#[derive(Debug, Default)]
pub struct MarginTracker {
    pub worst: f64,
    pub witness: Option<Witness>,
    pub samples: u64,
}

impl MarginTracker {
    pub fn new() -> Self {
        MarginTracker {
            worst: f64::INFINITY,
            witness: None,
            samples: 0,
        }
    }

    /// Records one sample margin; the first margin below `-tol` becomes
    /// the reported witness (the worst margin keeps being tracked).
    pub fn record(&mut self, margin: f64, tol: f64, input: impl FnOnce() -> serde_json::Value) {
        self.samples += 1;
        if margin < self.worst {
            self.worst = margin;
        }
        if margin < -tol && self.witness.is_none() {
            self.witness = Some(Witness {
                input: input(),
                margin,
            });
        }
    }

    pub fn finish(self) -> Verdict {
        match self.witness {
            Some(w) => {
                let mut v = Verdict::refuted(self.samples, w);
                v.worst_margin = self.worst;
                v
            }
            None => Verdict::verified(
                self.samples,
                if self.worst.is_finite() { self.worst } else { 0.0 },
            ),
        }
    }
}

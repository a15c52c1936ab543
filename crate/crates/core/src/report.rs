//! Check records: one computed number compared against a reference.

use serde::{Deserialize, Serialize};

use crate::tolerances::{self, ABS_FLOOR};

/// How a computed value is compared with its reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `|computed - reference| ≤ tol · max(|reference|, floor)`
    Eq,
    /// `computed ≥ reference - tol · max(|reference|, floor)`
    Ge,
    /// `computed ≤ reference + tol · max(|reference|, floor)`
    Le,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, kind: CheckKind, computed: f64, reference: f64, tolerance: f64) -> Self {
        let pass = computed.is_finite()
            && match kind {
                CheckKind::Eq => tolerances::close(computed, reference, tolerance),
                CheckKind::Ge => tolerances::at_least(computed, reference, tolerance),
                CheckKind::Le => tolerances::at_most(computed, reference, tolerance),
            };
        CheckRecord { name: name.into(), computed, reference, tolerance, kind, pass }
    }

    pub fn eq(name: impl Into<String>, computed: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, CheckKind::Eq, computed, reference, tolerance)
    }

    pub fn ge(name: impl Into<String>, computed: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, CheckKind::Ge, computed, reference, tolerance)
    }

    pub fn le(name: impl Into<String>, computed: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, CheckKind::Le, computed, reference, tolerance)
    }

    /// A residual-style check: `computed ≤ bound` in absolute terms.
    pub fn below(name: impl Into<String>, computed: f64, bound: f64) -> Self {
        let pass = computed.is_finite() && computed <= bound;
        CheckRecord { name: name.into(), computed, reference: bound, tolerance: 0.0, kind: CheckKind::Le, pass }
    }

    /// A boolean outcome recorded as 1/0 against reference 1.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        CheckRecord { name: name.into(), computed: v, reference: 1.0, tolerance: 0.0, kind: CheckKind::Eq, pass: ok }
    }

    /// Margin by which the check passes (positive) or fails (negative), in units of the tolerance band.
    pub fn slack(&self) -> f64 {
        let band = self.tolerance * self.reference.abs().max(ABS_FLOOR);
        match self.kind {
            CheckKind::Eq => band - (self.computed - self.reference).abs(),
            CheckKind::Ge => self.computed - self.reference + band,
            CheckKind::Le => self.reference + band - self.computed,
        }
    }
}

pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::{min_less, min_more, min_unconstrained, shift_argument, PiecewiseCost};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    /// Any change of mean.
    Any,
    /// `u_prev + gap <= u_next`.
    Up,
    /// `u_prev >= u_next + gap`.
    Down,
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChangeKind::Any => "any",
            ChangeKind::Up => "up",
            ChangeKind::Down => "down",
        })
    }
}

impl FromStr for ChangeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "any" => Ok(ChangeKind::Any),
            "up" => Ok(ChangeKind::Up),
            "down" => Ok(ChangeKind::Down),
            other => Err(Error::InvalidConstraint(format!("unknown change kind {other:?}"))),
        }
    }
}

/// Constraint between the means of two adjacent segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeConstraint {
    pub kind: ChangeKind,
    /// Minimum size of the change; zero for `Any`.
    pub gap: f64,
}

impl ChangeConstraint {
    pub const ANY: ChangeConstraint = ChangeConstraint {
        kind: ChangeKind::Any,
        gap: 0.0,
    };
    pub const UP: ChangeConstraint = ChangeConstraint {
        kind: ChangeKind::Up,
        gap: 0.0,
    };
    pub const DOWN: ChangeConstraint = ChangeConstraint {
        kind: ChangeKind::Down,
        gap: 0.0,
    };

    pub fn new(kind: ChangeKind, gap: f64) -> Result<Self> {
        if !(gap >= 0.0) || !gap.is_finite() {
            return Err(Error::InvalidConstraint(format!("gap must be a finite non-negative number, got {gap}")));
        }
        if kind == ChangeKind::Any && gap != 0.0 {
            return Err(Error::InvalidConstraint("an unconstrained change cannot have a gap".into()));
        }
        Ok(ChangeConstraint { kind, gap })
    }

    /// Whether `prev -> next` satisfies the constraint up to `slack`.
    pub fn allows(&self, prev: f64, next: f64, slack: f64) -> bool {
        match self.kind {
            ChangeKind::Any => true,
            ChangeKind::Up => prev + self.gap <= next + slack,
            ChangeKind::Down => prev >= next + self.gap - slack,
        }
    }

    /// Cost of changing into mean `mu` from a previous segment whose cost is
    /// `f`: `min { f(x) : x -> mu allowed }`. `None` when no mean of the
    /// domain can be reached.
    pub fn apply(&self, t_prev: usize, f: &PiecewiseCost) -> Result<Option<PiecewiseCost>> {
        match self.kind {
            ChangeKind::Any => Ok(Some(min_unconstrained(t_prev, f))),
            ChangeKind::Up => shift_argument(&min_less(t_prev, f), self.gap),
            ChangeKind::Down => shift_argument(&min_more(t_prev, f), -self.gap),
        }
    }
}

/// Constraints for changes `1..K-1` of a segment-budget model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstraintSchedule {
    Unconstrained,
    /// Every change is non-decreasing.
    ReducedIsotonic,
    /// Odd changes go up, even changes go down.
    UpDown,
    /// One constraint per change.
    Explicit(Vec<ChangeConstraint>),
}

impl ConstraintSchedule {
    /// Constraint of change `j` (1-based), i.e. between segments `j` and `j + 1`.
    pub fn change(&self, j: usize) -> ChangeConstraint {
        match self {
            ConstraintSchedule::Unconstrained => ChangeConstraint::ANY,
            ConstraintSchedule::ReducedIsotonic => ChangeConstraint::UP,
            ConstraintSchedule::UpDown if j % 2 == 1 => ChangeConstraint::UP,
            ConstraintSchedule::UpDown => ChangeConstraint::DOWN,
            ConstraintSchedule::Explicit(list) => list[j - 1],
        }
    }

    /// Checks that the schedule covers a model with `k_max` segments.
    pub fn validate(&self, k_max: usize) -> Result<()> {
        if let ConstraintSchedule::Explicit(list) = self {
            if list.len() + 1 != k_max {
                return Err(Error::InvalidConstraint(format!(
                    "{} segments need {} constraints, got {}",
                    k_max,
                    k_max.saturating_sub(1),
                    list.len()
                )));
            }
        }
        Ok(())
    }

    /// Same schedule with every constrained change requiring at least `gap`.
    pub fn with_gap(&self, k_max: usize, gap: f64) -> Result<ConstraintSchedule> {
        if gap == 0.0 {
            return Ok(self.clone());
        }
        let list = (1..k_max)
            .map(|j| {
                let c = self.change(j);
                match c.kind {
                    ChangeKind::Any => Ok(c),
                    kind => ChangeConstraint::new(kind, gap),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConstraintSchedule::Explicit(list))
    }

    /// Largest gap among the first `k_max - 1` changes.
    pub fn max_gap(&self, k_max: usize) -> f64 {
        (1..k_max).map(|j| self.change(j).gap).fold(0.0, f64::max)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstraintSchedule::Unconstrained => "unconstrained",
            ConstraintSchedule::ReducedIsotonic => "isotonic",
            ConstraintSchedule::UpDown => "updown",
            ConstraintSchedule::Explicit(_) => "explicit",
        }
    }
}

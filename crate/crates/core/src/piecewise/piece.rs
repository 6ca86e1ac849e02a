// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::loss::{Coeffs, LossFamily};

/// Identifier of a state in a segmentation model graph.
pub type StateId = u16;

/// Where the previous segment's mean comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PrevMean {
    /// No previous segment (first segment of the model).
    Unset,
    /// The previous segment has the same mean as this one.
    EqualityActive,
    /// The previous segment's mean is this mean minus the offset (a tight
    /// gap constraint). Stored in coordinate units; square loss only.
    Offset(f64),
    /// An explicit previous mean, in the piece's storage coordinate.
    Value(f64),
}

impl PrevMean {
    /// Previous-segment coordinate when the current segment sits at `x`.
    pub fn resolve(self, x: f64) -> Option<f64> {
        match self {
            PrevMean::Unset => None,
            PrevMean::EqualityActive => Some(x),
            PrevMean::Offset(delta) => Some(x - delta),
            PrevMean::Value(v) => Some(v),
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, PrevMean::EqualityActive)
    }

    /// Converts a stored `Value` from storage coordinate to the mean scale.
    pub fn to_mean(self, loss: LossFamily) -> PrevMean {
        match self {
            PrevMean::Value(v) => PrevMean::Value(loss.to_mean(v)),
            other => other,
        }
    }
}

/// One convex piece of a cost function together with the backpointers
/// needed to decode the optimal segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionPiece {
    pub coeffs: Coeffs,
    /// Interval bounds in storage coordinate (log-mean for Poisson).
    pub lower: f64,
    pub upper: f64,
    /// End of the previous segment; 0 means there is none.
    pub prev_end: usize,
    pub prev_mean: PrevMean,
    /// State of the previous segment, for graph-constrained models.
    pub prev_state: Option<StateId>,
}

impl FunctionPiece {
    pub fn new(coeffs: Coeffs, lower: f64, upper: f64) -> Self {
        FunctionPiece {
            coeffs,
            lower,
            upper,
            prev_end: 0,
            prev_mean: PrevMean::Unset,
            prev_state: None,
        }
    }

    pub(crate) fn with_bounds(&self, lower: f64, upper: f64) -> Self {
        FunctionPiece {
            lower,
            upper,
            ..*self
        }
    }

    pub fn eval(&self, loss: LossFamily, x: f64) -> f64 {
        loss.eval(&self.coeffs, x)
    }

    pub fn lower_mean(&self, loss: LossFamily) -> f64 {
        loss.to_mean(self.lower)
    }

    pub fn upper_mean(&self, loss: LossFamily) -> f64 {
        loss.to_mean(self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Same coefficients and backpointers, so two adjacent pieces can merge.
    pub(crate) fn same_origin(&self, other: &FunctionPiece) -> bool {
        self.coeffs == other.coeffs
            && self.prev_end == other.prev_end
            && self.prev_mean == other.prev_mean
            && self.prev_state == other.prev_state
    }

    /// Minimiser of the piece restricted to `[lo, hi]` and its value.
    pub(crate) fn min_on(&self, loss: LossFamily, lo: f64, hi: f64) -> (f64, f64) {
        let x = match loss.argmin_coord(&self.coeffs) {
            Some(m) => m.clamp(lo, hi),
            None => lo,
        };
        (x, self.eval(loss, x))
    }
}

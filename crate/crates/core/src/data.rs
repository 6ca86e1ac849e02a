// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::LossFamily;

/// Data points `y_t` with positive weights `w_t`, usually the run-length
/// encoding of a raw sequence. Indices in the public API are 1-based to
/// match segment ends: `ends` refer to encoded positions `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSequence {
    values: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedSequence {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        if values.len() != weights.len() {
            return Err(Error::Misuse(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(v, "any"));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut total = 0.0;
        for &w in &weights {
            crate::piecewise::check_weight(w)?;
            total += w;
            cumulative.push(total);
        }
        Ok(WeightedSequence {
            values,
            weights,
            cumulative,
        })
    }

    /// Run-length encodes a raw sequence: adjacent equal values are merged
    /// into one point whose weight is the run length.
    pub fn from_values(raw: &[f64]) -> Result<Self> {
        Self::from_weighted(raw.iter().map(|&y| (y, 1.0)))
    }

    /// Merges adjacent equal values of an already weighted stream.
    pub fn from_weighted(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut values: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (y, w) in points {
            crate::piecewise::check_weight(w)?;
            match values.last() {
                Some(&last) if last == y => *weights.last_mut().expect("same length") += w,
                _ => {
                    values.push(y);
                    weights.push(w);
                }
            }
        }
        Self::new(values, weights)
    }

    /// Every raw value as its own unit-weight point, without merging.
    pub fn unit(raw: &[f64]) -> Result<Self> {
        Self::new(raw.to_vec(), vec![1.0; raw.len()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `W_t` for `t = 1..=n`, stored at index `t - 1`.
    pub fn cumulative_weights(&self) -> &[f64] {
        &self.cumulative
    }

    /// `W_t` with `W_0 = 0`.
    pub fn cumulative(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.cumulative[t - 1]
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Smallest and largest value.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)))
    }

    pub fn check_loss(&self, loss: LossFamily) -> Result<()> {
        self.values.iter().try_for_each(|&y| loss.check_value(y))
    }

    /// Whether all weights are whole numbers, so the sequence expands back
    /// to a raw sequence.
    pub fn has_integer_weights(&self) -> bool {
        self.weights.iter().all(|w| w.fract() == 0.0)
    }

    /// Raw sequence this encoding stands for.
    pub fn expand(&self) -> Result<Vec<f64>> {
        if !self.has_integer_weights() {
            return Err(Error::Misuse("cannot expand non-integer weights".into()));
        }
        let mut out = Vec::with_capacity(self.total_weight() as usize);
        for (&y, &w) in self.values.iter().zip(&self.weights) {
            out.extend(std::iter::repeat_n(y, w as usize));
        }
        Ok(out)
    }

    /// Position in the raw sequence of encoded end `t` (1-based, inclusive).
    pub fn expanded_end(&self, t: usize) -> usize {
        self.cumulative(t).round() as usize
    }
}

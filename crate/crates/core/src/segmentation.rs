// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintSchedule;
use crate::data::WeightedSequence;
use crate::piecewise::{LossFamily, StateId};

/// A decoded segmentation with `k` segments.
///
/// `ends` are 1-based inclusive indices into the (encoded) sequence, so
/// segment `i` covers `ends[i-1] + 1 ..= ends[i]` with an implicit
/// `ends[-1] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub means: Vec<f64>,
    pub ends: Vec<usize>,
    /// Model state of each segment, for graph-constrained models.
    pub states: Option<Vec<StateId>>,
    /// Unpenalized total loss.
    pub total_cost: f64,
    /// `merged[j]` is set when change `j + 1` is only nominal: the
    /// constraint was active and both segments share the same mean.
    pub merged: Vec<bool>,
}

impl Segmentation {
    /// Number of segments.
    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// Number of changes, including nominal ones.
    pub fn change_count(&self) -> usize {
        self.k() - 1
    }

    /// Changes that actually move the mean.
    pub fn effective_change_count(&self) -> usize {
        self.merged.iter().filter(|&&m| !m).count()
    }

    /// 0-based start of each segment.
    pub fn starts(&self) -> Vec<usize> {
        std::iter::once(0)
            .chain(self.ends[..self.ends.len() - 1].iter().copied())
            .collect()
    }

    /// Direct evaluation of the weighted loss on `data`.
    pub fn recompute_cost(&self, data: &WeightedSequence, loss: LossFamily) -> f64 {
        let mut total = 0.0;
        for (start, (&end, &mean)) in self.starts().into_iter().zip(self.ends.iter().zip(&self.means)) {
            for t in start..end {
                total += loss.loss(data.values()[t], data.weights()[t], mean);
            }
        }
        total
    }

    /// Whether every change satisfies `schedule` with the given slack.
    pub fn satisfies(&self, schedule: &ConstraintSchedule, slack: f64) -> bool {
        self.means
            .windows(2)
            .enumerate()
            .all(|(j, w)| schedule.change(j + 1).allows(w[0], w[1], slack))
    }

    /// Same segmentation with ends mapped to positions of the raw sequence
    /// that `data` encodes.
    pub fn expanded(&self, data: &WeightedSequence) -> Segmentation {
        Segmentation {
            ends: self.ends.iter().map(|&t| data.expanded_end(t)).collect(),
            ..self.clone()
        }
    }
}

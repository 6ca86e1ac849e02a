// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

/// Number of pieces (intervals) in every stored cost function.
///
/// Row `r` holds counts for consecutive `t` starting at `firsts[r]`; a zero
/// marks an unreachable cell, which the summaries skip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruningStats {
    firsts: Vec<usize>,
    rows: Vec<Vec<u32>>,
}

impl PruningStats {
    pub(crate) fn new(firsts: Vec<usize>) -> Self {
        let rows = vec![Vec::new(); firsts.len()];
        PruningStats { firsts, rows }
    }

    pub(crate) fn record(&mut self, row: usize, count: usize) {
        self.rows[row].push(u32::try_from(count).unwrap_or(u32::MAX));
    }

    /// Pieces of the function in `row` at data index `t`.
    pub fn count(&self, row: usize, t: usize) -> Option<u32> {
        let first = *self.firsts.get(row)?;
        if t < first {
            return None;
        }
        self.rows[row].get(t - first).copied()
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.rows[row]
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    fn reachable(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().flatten().copied().filter(|&c| c > 0)
    }

    /// Number of reachable cells.
    pub fn cells(&self) -> usize {
        self.reachable().count()
    }

    pub fn max(&self) -> u32 {
        self.reachable().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        let (sum, n) = self.reachable().fold((0u64, 0u64), |(s, n), c| (s + c as u64, n + 1));
        if n == 0 {
            0.0
        } else {
            sum as f64 / n as f64
        }
    }

    /// Median over reachable cells; the average of the two middle counts
    /// when their number is even.
    pub fn median(&self) -> f64 {
        let mut all: Vec<u32> = self.reachable().collect();
        let n = all.len();
        if n == 0 {
            return 0.0;
        }
        let (_, &mut hi, _) = all.select_nth_unstable(n / 2);
        if n % 2 == 1 {
            return hi as f64;
        }
        let lo = *all[..n / 2].iter().max().expect("n >= 2");
        0.5 * (lo as f64 + hi as f64)
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment-neighbourhood solver: optimal constrained segmentations with
//! `1..=K` segments by functional pruning.
//!
//! The table holds `C_{k,t}(mu)`, the best cost of `t` points in `k`
//! segments whose last mean is `mu`, divided by the cumulative weight
//! `W_t` to keep coefficients of order one:
//!
//! ```text
//! C_{1,t} = (W_{t-1} C_{1,t-1} + w_t l(y_t, .)) / W_t
//! C_{k,t} = (W_{t-1} min{ op_k(C_{k-1,t-1}), C_{k,t-1} } + w_t l(y_t, .)) / W_t
//! ```
//!
//! where `op_k` is the constrained minimisation operator of change `k - 1`.

use serde::{Deserialize, Serialize};

use crate::constraint::{ChangeConstraint, ChangeKind, ConstraintSchedule};
use crate::data::WeightedSequence;
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::piecewise::{min_of_two, Coeffs, Domain, LossFamily, PiecewiseCost, PrevMean};
use crate::segmentation::Segmentation;
use crate::stats::PruningStats;
use crate::storage::{Backpointer, Row, Storage};

/// Mean domain for a model: the data range, widened by the total gap a
/// chain of gapped changes can span.
pub(crate) fn model_domain(data: &WeightedSequence, loss: LossFamily, span: f64) -> Result<Domain> {
    let (lo, hi) = data.range();
    let base = Domain::for_data(loss, lo, hi)?;
    if span == 0.0 {
        return Ok(base);
    }
    if loss != LossFamily::Square {
        return Err(Error::UnsupportedGap(span));
    }
    Domain::new(base.lo - span, base.hi + span)
}

/// Filled dynamic-programming table.
#[derive(Debug, Clone)]
pub struct CostTable {
    loss: LossFamily,
    domain: Domain,
    k_max: usize,
    n: usize,
    weights: Vec<f64>,
    rows: Vec<Row>,
    finals: Vec<Option<PiecewiseCost>>,
    stats: PruningStats,
}

impl CostTable {
    pub fn loss(&self) -> LossFamily {
        self.loss
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> &PruningStats {
        &self.stats
    }

    /// `C_{k,n}` in normalised form (divided by `W_n`).
    pub fn final_cost(&self, k: usize) -> Option<&PiecewiseCost> {
        self.finals.get(k.checked_sub(1)?)?.as_ref()
    }

    /// Un-normalised `C_{k,t}`. Requires [`Storage::Full`] except for `t = n`.
    pub fn cost_function(&self, k: usize, t: usize) -> Option<PiecewiseCost> {
        if k == 0 || k > self.k_max || t == 0 || t > self.n {
            return None;
        }
        let f = if t == self.n {
            self.finals[k - 1].as_ref()
        } else {
            self.rows[k - 1].function(t)
        }?;
        let mut f = f.clone();
        f.scale(self.weights[t - 1]);
        Some(f)
    }

    /// Approximate memory held by stored functions, in bytes.
    pub fn heap_bytes(&self) -> usize {
        self.rows.iter().map(Row::heap_bytes).sum()
    }
}

/// Optimal models for every segment count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnSolution {
    /// `models[k - 1]` is the best `k`-segment model; `None` when no
    /// feasible model exists (possible only with gap constraints).
    pub models: Vec<Option<Segmentation>>,
    pub stats: PruningStats,
}

impl SnSolution {
    pub fn model(&self, k: usize) -> Option<&Segmentation> {
        self.models.get(k.checked_sub(1)?)?.as_ref()
    }
}

/// Runs the dynamic programming recursion for `1..=k_max` segments.
pub fn gpdpa_fill(
    data: &WeightedSequence,
    k_max: usize,
    schedule: &ConstraintSchedule,
    loss: LossFamily,
    storage: Storage,
) -> Result<CostTable> {
    let n = data.len();
    if k_max == 0 {
        return Err(Error::Misuse("at least one segment is required".into()));
    }
    if k_max > n {
        return Err(Error::Infeasible(format!("{k_max} segments requested for {n} data points")));
    }
    schedule.validate(k_max)?;
    data.check_loss(loss)?;
    let changes: Vec<ChangeConstraint> = (1..k_max).map(|j| schedule.change(j)).collect();
    let span: f64 = changes.iter().filter(|c| c.kind != ChangeKind::Any).map(|c| c.gap).sum();
    let domain = model_domain(data, loss, span)?;

    let mut rows: Vec<Row> = (1..=k_max).map(|k| Row::new(storage, k)).collect();
    let mut stats = PruningStats::new((1..=k_max).collect());
    let mut prev: Vec<Option<PiecewiseCost>> = vec![None; k_max];
    let mut cur: Vec<Option<PiecewiseCost>> = vec![None; k_max];

    for t in 1..=n {
        let (y, w) = (data.values()[t - 1], data.weights()[t - 1]);
        let w_t = data.cumulative(t);
        let factor = data.cumulative(t - 1) / w_t;
        // Descending k: cell k is the last reader of prev[k - 1].
        for k in (1..=k_max.min(t)).rev() {
            let stay = if k == 1 && t == 1 {
                Some(PiecewiseCost::from_coeffs(loss, domain, Coeffs::constant(0.0)))
            } else {
                prev[k - 1].take()
            };
            let next = if k == 1 {
                stay
            } else {
                let change = match &prev[k - 2] {
                    Some(g) => changes[k - 2].apply(t - 1, g)?,
                    None => None,
                };
                match (change, stay) {
                    (Some(c), Some(s)) => Some(min_of_two(&c, &s, true)?),
                    (c, s) => c.or(s),
                }
            };
            cur[k - 1] = next.map(|mut f| {
                f.scale_add_loss(factor, y, w / w_t);
                f
            });
        }
        for k in 1..=k_max.min(t) {
            let f = cur[k - 1].as_ref();
            stats.record(k - 1, f.map_or(0, PiecewiseCost::len));
            rows[k - 1].push(f);
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    Ok(CostTable {
        loss,
        domain,
        k_max,
        n,
        weights: data.cumulative_weights().to_vec(),
        rows,
        finals: prev,
        stats,
    })
}

/// Recovers the optimal `k`-segment model from a filled table.
pub fn decode(table: &CostTable, k: usize) -> Result<Segmentation> {
    if k == 0 || k > table.k_max {
        return Err(Error::Misuse(format!("model size {k} is outside 1..={}", table.k_max)));
    }
    let f = table.finals[k - 1]
        .as_ref()
        .ok_or_else(|| Error::Infeasible(format!("no feasible model with {k} segments")))?;
    let m = f.arg_min();
    let slack = 1e-9 * table.domain.scale();

    let mut coords = vec![0.0; k];
    let mut ends = vec![0; k];
    let mut merged = vec![false; k - 1];
    coords[k - 1] = m.coord;
    ends[k - 1] = table.n;
    let mut bp = Backpointer {
        prev_end: m.prev_end,
        prev_mean: m.prev_mean,
        prev_state: m.prev_state,
    };
    let mut cur = m.coord;
    for s in (1..k).rev() {
        let t_prev = bp.prev_end;
        if t_prev < s || t_prev >= ends[s] {
            return Err(Error::Inconsistent(format!(
                "segment {s} would end at {t_prev}, next segment ends at {}",
                ends[s]
            )));
        }
        let u = bp
            .prev_mean
            .resolve(cur)
            .ok_or_else(|| Error::Inconsistent(format!("segment {} has no previous mean", s + 1)))?;
        merged[s - 1] = bp.prev_mean == PrevMean::EqualityActive;
        ends[s - 1] = t_prev;
        coords[s - 1] = u;
        bp = table.rows[s - 1].lookup(t_prev, u, slack)?;
        cur = u;
    }
    if bp.prev_end != 0 {
        return Err(Error::Inconsistent(format!(
            "first segment points back to t = {}",
            bp.prev_end
        )));
    }
    Ok(Segmentation {
        means: coords.into_iter().map(|x| table.loss.to_mean(x)).collect(),
        ends,
        states: None,
        total_cost: m.cost * table.weights[table.n - 1],
        merged,
    })
}

/// Piece counts of every stored `C_{k,t}`.
pub fn pruning_stats(table: &CostTable) -> PruningStats {
    table.stats.clone()
}

/// Optimal models with `1..=k_max` segments under `schedule`.
pub fn gpdpa_solve(
    data: &WeightedSequence,
    k_max: usize,
    schedule: &ConstraintSchedule,
    loss: LossFamily,
) -> Result<SnSolution> {
    gpdpa_solve_with(data, k_max, schedule, loss, Storage::Backpointers)
}

pub fn gpdpa_solve_with(
    data: &WeightedSequence,
    k_max: usize,
    schedule: &ConstraintSchedule,
    loss: LossFamily,
    storage: Storage,
) -> Result<SnSolution> {
    let table = gpdpa_fill(data, k_max, schedule, loss, storage)?;
    let models = (1..=k_max)
        .map(|k| match decode(&table, k) {
            Ok(s) => Ok(Some(s)),
            Err(Error::Infeasible(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnSolution {
        models,
        stats: table.stats,
    })
}

/// [`gpdpa_solve`] on many independent sequences, results in input order.
pub fn gpdpa_solve_batch(
    batch: &[WeightedSequence],
    k_max: usize,
    schedule: &ConstraintSchedule,
    loss: LossFamily,
    exec: Execution,
) -> Vec<Result<SnSolution>> {
    exec.map(batch, |data| gpdpa_solve(data, k_max, schedule, loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::FunctionPiece;

    fn toy() -> WeightedSequence {
        WeightedSequence::from_values(&[2.0, 1.0, 0.0, 4.0]).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn toy_isotonic_two_segments() {
        let sol = gpdpa_solve(&toy(), 2, &ConstraintSchedule::ReducedIsotonic, LossFamily::Square).unwrap();
        let m = sol.model(2).unwrap();
        assert_eq!(m.ends, vec![3, 4]);
        assert!(close(m.means[0], 1.0) && close(m.means[1], 4.0));
        assert!(close(m.total_cost, 2.0));
        let one = sol.model(1).unwrap();
        assert!(close(one.means[0], 1.75) && close(one.total_cost, 8.75));
    }

    #[test]
    fn toy_table_matches_hand_computation() {
        let t = gpdpa_fill(&toy(), 2, &ConstraintSchedule::ReducedIsotonic, LossFamily::Square, Storage::Full)
            .unwrap();
        let c11 = t.cost_function(1, 1).unwrap();
        assert_eq!(c11.pieces()[0].coeffs, Coeffs::new(1.0, -4.0, 4.0));
        let c22 = t.cost_function(2, 2).unwrap();
        let ps: Vec<&FunctionPiece> = c22.pieces().iter().collect();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].coeffs, Coeffs::new(2.0, -6.0, 5.0));
        assert_eq!(ps[1].coeffs, Coeffs::new(1.0, -2.0, 1.0));
        assert_eq!(ps[0].upper, 2.0);
        assert_eq!(t.stats().count(0, 1), Some(1));
    }

    #[test]
    fn two_point_prefix_collapses_to_one_mean() {
        let data = WeightedSequence::from_values(&[2.0, 1.0]).unwrap();
        let iso = gpdpa_solve(&data, 2, &ConstraintSchedule::ReducedIsotonic, LossFamily::Square).unwrap();
        let m = iso.model(2).unwrap();
        assert_eq!(m.means, vec![1.5, 1.5]);
        assert_eq!(m.merged, vec![true]);
        assert_eq!(m.effective_change_count(), 0);
        let free = gpdpa_solve(&data, 2, &ConstraintSchedule::Unconstrained, LossFamily::Square).unwrap();
        assert_eq!(free.model(2).unwrap().means, vec![2.0, 1.0]);
    }

    #[test]
    fn poisson_updown_three_points() {
        let data = WeightedSequence::from_values(&[1.0, 5.0, 1.0]).unwrap();
        let sol = gpdpa_solve(&data, 3, &ConstraintSchedule::UpDown, LossFamily::Poisson).unwrap();
        let m = sol.model(3).unwrap();
        assert_eq!(m.ends, vec![1, 2, 3]);
        for (got, want) in m.means.iter().zip([1.0, 5.0, 1.0]) {
            assert!(close(*got, want), "{got} vs {want}");
        }
        assert!(close(m.total_cost, 7.0 - 5.0 * 5f64.ln()));
    }

    #[test]
    fn isotonic_three_segments_on_spread_data() {
        let data = WeightedSequence::from_values(&[2.0, 5.0, 30.0, 34.0, 600.0, 621.0]).unwrap();
        let sol = gpdpa_solve(&data, 3, &ConstraintSchedule::ReducedIsotonic, LossFamily::Square).unwrap();
        let m = sol.model(3).unwrap();
        assert_eq!(m.ends, vec![2, 4, 6]);
        for (got, want) in m.means.iter().zip([3.5, 32.0, 610.5]) {
            assert!(close(*got, want), "{got} vs {want}");
        }
    }

    #[test]
    fn too_many_segments_is_infeasible() {
        let r = gpdpa_solve(&toy(), 5, &ConstraintSchedule::Unconstrained, LossFamily::Square);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn gap_constraint_is_respected() {
        let data = WeightedSequence::from_values(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let schedule = ConstraintSchedule::ReducedIsotonic.with_gap(2, 2.0).unwrap();
        let sol = gpdpa_solve(&data, 2, &schedule, LossFamily::Square).unwrap();
        let m = sol.model(2).unwrap();
        assert!(m.means[1] - m.means[0] >= 2.0 - 1e-9);
        assert!(close(m.total_cost, m.recompute_cost(&data, LossFamily::Square)));
        // Symmetric around the data: means -0.5 and 1.5.
        assert_eq!(m.ends, vec![1, 2]);
        assert!(close(m.means[0], -0.5) && close(m.means[1], 1.5));
        assert!(close(m.total_cost, 1.5));
        assert!(!m.merged[0]);
    }

    #[test]
    fn storage_modes_decode_identically() {
        let data = WeightedSequence::from_values(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0]).unwrap();
        for schedule in [ConstraintSchedule::Unconstrained, ConstraintSchedule::ReducedIsotonic, ConstraintSchedule::UpDown] {
            let a = gpdpa_solve_with(&data, 4, &schedule, LossFamily::Square, Storage::Full).unwrap();
            let b = gpdpa_solve_with(&data, 4, &schedule, LossFamily::Square, Storage::Backpointers).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn batch_modes_agree() {
        let batch: Vec<_> = (0..6)
            .map(|i| WeightedSequence::unit(&[1.0, 4.0 + i as f64, 2.0, 0.0, 3.0]).unwrap())
            .collect();
        let seq = gpdpa_solve_batch(&batch, 3, &ConstraintSchedule::UpDown, LossFamily::Square, Execution::Sequential);
        let par = gpdpa_solve_batch(&batch, 3, &ConstraintSchedule::UpDown, LossFamily::Square, Execution::Parallel);
        assert_eq!(seq, par);
        assert_eq!(seq[2], gpdpa_solve(&batch[2], 3, &ConstraintSchedule::UpDown, LossFamily::Square));
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Penalised solver over a state graph by functional pruning.
//!
//! `C_{s,t}(mu)` is the best penalised cost of the first `t` points ending
//! in state `s` with last mean `mu`. Each step takes the minimum of staying
//! (no change) and every incoming edge's constrained cost plus its penalty,
//! then adds the loss of `y_t`. As in the segment-budget solver, functions
//! are stored divided by `W_t`.

mod graph;

pub use graph::{preset_graph, Edge, Preset, StateGraph};

use serde::{Deserialize, Serialize};

use crate::data::WeightedSequence;
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::piecewise::{min_of_two, Coeffs, LossFamily, PiecewiseCost, StateId};
use crate::segmentation::Segmentation;
use crate::segneigh::model_domain;
use crate::stats::PruningStats;
use crate::storage::{Backpointer, Row, Storage};

/// Optimal penalised segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedSolution {
    pub means: Vec<f64>,
    pub states: Vec<StateId>,
    /// 1-based inclusive segment ends; the last one is `n`.
    pub ends: Vec<usize>,
    pub change_count: usize,
    /// Changes whose constraint was active with equal means on both sides.
    pub merged: Vec<bool>,
    /// Loss plus penalties.
    pub penalized_cost: f64,
    /// Loss of the decoded segmentation, evaluated directly on the data.
    pub loss_cost: f64,
    pub stats: PruningStats,
}

impl PenalizedSolution {
    pub fn segmentation(&self) -> Segmentation {
        Segmentation {
            means: self.means.clone(),
            ends: self.ends.clone(),
            states: Some(self.states.clone()),
            total_cost: self.loss_cost,
            merged: self.merged.clone(),
        }
    }

    /// Whether consecutive segments are joined by an edge whose constraint
    /// holds, and the first and last states are allowed.
    pub fn is_valid_for(&self, graph: &StateGraph, slack: f64) -> bool {
        let (Some(&first), Some(&last)) = (self.states.first(), self.states.last()) else {
            return false;
        };
        graph.is_start(first)
            && graph.is_end(last)
            && (1..self.states.len()).all(|j| {
                graph
                    .edges_between(self.states[j - 1], self.states[j])
                    .any(|e| e.constraint.allows(self.means[j - 1], self.means[j], slack))
            })
    }
}

/// Optimal penalised segmentation for a state graph.
pub fn gfpop_solve(data: &WeightedSequence, graph: &StateGraph, loss: LossFamily) -> Result<PenalizedSolution> {
    gfpop_solve_with(data, graph, loss, Storage::Backpointers)
}

/// Penalised non-decreasing segmentation with penalty `lambda` per change.
pub fn gfpop_isotonic(data: &WeightedSequence, lambda: f64, loss: LossFamily) -> Result<PenalizedSolution> {
    gfpop_solve(data, &preset_graph(Preset::Isotonic, &[lambda])?, loss)
}

/// [`gfpop_solve`] on many independent sequences, results in input order.
pub fn gfpop_solve_batch(
    batch: &[WeightedSequence],
    graph: &StateGraph,
    loss: LossFamily,
    exec: Execution,
) -> Vec<Result<PenalizedSolution>> {
    exec.map(batch, |data| gfpop_solve(data, graph, loss))
}

pub fn gfpop_solve_with(
    data: &WeightedSequence,
    graph: &StateGraph,
    loss: LossFamily,
    storage: Storage,
) -> Result<PenalizedSolution> {
    data.check_loss(loss)?;
    let n = data.len();
    let states = graph.state_count();
    let span = graph.max_gap() * (n - 1) as f64;
    let domain = model_domain(data, loss, span)?;

    let mut rows: Vec<Row> = (0..states).map(|_| Row::new(storage, 1)).collect();
    let mut stats = PruningStats::new(vec![1; states]);
    let mut prev: Vec<Option<PiecewiseCost>> = vec![None; states];
    let mut cur: Vec<Option<PiecewiseCost>> = vec![None; states];

    for t in 1..=n {
        let (y, w) = (data.values()[t - 1], data.weights()[t - 1]);
        let w_prev = data.cumulative(t - 1);
        let w_t = data.cumulative(t);
        for s in 0..states {
            let state = s as StateId;
            let mut acc = if t == 1 {
                graph
                    .is_start(state)
                    .then(|| PiecewiseCost::from_coeffs(loss, domain, Coeffs::constant(0.0)))
            } else {
                prev[s].clone()
            };
            if t > 1 {
                for e in graph.edges().iter().filter(|e| e.target == state) {
                    let Some(src) = &prev[e.source as usize] else {
                        continue;
                    };
                    let Some(mut change) = e.constraint.apply(t - 1, src)? else {
                        continue;
                    };
                    change.set_prev_state(Some(e.source));
                    change.add_constant(e.penalty / w_prev);
                    acc = Some(match acc {
                        Some(a) => min_of_two(&change, &a, true)?,
                        None => change,
                    });
                }
            }
            cur[s] = acc.map(|mut f| {
                f.scale_add_loss(w_prev / w_t, y, w / w_t);
                f
            });
        }
        for s in 0..states {
            let f = cur[s].as_ref();
            stats.record(s, f.map_or(0, PiecewiseCost::len));
            rows[s].push(f);
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    // Best end state; ties go to the lowest state id.
    let mut best: Option<(StateId, crate::piecewise::Minimum)> = None;
    for &s in graph.end_states() {
        if let Some(f) = &prev[s as usize] {
            let m = f.arg_min();
            if best.is_none_or(|(_, b)| m.cost < b.cost) {
                best = Some((s, m));
            }
        }
    }
    let (last_state, m) =
        best.ok_or_else(|| Error::Infeasible("no end state is reachable at the last data point".into()))?;

    let slack = 1e-9 * domain.scale();
    let mut coords = vec![m.coord];
    let mut ends = vec![n];
    let mut seg_states = vec![last_state];
    let mut merged = Vec::new();
    let mut bp = Backpointer {
        prev_end: m.prev_end,
        prev_mean: m.prev_mean,
        prev_state: m.prev_state,
    };
    let mut cur_coord = m.coord;
    while bp.prev_end != 0 {
        let t_prev = bp.prev_end;
        if t_prev >= *ends.last().expect("non-empty") {
            return Err(Error::Inconsistent(format!("change at {t_prev} does not precede the segment end")));
        }
        let state = bp
            .prev_state
            .ok_or_else(|| Error::Inconsistent(format!("change at {t_prev} has no previous state")))?;
        let u = bp
            .prev_mean
            .resolve(cur_coord)
            .ok_or_else(|| Error::Inconsistent(format!("change at {t_prev} has no previous mean")))?;
        merged.push(bp.prev_mean.is_equality());
        coords.push(u);
        ends.push(t_prev);
        seg_states.push(state);
        bp = rows[state as usize].lookup(t_prev, u, slack)?;
        cur_coord = u;
    }
    let first_state = *seg_states.last().expect("non-empty");
    if !graph.is_start(first_state) {
        return Err(Error::Inconsistent(format!(
            "decoded path starts in {}, which is not a start state",
            graph.name(first_state)
        )));
    }
    coords.reverse();
    ends.reverse();
    seg_states.reverse();
    merged.reverse();

    let means: Vec<f64> = coords.into_iter().map(|x| loss.to_mean(x)).collect();
    let mut solution = PenalizedSolution {
        change_count: means.len() - 1,
        means,
        states: seg_states,
        ends,
        merged,
        penalized_cost: m.cost * data.total_weight(),
        loss_cost: 0.0,
        stats,
    };
    solution.loss_cost = solution.segmentation().recompute_cost(data, loss);
    Ok(solution)
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Brute-force reference solvers for testing. They share no code with the
//! functional-pruning solvers beyond the loss definition.

use crate::constraint::{ChangeConstraint, ConstraintSchedule};
use crate::data::WeightedSequence;
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::penalized::{Edge, StateGraph};
use crate::piecewise::{LossFamily, StateId};
use crate::segmentation::Segmentation;

/// Largest sequence [`enumerate_constrained`] accepts.
pub const MAX_ORACLE_N: usize = 12;

/// Weighted loss of mean `mean` on points `lo+1..=hi`.
pub fn segment_cost(data: &WeightedSequence, lo: usize, hi: usize, mean: f64, loss: LossFamily) -> Result<f64> {
    if lo >= hi || hi > data.len() {
        return Err(Error::Misuse(format!("bad segment bounds ({lo}, {hi}] for n = {}", data.len())));
    }
    Ok((lo..hi)
        .map(|t| loss.loss(data.values()[t], data.weights()[t], mean))
        .sum())
}

/// Optimal mean and cost of one segment, with running weighted statistics.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    weight: f64,
    mean: f64,
    /// Weighted sum of squared deviations from `mean`.
    m2: f64,
}

impl Running {
    fn push(&mut self, y: f64, w: f64) {
        self.weight += w;
        let delta = y - self.mean;
        self.mean += delta * w / self.weight;
        self.m2 += w * delta * (y - self.mean);
    }

    fn cost(&self, loss: LossFamily) -> f64 {
        match loss {
            LossFamily::Square => self.m2.max(0.0),
            LossFamily::Poisson => {
                let sum = self.mean * self.weight;
                if sum == 0.0 {
                    0.0
                } else {
                    sum - sum * self.mean.ln()
                }
            }
        }
    }
}

/// Optimal unconstrained costs for `1..=k_max` segments by the classic
/// `O(K n^2)` dynamic programme over segment ends.
pub fn dpa_unconstrained(data: &WeightedSequence, k_max: usize, loss: LossFamily) -> Result<Vec<f64>> {
    let n = data.len();
    if k_max == 0 || k_max > n {
        return Err(Error::Infeasible(format!("{k_max} segments requested for {n} data points")));
    }
    data.check_loss(loss)?;
    // cost[i][j]: best single-segment cost of points i+1..=j.
    let mut cost = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        let mut r = Running::default();
        for j in i + 1..=n {
            r.push(data.values()[j - 1], data.weights()[j - 1]);
            cost[i][j] = r.cost(loss);
        }
    }
    let mut best: Vec<f64> = (0..=n).map(|j| if j == 0 { 0.0 } else { cost[0][j] }).collect();
    let mut out = vec![best[n]];
    for k in 2..=k_max {
        let mut next = vec![f64::INFINITY; n + 1];
        for j in k..=n {
            next[j] = (k - 1..j)
                .map(|i| best[i] + cost[i][j])
                .fold(f64::INFINITY, f64::min);
        }
        out.push(next[n]);
        best = next;
    }
    Ok(out)
}

/// Model searched by [`enumerate_constrained`].
#[derive(Debug, Clone, Copy)]
pub enum OracleModel<'a> {
    /// Exactly `k` segments with changes constrained by the schedule.
    Schedule {
        k: usize,
        schedule: &'a ConstraintSchedule,
    },
    /// Any number of segments along paths of the state graph, penalised.
    Graph(&'a StateGraph),
}

/// Best solution found by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFit {
    /// Loss, plus penalties for graph models.
    pub cost: f64,
    pub segmentation: Segmentation,
}

/// Exhaustive search over changepoint placements (and state paths for
/// graphs). The means of each placement are fitted by dynamic programming
/// over a uniform grid of `grid_size` means (plus the weighted means of
/// every run of consecutive segments), then once more over a finer grid
/// around the coarse optimum. Results are feasible, so costs are never
/// below the true optimum.
pub fn enumerate_constrained(
    data: &WeightedSequence,
    model: OracleModel<'_>,
    loss: LossFamily,
    grid_size: usize,
) -> Result<OracleFit> {
    enumerate_constrained_with(data, model, loss, grid_size, Execution::default())
}

pub fn enumerate_constrained_with(
    data: &WeightedSequence,
    model: OracleModel<'_>,
    loss: LossFamily,
    grid_size: usize,
    exec: Execution,
) -> Result<OracleFit> {
    let n = data.len();
    if n > MAX_ORACLE_N {
        return Err(Error::TooLarge(format!("{n} points, the limit is {MAX_ORACLE_N}")));
    }
    if grid_size < 2 {
        return Err(Error::Misuse("the grid needs at least two points".into()));
    }
    data.check_loss(loss)?;

    let single;
    let (chain, placements): (Chain<'_>, Vec<Vec<usize>>) = match model {
        OracleModel::Schedule { k, schedule } => {
            if k == 0 || k > n {
                return Err(Error::Infeasible(format!("{k} segments requested for {n} data points")));
            }
            schedule.validate(k)?;
            single = (1..k)
                .map(|j| Edge {
                    source: 0,
                    target: 0,
                    penalty: 0.0,
                    constraint: schedule.change(j),
                })
                .collect::<Vec<_>>();
            (Chain::Schedule(&single), cuts_with(n, k - 1))
        }
        OracleModel::Graph(graph) => {
            let all = (0..n).flat_map(|c| cuts_with(n, c)).collect();
            (Chain::Graph(graph), all)
        }
    };

    let fits = exec.map(&placements, |cuts| fit_placement(data, &chain, loss, grid_size, cuts));
    let mut best: Option<OracleFit> = None;
    for fit in fits.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| fit.cost < b.cost) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Infeasible("no feasible segmentation".into()))
}

enum Chain<'a> {
    /// One edge per change index, single state.
    Schedule(&'a [Edge]),
    Graph(&'a StateGraph),
}

impl Chain<'_> {
    fn states(&self) -> usize {
        match self {
            Chain::Schedule(_) => 1,
            Chain::Graph(g) => g.state_count(),
        }
    }

    fn edges(&self, change: usize) -> &[Edge] {
        match self {
            Chain::Schedule(list) => std::slice::from_ref(&list[change - 1]),
            Chain::Graph(g) => g.edges(),
        }
    }

    fn starts(&self, s: StateId) -> bool {
        match self {
            Chain::Schedule(_) => true,
            Chain::Graph(g) => g.is_start(s),
        }
    }

    fn ends(&self, s: StateId) -> bool {
        match self {
            Chain::Schedule(_) => true,
            Chain::Graph(g) => g.is_end(s),
        }
    }

    fn max_gap(&self) -> f64 {
        match self {
            Chain::Schedule(list) => list.iter().map(|e| e.constraint.gap).fold(0.0, f64::max),
            Chain::Graph(g) => g.max_gap(),
        }
    }
}

/// All increasing sequences of `count` cut positions in `1..n`.
fn cuts_with(n: usize, count: usize) -> Vec<Vec<usize>> {
    fn rec(from: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for c in from..n {
            if n - c < left {
                break;
            }
            cur.push(c);
            rec(c + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, count, &mut Vec::new(), &mut out);
    out
}

fn uniform(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    (0..size)
        .map(|i| lo + (hi - lo) * i as f64 / (size - 1) as f64)
        .collect()
}

fn fit_placement(
    data: &WeightedSequence,
    chain: &Chain<'_>,
    loss: LossFamily,
    grid_size: usize,
    cuts: &[usize],
) -> Option<OracleFit> {
    let n = data.len();
    let mut ends: Vec<usize> = cuts.to_vec();
    ends.push(n);
    let (mut lo, mut hi) = data.range();
    if lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }
    let span = chain.max_gap() * cuts.len() as f64;
    lo -= span;
    hi += span;
    if loss == LossFamily::Poisson {
        lo = lo.max(0.0);
    }

    // Weighted means of every run of consecutive segments are the fits
    // when no constraint, or an equality, is active: include them exactly.
    let mut block_means = Vec::new();
    for i in 0..ends.len() {
        let start = if i == 0 { 0 } else { ends[i - 1] };
        for &end in &ends[i..] {
            let (mut sw, mut swy) = (0.0, 0.0);
            for t in start..end {
                sw += data.weights()[t];
                swy += data.weights()[t] * data.values()[t];
            }
            block_means.push(swy / sw);
        }
    }

    let mut coarse = uniform(lo, hi, grid_size);
    coarse.extend(block_means.iter().copied());
    coarse.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    coarse.dedup();
    let (_, means, _) = chain_dp(data, chain, loss, &ends, &coarse)?;
    let h = (hi - lo) / (grid_size - 1) as f64;
    let mut fine = coarse;
    for &m in &means {
        fine.extend(uniform((m - 3.0 * h).max(lo), (m + 3.0 * h).min(hi), grid_size));
    }
    fine.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    fine.dedup();
    let (cost, means, states) = chain_dp(data, chain, loss, &ends, &fine)?;
    let merged = means.windows(2).map(|w| w[0] == w[1]).collect();
    let loss_cost = (0..ends.len())
        .map(|j| {
            let start = if j == 0 { 0 } else { ends[j - 1] };
            segment_cost(data, start, ends[j], means[j], loss).expect("valid bounds")
        })
        .sum();
    Some(OracleFit {
        cost,
        segmentation: Segmentation {
            means,
            ends,
            states: matches!(chain, Chain::Graph(_)).then_some(states),
            total_cost: loss_cost,
            merged,
        },
    })
}

/// Best `min_{x allowed -> g} v(x)` for every grid point `g`, with the
/// index of the minimiser.
fn constrained_min(grid: &[f64], v: &[f64], c: ChangeConstraint) -> Vec<(f64, usize)> {
    let eps = 1e-12 * grid[grid.len() - 1].abs().max(grid[0].abs()).max(1.0);
    let none = (f64::INFINITY, usize::MAX);
    match c.kind {
        crate::constraint::ChangeKind::Any => {
            let best = v
                .iter()
                .enumerate()
                .fold(none, |b, (i, &x)| if x < b.0 { (x, i) } else { b });
            vec![best; grid.len()]
        }
        crate::constraint::ChangeKind::Up => {
            let mut prefix = Vec::with_capacity(v.len());
            let mut b = none;
            for (i, &x) in v.iter().enumerate() {
                if x < b.0 {
                    b = (x, i);
                }
                prefix.push(b);
            }
            grid.iter()
                .map(|&g| {
                    let limit = grid.partition_point(|&x| x <= g - c.gap + eps);
                    if limit == 0 {
                        none
                    } else {
                        prefix[limit - 1]
                    }
                })
                .collect()
        }
        crate::constraint::ChangeKind::Down => {
            let mut suffix = vec![none; v.len()];
            let mut b = none;
            for i in (0..v.len()).rev() {
                if v[i] < b.0 {
                    b = (v[i], i);
                }
                suffix[i] = b;
            }
            grid.iter()
                .map(|&g| {
                    let from = grid.partition_point(|&x| x < g + c.gap - eps);
                    if from == grid.len() {
                        none
                    } else {
                        suffix[from]
                    }
                })
                .collect()
        }
    }
}

/// Dynamic programme over segments of a fixed placement, with states and a
/// grid of candidate means. Returns the cost, means and states.
fn chain_dp(
    data: &WeightedSequence,
    chain: &Chain<'_>,
    loss: LossFamily,
    ends: &[usize],
    grid: &[f64],
) -> Option<(f64, Vec<f64>, Vec<StateId>)> {
    let states = chain.states();
    let g = grid.len();
    let seg_cost = |j: usize| -> Vec<f64> {
        let start = if j == 0 { 0 } else { ends[j - 1] };
        grid.iter()
            .map(|&m| segment_cost(data, start, ends[j], m, loss).expect("valid bounds"))
            .collect()
    };
    // back[j][s][i] = (previous state, previous grid index)
    let mut back: Vec<Vec<Vec<(StateId, usize)>>> = Vec::with_capacity(ends.len());
    let h0 = seg_cost(0);
    let mut v: Vec<Vec<f64>> = (0..states)
        .map(|s| {
            if chain.starts(s as StateId) {
                h0.clone()
            } else {
                vec![f64::INFINITY; g]
            }
        })
        .collect();
    back.push(vec![vec![(0, usize::MAX); g]; states]);
    for j in 1..ends.len() {
        let h = seg_cost(j);
        let mut next = vec![vec![f64::INFINITY; g]; states];
        let mut bj = vec![vec![(0, usize::MAX); g]; states];
        for e in chain.edges(j) {
            let m = constrained_min(grid, &v[e.source as usize], e.constraint);
            let t = e.target as usize;
            for i in 0..g {
                let cand = m[i].0 + e.penalty + h[i];
                if cand < next[t][i] {
                    next[t][i] = cand;
                    bj[t][i] = (e.source, m[i].1);
                }
            }
        }
        v = next;
        back.push(bj);
    }
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for (s, row) in v.iter().enumerate() {
        if !chain.ends(s as StateId) {
            continue;
        }
        for (i, &x) in row.iter().enumerate() {
            if x < best.0 {
                best = (x, s, i);
            }
        }
    }
    if !best.0.is_finite() {
        return None;
    }
    let (cost, mut s, mut i) = best;
    let k = ends.len();
    let mut means = vec![0.0; k];
    let mut path = vec![0 as StateId; k];
    for j in (0..k).rev() {
        means[j] = grid[i];
        path[j] = s as StateId;
        if j > 0 {
            let (ps, pi) = back[j][s][i];
            s = ps as usize;
            i = pi;
        }
    }
    Some((cost, means, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalized::{preset_graph, Preset};

    fn toy() -> WeightedSequence {
        WeightedSequence::from_values(&[2.0, 1.0, 0.0, 4.0]).unwrap()
    }

    #[test]
    fn segment_cost_examples() {
        assert_eq!(segment_cost(&toy(), 0, 4, 1.75, LossFamily::Square).unwrap(), 8.75);
        assert_eq!(segment_cost(&toy(), 1, 2, 1.0, LossFamily::Square).unwrap(), 0.0);
        let three = WeightedSequence::from_values(&[3.0]).unwrap();
        let v = segment_cost(&three, 0, 1, 3.0, LossFamily::Poisson).unwrap();
        assert!((v - (3.0 - 3.0 * 3f64.ln())).abs() < 1e-15);
        assert!(segment_cost(&toy(), 2, 2, 0.0, LossFamily::Square).is_err());
    }

    #[test]
    fn dpa_examples() {
        let c = dpa_unconstrained(&toy(), 4, LossFamily::Square).unwrap();
        assert_eq!(c[0], 8.75);
        assert!((c[1] - 2.0).abs() < 1e-12);
        assert!(c[3].abs() < 1e-12);
    }

    #[test]
    fn enumeration_examples() {
        let iso = ConstraintSchedule::ReducedIsotonic;
        let fit = enumerate_constrained(&toy(), OracleModel::Schedule { k: 2, schedule: &iso }, LossFamily::Square, 512)
            .unwrap();
        assert!((fit.cost - 2.0).abs() < 1e-6);
        assert_eq!(fit.segmentation.ends, vec![3, 4]);

        let free = ConstraintSchedule::Unconstrained;
        let one = enumerate_constrained(&toy(), OracleModel::Schedule { k: 1, schedule: &free }, LossFamily::Square, 64)
            .unwrap();
        assert_eq!(one.cost, dpa_unconstrained(&toy(), 1, LossFamily::Square).unwrap()[0]);

        let peaks = WeightedSequence::from_values(&[1.0, 5.0, 1.0]).unwrap();
        let ud = ConstraintSchedule::UpDown;
        let fit = enumerate_constrained(&peaks, OracleModel::Schedule { k: 3, schedule: &ud }, LossFamily::Poisson, 512)
            .unwrap();
        assert!((fit.cost - (7.0 - 5.0 * 5f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn graph_enumeration() {
        let g = preset_graph(Preset::Isotonic, &[1.0]).unwrap();
        let fit = enumerate_constrained(&toy(), OracleModel::Graph(&g), LossFamily::Square, 256).unwrap();
        assert!((fit.cost - 3.0).abs() < 1e-6);
        let g = preset_graph(Preset::UpDown, &[0.1, 0.1]).unwrap();
        let peaks = WeightedSequence::from_values(&[1.0, 5.0, 1.0]).unwrap();
        let fit = enumerate_constrained(&peaks, OracleModel::Graph(&g), LossFamily::Poisson, 256).unwrap();
        assert_eq!(fit.segmentation.states, Some(vec![0, 1, 0]));
    }

    #[test]
    fn size_guard() {
        let long = WeightedSequence::from_values(&(0..13).map(f64::from).collect::<Vec<_>>()).unwrap();
        let s = ConstraintSchedule::Unconstrained;
        assert!(matches!(
            enumerate_constrained(&long, OracleModel::Schedule { k: 2, schedule: &s }, LossFamily::Square, 64),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn finer_grids_do_not_get_worse() {
        let data = WeightedSequence::from_values(&[3.1, 0.4, 2.2, 7.9, 5.5, 1.3]).unwrap();
        let s = ConstraintSchedule::UpDown;
        let m = OracleModel::Schedule { k: 3, schedule: &s };
        let coarse = enumerate_constrained(&data, m, LossFamily::Square, 64).unwrap();
        let fine = enumerate_constrained(&data, m, LossFamily::Square, 512).unwrap();
        assert!(fine.cost <= coarse.cost + 1e-9);
    }
}

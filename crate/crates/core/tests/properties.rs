// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::{min_over, probe_means, random_cost, random_sequence, random_values, rel_close, same_value, value_slack};
use fpseg::oracle::dpa_unconstrained;
use fpseg::piecewise::{compute_roots, min_less, min_more, min_of_two, PiecewiseCost};
use fpseg::{
    gfpop_isotonic, gfpop_solve, gpdpa_fill, gpdpa_solve, preset_graph, ConstraintSchedule, LossFamily, Preset,
    Storage, WeightedSequence,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn loss_of(square: bool) -> LossFamily {
    if square {
        LossFamily::Square
    } else {
        LossFamily::Poisson
    }
}

fn evals(f: &PiecewiseCost, means: &[f64]) -> Vec<f64> {
    means.iter().map(|&m| f.eval(m)).collect()
}

proptest! {
    #[test]
    fn min_less_is_the_running_minimum(seed: u64, square: bool) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = random_cost(&mut rng, loss_of(square));
        let g = min_less(1, &f);
        let means = probe_means(&f, &mut rng);
        let vals = evals(&g, &means);
        let slack = value_slack(&evals(&f, &means));
        for (i, &m) in means.iter().enumerate() {
            prop_assert!(same_value(vals[i], min_over(&f, 0.0, m), slack), "mu={m}");
            if i > 0 {
                prop_assert!(vals[i] <= vals[i - 1] + slack);
            }
        }
    }

    #[test]
    fn min_more_is_the_running_minimum_from_above(seed: u64, square: bool) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = random_cost(&mut rng, loss_of(square));
        let g = min_more(1, &f);
        let means = probe_means(&f, &mut rng);
        let vals = evals(&g, &means);
        let slack = value_slack(&evals(&f, &means));
        for (i, &m) in means.iter().enumerate() {
            prop_assert!(same_value(vals[i], min_over(&f, m, common::DOMAIN_HI), slack), "mu={m}");
            if i > 0 {
                prop_assert!(vals[i] + slack >= vals[i - 1]);
            }
        }
    }

    #[test]
    fn min_of_two_is_pointwise(seed: u64, square: bool, prefer_second: bool) {
        let mut rng = StdRng::seed_from_u64(seed);
        let loss = loss_of(square);
        let f = random_cost(&mut rng, loss);
        let g = random_cost(&mut rng, loss);
        let h = min_of_two(&f, &g, prefer_second).unwrap();
        prop_assert!(h.is_continuous());
        let means = probe_means(&h, &mut rng);
        let slack = value_slack(&evals(&f, &means)).max(value_slack(&evals(&g, &means)));
        for m in means {
            prop_assert!(same_value(h.eval(m), f.eval(m).min(g.eval(m)), slack), "mu={m}");
        }
    }

    #[test]
    fn piece_counts_stay_bounded(seed: u64, square: bool, prefer_second: bool) {
        // Each local minimum of f adds at most one constant piece.
        let mut rng = StdRng::seed_from_u64(seed);
        let loss = loss_of(square);
        let f = random_cost(&mut rng, loss);
        let g = random_cost(&mut rng, loss);
        let h = min_of_two(&f, &g, prefer_second).unwrap();
        prop_assert!(h.len() <= 2 * (f.len() + g.len()), "{} from {} and {}", h.len(), f.len(), g.len());
        for op in [min_less(1, &f), min_more(1, &f)] {
            prop_assert!(op.len() <= 2 * f.len() + 1, "{} from {}", op.len(), f.len());
        }
    }

    #[test]
    fn operators_are_idempotent_and_continuous(seed: u64, square: bool) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = random_cost(&mut rng, loss_of(square));
        prop_assert!(f.is_continuous() && f.is_total());
        let means = probe_means(&f, &mut rng);
        let less = min_less(1, &f);
        let more = min_more(1, &f);
        for (once, twice) in [(&less, min_less(2, &less)), (&more, min_more(2, &more))] {
            prop_assert!(once.is_continuous() && once.is_total());
            let a = evals(once, &means);
            let slack = value_slack(&a);
            for (x, y) in a.iter().zip(evals(&twice, &means)) {
                prop_assert!(same_value(*x, y, slack));
            }
        }
    }

    #[test]
    fn roots_have_small_residuals(seed: u64, square: bool, level in 0.0..50.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let loss = loss_of(square);
        let f = random_cost(&mut rng, loss);
        for p in f.pieces() {
            let d = min_over(&f, 0.0, common::DOMAIN_HI) + level;
            for r in compute_roots(p, d, loss) {
                let residual = (p.eval(loss, loss.to_coord(r)) - d).abs();
                prop_assert!(residual <= 1e-12 * d.abs().max(1.0), "residual {residual} at {r}");
            }
        }
    }

    #[test]
    fn run_length_encoding_does_not_change_costs(seed: u64, square: bool) {
        let mut rng = StdRng::seed_from_u64(seed);
        let loss = loss_of(square);
        let len = rng.gen_range(1..6);
        let distinct = random_values(&mut rng, loss, len);
        let mut raw = Vec::new();
        for &v in &distinct {
            let reps = rng.gen_range(1..4);
            raw.extend(std::iter::repeat_n(v, reps));
        }
        let encoded = WeightedSequence::from_values(&raw).unwrap();
        let expanded = WeightedSequence::unit(&raw).unwrap();
        let k_max = encoded.len().min(3);
        for schedule in [ConstraintSchedule::Unconstrained, ConstraintSchedule::ReducedIsotonic] {
            let a = gpdpa_solve(&encoded, k_max, &schedule, loss).unwrap();
            let b = gpdpa_solve(&expanded, k_max, &schedule, loss).unwrap();
            for k in 1..=k_max {
                let (ma, mb) = (a.model(k).unwrap(), b.model(k).unwrap());
                prop_assert!(rel_close(ma.total_cost, mb.total_cost, 1e-9), "k={k}");
            }
        }
    }

    #[test]
    fn penalty_trades_changes_for_cost(seed: u64, square: bool) {
        let mut rng = StdRng::seed_from_u64(seed);
        let loss = loss_of(square);
        let n = rng.gen_range(1..=12);
        let data = random_sequence(&mut rng, loss, n);
        let mut last: Option<(usize, f64)> = None;
        for lambda in [0.0, 0.3, 1.0, 3.0, 10.0, 100.0] {
            let sol = gfpop_isotonic(&data, lambda, loss).unwrap();
            if let Some((changes, cost)) = last {
                prop_assert!(sol.change_count <= changes);
                prop_assert!(sol.penalized_cost + 1e-9 * cost.abs().max(1.0) >= cost);
            }
            last = Some((sol.change_count, sol.penalized_cost));
        }
    }

    #[test]
    fn penalized_cost_is_the_best_budget_plus_penalty(seed: u64, square: bool, lambda in 0.0..5.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let loss = loss_of(square);
        let n = rng.gen_range(1..=9);
        let data = random_sequence(&mut rng, loss, n);
        let sn = gpdpa_solve(&data, n, &ConstraintSchedule::ReducedIsotonic, loss).unwrap();
        let best = (1..=n)
            .map(|k| sn.model(k).unwrap().total_cost + lambda * (k - 1) as f64)
            .fold(f64::INFINITY, f64::min);
        let pen = gfpop_solve(&data, &preset_graph(Preset::Isotonic, &[lambda]).unwrap(), loss).unwrap();
        prop_assert!(rel_close(best, pen.penalized_cost, 1e-6), "{best} vs {}", pen.penalized_cost);
    }

    #[test]
    fn stored_functions_are_best_prefix_costs(seed: u64, square: bool) {
        // Without constraints, C_{k,t}(mu) is the best (k-1)-segment cost
        // of some prefix plus the loss of the rest at mean mu.
        let mut rng = StdRng::seed_from_u64(seed);
        let loss = loss_of(square);
        let n = rng.gen_range(2..=8);
        let data = random_sequence(&mut rng, loss, n);
        let k_max = n.min(3);
        let table = gpdpa_fill(&data, k_max, &ConstraintSchedule::Unconstrained, loss, Storage::Full).unwrap();
        let prefix_best: Vec<Vec<f64>> = (1..=n)
            .map(|t| {
                let prefix = WeightedSequence::new(data.values()[..t].to_vec(), data.weights()[..t].to_vec()).unwrap();
                dpa_unconstrained(&prefix, t.min(k_max), loss).unwrap()
            })
            .collect();
        let (lo, hi) = data.range();
        for k in 1..=k_max {
            for t in k..=n {
                let f = table.cost_function(k, t).unwrap();
                for i in 0..=20 {
                    let mu = (lo + (hi - lo) * i as f64 / 20.0).max(if square { f64::MIN } else { 1e-3 });
                    let tail = |from: usize| -> f64 {
                        (from..t).map(|j| loss.loss(data.values()[j], data.weights()[j], mu)).sum()
                    };
                    let expected = if k == 1 {
                        tail(0)
                    } else {
                        (k - 1..t).map(|tau| prefix_best[tau - 1][k - 2] + tail(tau)).fold(f64::INFINITY, f64::min)
                    };
                    prop_assert!(rel_close(f.eval(mu), expected, 1e-9), "k={k} t={t} mu={mu}: {} vs {expected}", f.eval(mu));
                }
            }
        }
    }
}

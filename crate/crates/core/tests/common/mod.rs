// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use fpseg::piecewise::{min_less, min_more, min_of_two, min_unconstrained, one_piece, optimal_mean, PiecewiseCost};
use fpseg::{LossFamily, WeightedSequence};
use rand::rngs::StdRng;
use rand::Rng;

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Random small instance: reals in `[0, 10]` for the square loss, counts
/// up to 8 for Poisson. Values are unit weight and not run-length merged.
pub fn random_values(rng: &mut StdRng, loss: LossFamily, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match loss {
            LossFamily::Square => (rng.gen_range(0.0..10.0f64) * 1000.0).round() / 1000.0,
            LossFamily::Poisson => rng.gen_range(0..=8) as f64,
        })
        .collect()
}

pub fn random_sequence(rng: &mut StdRng, loss: LossFamily, n: usize) -> WeightedSequence {
    WeightedSequence::unit(&random_values(rng, loss, n)).unwrap()
}

pub const DOMAIN_HI: f64 = 10.0;

/// A random cost function shaped like a solver's second column: a chain of
/// data points with one constrained change somewhere, on `[0, 10]`.
pub fn random_cost(rng: &mut StdRng, loss: LossFamily) -> PiecewiseCost {
    let len = rng.gen_range(1..=7);
    let values = random_values(rng, loss, len);
    let w0 = rng.gen_range(0.5..3.0f64);
    let mut one = one_piece(values[0], w0, 0.0, DOMAIN_HI, loss).unwrap();
    let mut f = one.clone();
    let kinds: Vec<u8> = (0..len).map(|_| rng.gen_range(0..3)).collect();
    for t in 1..len {
        let change = match kinds[t] {
            0 => min_less(t, &one),
            1 => min_more(t, &one),
            _ => min_unconstrained(t, &one),
        };
        f = min_of_two(&change, &f, true).unwrap();
        let w = rng.gen_range(0.5..3.0f64);
        f.add_loss(values[t], w);
        one.add_loss(values[t], w);
    }
    f
}

/// Means covering the domain: an even grid plus the piece boundaries.
pub fn probe_means(f: &PiecewiseCost, rng: &mut StdRng) -> Vec<f64> {
    let loss = f.loss();
    let mut means: Vec<f64> = (0..=200).map(|i| DOMAIN_HI * i as f64 / 200.0).collect();
    means.extend((0..50).map(|_| rng.gen_range(0.0..DOMAIN_HI)));
    for p in f.pieces() {
        means.push(p.lower_mean(loss));
        means.push(p.upper_mean(loss));
    }
    means.retain(|m| (0.0..=DOMAIN_HI).contains(m));
    means.sort_by(f64::total_cmp);
    means
}

/// Minimum of `f` over means in `[lo, hi]`, from each piece's endpoints and
/// unconstrained minimiser.
pub fn min_over(f: &PiecewiseCost, lo: f64, hi: f64) -> f64 {
    let loss = f.loss();
    let (clo, chi) = (loss.to_coord(lo), loss.to_coord(hi));
    let mut best = f64::INFINITY;
    for p in f.pieces() {
        let (a, b) = (p.lower.max(clo), p.upper.min(chi));
        if a > b {
            continue;
        }
        let mut candidates = vec![a, b];
        if let Ok(m) = optimal_mean(p, loss) {
            let x = loss.to_coord(m);
            if x > a && x < b {
                candidates.push(x);
            }
        }
        for x in candidates {
            best = best.min(p.eval(loss, x));
        }
    }
    best
}

/// Slack for comparing values of `f`, relative to its magnitude.
pub fn value_slack(values: &[f64]) -> f64 {
    1e-9 * values.iter().filter(|v| v.is_finite()).fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Equal within `slack`; equal infinities also match.
pub fn same_value(a: f64, b: f64, slack: f64) -> bool {
    a == b || (a - b).abs() <= slack
}

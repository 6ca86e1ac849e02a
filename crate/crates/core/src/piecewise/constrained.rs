// SPDX-License-Identifier: MIT OR Apache-2.0

//! Constrained minimisation operators `f -> f^g` for the change constraints
//! supported by the solvers: any change, non-decreasing (min-less),
//! non-increasing (min-more), optionally with an additive gap.

use super::cost::PiecewiseCost;
use super::loss::{Coeffs, LossFamily};
use super::piece::{FunctionPiece, PrevMean};
use super::roots::bracketed;
use super::TIE_TOL;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    /// Left to right: `f^<=(mu) = min_{x <= mu} f(x)`.
    Forward,
    /// Right to left: `f^>=(mu) = min_{x >= mu} f(x)`.
    Backward,
}

impl Direction {
    /// `a` lies strictly further along the scan than `b`.
    fn ahead(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Forward => a > b,
            Direction::Backward => a < b,
        }
    }

    fn start(self, p: &FunctionPiece) -> f64 {
        match self {
            Direction::Forward => p.lower,
            Direction::Backward => p.upper,
        }
    }

    fn end(self, p: &FunctionPiece) -> f64 {
        match self {
            Direction::Forward => p.upper,
            Direction::Backward => p.lower,
        }
    }

    fn span(self, from: f64, to: f64) -> (f64, f64) {
        match self {
            Direction::Forward => (from, to),
            Direction::Backward => (to, from),
        }
    }
}

/// `f^<=(mu) = min_{x <= mu} f(x)`. Copied pieces carry the equality flag,
/// constant pieces carry the location of the minimum they extend; every
/// piece gets `prev_end = t_prev`.
pub fn min_less(t_prev: usize, f: &PiecewiseCost) -> PiecewiseCost {
    scan(t_prev, f, Direction::Forward)
}

/// `f^>=(mu) = min_{x >= mu} f(x)`, the mirror image of [`min_less`].
pub fn min_more(t_prev: usize, f: &PiecewiseCost) -> PiecewiseCost {
    scan(t_prev, f, Direction::Backward)
}

/// Constant function equal to the global minimum of `f`, remembering where
/// it is attained. This is the operator for an unconstrained change.
pub fn min_unconstrained(t_prev: usize, f: &PiecewiseCost) -> PiecewiseCost {
    let m = f.arg_min();
    let mut piece = FunctionPiece::new(Coeffs::constant(m.cost), f.domain().lo, f.domain().hi);
    piece.prev_end = t_prev;
    piece.prev_mean = PrevMean::Value(m.coord);
    PiecewiseCost::from_parts(f.loss(), f.domain(), vec![piece]).expect("one piece")
}

/// `mu -> f(mu - delta)`, clipped to the domain. Returns `None` when nothing
/// of `f` remains inside the domain. Only the square loss supports a
/// non-zero shift: a translated Poisson piece has no closed form in
/// log-mean coordinates.
pub fn shift_argument(f: &PiecewiseCost, delta: f64) -> Result<Option<PiecewiseCost>> {
    if delta == 0.0 {
        return Ok(Some(f.clone()));
    }
    if f.loss() != LossFamily::Square {
        return Err(Error::UnsupportedGap(delta));
    }
    if !delta.is_finite() {
        return Err(Error::InvalidConstraint(format!("gap {delta} is not finite")));
    }
    let dom = f.domain();
    let pieces = f
        .pieces()
        .iter()
        .filter_map(|p| {
            let lower = (p.lower + delta).max(dom.lo);
            let upper = (p.upper + delta).min(dom.hi);
            if !(lower < upper) {
                return None;
            }
            // a (x - d)^2 + b (x - d) + c
            let k = p.coeffs;
            let coeffs = Coeffs::new(k.a, k.b - 2.0 * k.a * delta, k.a * delta * delta - k.b * delta + k.c);
            let prev_mean = match p.prev_mean {
                PrevMean::EqualityActive => PrevMean::Offset(delta),
                PrevMean::Offset(d) => PrevMean::Offset(d + delta),
                other => other,
            };
            Some(FunctionPiece {
                coeffs,
                lower,
                upper,
                prev_mean,
                ..*p
            })
        })
        .collect();
    Ok(PiecewiseCost::from_parts(f.loss(), dom, pieces))
}

fn push(
    out: &mut Vec<FunctionPiece>,
    dir: Direction,
    template: FunctionPiece,
    from: f64,
    to: f64,
) {
    if from == to {
        return;
    }
    let (lower, upper) = dir.span(from, to);
    out.push(template.with_bounds(lower, upper));
}

fn constant_piece(cost: f64, arg: f64) -> FunctionPiece {
    let mut p = FunctionPiece::new(Coeffs::constant(cost), 0.0, 0.0);
    p.prev_mean = PrevMean::Value(arg);
    p
}

/// First point from `from` towards `argmin` where `p` falls to `level`,
/// given `p(from) > level > p(argmin)`.
fn crossing(loss: LossFamily, p: &FunctionPiece, dir: Direction, from: f64, argmin: f64, level: f64) -> f64 {
    let (lo, hi) = dir.span(from, argmin);
    let roots = loss.roots_coord(&p.coeffs, level);
    let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    let candidate = match dir {
        Direction::Forward => roots.iter().copied().find(|&r| r >= lo - slack && r <= hi + slack),
        Direction::Backward => roots.iter().rev().copied().find(|&r| r >= lo - slack && r <= hi + slack),
    };
    if let Some(r) = candidate {
        return r.clamp(lo, hi);
    }
    // Newton could not reach the requested precision: fall back to a
    // bracketed search on a finite sub-interval.
    let g = |x: f64| p.eval(loss, x) - level;
    let dg = |x: f64| loss.deriv(&p.coeffs, x);
    let mut lo = lo;
    if lo == f64::NEG_INFINITY {
        let positive = g(lo) > 0.0;
        let mut step = 1.0;
        lo = hi - step;
        while (g(lo) > 0.0) != positive && step < 1e300 {
            step *= 2.0;
            lo = hi - step;
        }
    }
    bracketed(g, dg, lo, hi)
}

fn scan(t_prev: usize, f: &PiecewiseCost, dir: Direction) -> PiecewiseCost {
    let loss = f.loss();
    let dom = f.domain();
    let pieces = f.pieces();
    let n = pieces.len();
    let order = |i: usize| match dir {
        Direction::Forward => i,
        Direction::Backward => n - 1 - i,
    };
    let domain_end = match dir {
        Direction::Forward => dom.hi,
        Direction::Backward => dom.lo,
    };

    let mut out: Vec<FunctionPiece> = Vec::with_capacity(n + 2);
    // Running minimum (cost, location) while on a constant stretch.
    let mut hold: Option<(f64, f64)> = None;
    let mut cursor = dir.start(&pieces[order(0)]);
    let mut idx = 0;

    while idx < n {
        let p = &pieces[order(idx)];
        let start = dir.start(p);
        let end = dir.end(p);
        let from = if dir.ahead(cursor, start) { cursor } else { start };

        match hold {
            None => {
                let mut eq = *p;
                eq.prev_mean = PrevMean::EqualityActive;
                let argmin = loss.argmin_coord(&p.coeffs);
                match argmin {
                    Some(m) if !dir.ahead(m, from) => {
                        // Non-decreasing along the scan from here on: the
                        // value at `from` is the running minimum.
                        hold = Some((p.eval(loss, from), from));
                        idx += 1;
                    }
                    Some(m) if dir.ahead(end, m) => {
                        push(&mut out, dir, eq, cursor, m);
                        cursor = m;
                        hold = Some((p.eval(loss, m), m));
                        idx += 1;
                    }
                    _ => {
                        push(&mut out, dir, eq, cursor, end);
                        cursor = end;
                        let next_start = (idx + 1 < n).then(|| dir.start(&pieces[order(idx + 1)]));
                        let hole = match next_start {
                            Some(s) => dir.ahead(s, end),
                            None => end != domain_end,
                        };
                        if hole {
                            // Cost is infinite just past `end`, so `end` is a
                            // local minimum along the scan.
                            hold = Some((p.eval(loss, end), end));
                        }
                        idx += 1;
                    }
                }
            }
            Some((level, arg)) => {
                let (lo, hi) = dir.span(from, end);
                let (xm, vm) = p.min_on(loss, lo, hi);
                if vm >= level - TIE_TOL * level.abs().max(1.0) {
                    idx += 1;
                    continue;
                }
                let cross = if p.eval(loss, from) <= level {
                    from
                } else {
                    crossing(loss, p, dir, from, xm, level)
                };
                push(&mut out, dir, constant_piece(level, arg), cursor, cross);
                cursor = cross;
                hold = None;
            }
        }
    }
    if let Some((level, arg)) = hold {
        push(&mut out, dir, constant_piece(level, arg), cursor, domain_end);
    }
    if dir == Direction::Backward {
        out.reverse();
    }
    for p in &mut out {
        p.prev_end = t_prev;
        p.prev_state = None;
    }
    PiecewiseCost::from_parts(loss, dom, out).expect("operator output is never empty")
}

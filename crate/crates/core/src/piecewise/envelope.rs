// SPDX-License-Identifier: MIT OR Apache-2.0

use super::cost::PiecewiseCost;
use super::loss::{Coeffs, LossFamily};
use super::piece::FunctionPiece;
use super::roots::{bracketed, quadratic_roots};
use super::{MERGE_EPS, TIE_TOL};
use crate::error::{Error, Result};

/// Exact pointwise minimum of two cost functions on the same domain.
///
/// Each output piece copies coefficients and backpointers from whichever
/// input is lower there. Where the inputs coincide the piece comes from
/// `f2` if `prefer_second`, else from `f1`. Regions where only one input is
/// defined take that input.
pub fn min_of_two(f1: &PiecewiseCost, f2: &PiecewiseCost, prefer_second: bool) -> Result<PiecewiseCost> {
    if f1.loss() != f2.loss() || f1.domain() != f2.domain() {
        return Err(Error::DomainMismatch);
    }
    let loss = f1.loss();
    let (a, b) = (f1.pieces(), f2.pieces());

    let mut bounds: Vec<f64> = Vec::with_capacity(2 * (a.len() + b.len()));
    for p in a.iter().chain(b) {
        bounds.push(p.lower);
        bounds.push(p.upper);
    }
    bounds.sort_by(|x, y| x.partial_cmp(y).expect("bounds are not NaN"));
    bounds.dedup();

    let mut out: Vec<FunctionPiece> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    for w in bounds.windows(2) {
        let (l, r) = (w[0], w[1]);
        while i < a.len() && a[i].upper <= l {
            i += 1;
        }
        while j < b.len() && b[j].upper <= l {
            j += 1;
        }
        let pa = a.get(i).filter(|p| p.lower <= l && p.upper >= r);
        let pb = b.get(j).filter(|p| p.lower <= l && p.upper >= r);
        match (pa, pb) {
            (None, None) => {}
            (Some(p), None) | (None, Some(p)) => push_merge(&mut out, p, l, r),
            (Some(p), Some(q)) => compare(loss, p, q, l, r, prefer_second, &mut out),
        }
    }
    Ok(PiecewiseCost::from_parts(loss, f1.domain(), out).expect("inputs are non-empty"))
}

fn push_merge(out: &mut Vec<FunctionPiece>, p: &FunctionPiece, l: f64, r: f64) {
    if let Some(last) = out.last_mut() {
        if last.upper == l && last.same_origin(p) {
            last.upper = r;
            return;
        }
    }
    out.push(p.with_bounds(l, r));
}

/// Points where a window is sampled to decide which input is lower. The
/// first one can sit on a tangency, where the inputs touch without
/// crossing; the difference has at most one stationary point, so one of
/// the others then decides.
fn probes(l: f64, r: f64) -> [f64; 3] {
    if l == f64::NEG_INFINITY {
        [r - 1.0, r - 2.0, r - 0.5]
    } else {
        [0.5 * (l + r), l + 0.25 * (r - l), l + 0.75 * (r - l)]
    }
}

fn compare(
    loss: LossFamily,
    p: &FunctionPiece,
    q: &FunctionPiece,
    l: f64,
    r: f64,
    prefer_second: bool,
    out: &mut Vec<FunctionPiece>,
) {
    let diff = p.coeffs.sub(&q.coeffs);
    let mut cuts = vec![l];
    if !diff_is_zero(&diff, &p.coeffs) {
        for x in crossings(loss, &diff, l, r) {
            let last = *cuts.last().expect("non-empty");
            if x - last > MERGE_EPS * x.abs().max(1.0) && r - x > MERGE_EPS * x.abs().max(1.0) {
                cuts.push(x);
            }
        }
    }
    cuts.push(r);
    for w in cuts.windows(2) {
        let decisive = probes(w[0], w[1]).into_iter().find_map(|x| {
            let d = loss.eval(&diff, x);
            let scale = p.eval(loss, x).abs().max(q.eval(loss, x).abs()).max(1.0);
            (d.abs() > TIE_TOL * scale).then_some(d)
        });
        let winner = match decisive {
            Some(d) if d < 0.0 => p,
            Some(_) => q,
            None if prefer_second => q,
            None => p,
        };
        push_merge(out, winner, w[0], w[1]);
    }
}

fn diff_is_zero(diff: &Coeffs, reference: &Coeffs) -> bool {
    diff.a == 0.0 && diff.b == 0.0 && diff.c.abs() <= TIE_TOL * reference.c.abs().max(1.0)
}

/// Sign changes of a coefficient difference strictly inside `(l, r)`.
/// The difference of two pieces is not convex in general, but it has at
/// most one stationary point, hence at most two roots.
fn crossings(loss: LossFamily, d: &Coeffs, l: f64, r: f64) -> Vec<f64> {
    match loss {
        LossFamily::Square => quadratic_roots(d.a, d.b, d.c)
            .into_iter()
            .filter(|&x| x > l && x < r)
            .collect(),
        LossFamily::Poisson => {
            let mut knots = vec![l];
            if d.a != 0.0 && -d.b / d.a > 0.0 {
                let xs = (-d.b / d.a).ln();
                if xs > l && xs < r {
                    knots.push(xs);
                }
            }
            knots.push(r);
            let f = |x: f64| loss.eval(d, x);
            let df = |x: f64| loss.deriv(d, x);
            let mut roots = Vec::new();
            for w in knots.windows(2) {
                let (mut lo, hi) = (w[0], w[1]);
                let (flo, fhi) = (f(lo), f(hi));
                if !(flo < 0.0 && fhi > 0.0 || flo > 0.0 && fhi < 0.0) {
                    continue;
                }
                if lo == f64::NEG_INFINITY {
                    let positive = flo > 0.0;
                    let mut step = 1.0;
                    lo = hi - step;
                    while (f(lo) > 0.0) != positive && step < 1e300 {
                        step *= 2.0;
                        lo = hi - step;
                    }
                }
                roots.push(bracketed(f, df, lo, hi));
            }
            roots
        }
    }
}

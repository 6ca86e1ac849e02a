// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact algebra of univariate piecewise convex cost functions.
//!
//! A [`PiecewiseCost`] stores the optimal cost of a segmentation as a
//! function of the last segment mean. The solvers only need a handful of
//! operations on it: adding a data point's loss, the pointwise minimum of
//! two functions, and the constrained minimisation operators
//! ([`min_less`], [`min_more`], [`min_unconstrained`], [`shift_argument`]).
//!
//! All functions are values: operators return fresh functions and nothing
//! is shared mutably, so cost functions can be moved across threads.

mod constrained;
mod cost;
mod envelope;
mod loss;
mod piece;
pub(crate) mod roots;

pub use constrained::{min_less, min_more, min_unconstrained, shift_argument};
pub use cost::{Domain, Minimum, PiecewiseCost};
pub(crate) use cost::check_weight;
pub use envelope::min_of_two;
pub use loss::{Coeffs, LossFamily};
pub use piece::{FunctionPiece, PrevMean, StateId};

use crate::error::{Error, Result};

/// Newton iterations stop once `|piece(x) - d|` is below this.
pub const ROOT_TOL: f64 = 1e-12;
/// Relative jump allowed between adjacent pieces at a shared boundary.
pub const CONTINUITY_TOL: f64 = 1e-8;
/// Crossing points closer than this (relative to the coordinate) are merged.
pub const MERGE_EPS: f64 = 1e-10;
/// Relative difference below which two costs count as equal.
pub const TIE_TOL: f64 = 1e-12;

/// `w * loss(y, mu)` on `[lo, hi]` as a single-piece function.
pub fn one_piece(y: f64, w: f64, lo: f64, hi: f64, loss: LossFamily) -> Result<PiecewiseCost> {
    PiecewiseCost::one_piece(loss, y, w, lo, hi)
}

/// `f + w * loss(y, .)`; intervals and backpointers are unchanged.
pub fn add_loss(f: &PiecewiseCost, y: f64, w: f64) -> PiecewiseCost {
    let mut out = f.clone();
    out.add_loss(y, w);
    out
}

/// Value of a single piece at `mean`, which must lie in the piece's interval.
pub fn get_cost(p: &FunctionPiece, mean: f64, loss: LossFamily) -> Result<f64> {
    let x = loss.to_coord(mean);
    let slack = 1e-12 * x.abs().max(1.0);
    if !(x >= p.lower - slack && x <= p.upper + slack) {
        return Err(Error::OutOfRange {
            mean,
            lo: p.lower_mean(loss),
            hi: p.upper_mean(loss),
        });
    }
    Ok(p.eval(loss, x))
}

/// Unconstrained minimiser of a piece on the mean scale. It may lie outside
/// the piece's interval; callers check containment.
pub fn optimal_mean(p: &FunctionPiece, loss: LossFamily) -> Result<f64> {
    let k = &p.coeffs;
    match loss {
        LossFamily::Square if k.a > 0.0 => Ok(-k.b / (2.0 * k.a)),
        LossFamily::Poisson if k.a > 0.0 => Ok(-k.b / k.a),
        _ => Err(Error::NoInteriorMinimum),
    }
}

/// Means where the piece's formula equals `d`, in increasing order.
/// Empty when the level is below the piece's minimum; a tangent level
/// yields the minimiser once.
pub fn compute_roots(p: &FunctionPiece, d: f64, loss: LossFamily) -> Vec<f64> {
    loss.roots_coord(&p.coeffs, d)
        .into_iter()
        .map(|x| loss.to_mean(x))
        .collect()
}

/// Global minimum with backpointers, the previous mean on the mean scale.
pub fn arg_min(f: &PiecewiseCost) -> Minimum {
    let mut m = f.arg_min();
    m.prev_mean = m.prev_mean.to_mean(f.loss());
    m
}

/// Backpointers of the piece containing `mean` (left piece on a boundary).
pub fn find_mean(mean: f64, f: &PiecewiseCost) -> Result<(usize, PrevMean)> {
    f.find_mean(mean)
}

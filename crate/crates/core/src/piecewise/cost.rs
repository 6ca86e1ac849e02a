// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::loss::{Coeffs, LossFamily};
use super::piece::{FunctionPiece, PrevMean, StateId};
use super::{CONTINUITY_TOL, TIE_TOL};
use crate::error::{Error, Result};

/// Closed interval of storage coordinates over which cost functions live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || lo.is_nan() || hi.is_nan() || hi == f64::INFINITY {
            return Err(Error::InvalidDomain { lo, hi });
        }
        Ok(Domain { lo, hi })
    }

    /// Domain in storage coordinates for means in `[lo_mean, hi_mean]`.
    pub fn from_means(loss: LossFamily, lo_mean: f64, hi_mean: f64) -> Result<Self> {
        if !(lo_mean < hi_mean) || (loss == LossFamily::Poisson && lo_mean < 0.0) {
            return Err(Error::InvalidDomain {
                lo: lo_mean,
                hi: hi_mean,
            });
        }
        Domain::new(loss.to_coord(lo_mean), loss.to_coord(hi_mean))
    }

    /// Mean domain spanned by data values. Constant data would give an empty
    /// interval, so it is widened to one unit on each side (clipped at zero
    /// for the Poisson loss).
    pub fn for_data(loss: LossFamily, y_min: f64, y_max: f64) -> Result<Self> {
        let (lo, hi) = if y_min < y_max {
            (y_min, y_max)
        } else {
            let lo = match loss {
                LossFamily::Square => y_min - 1.0,
                LossFamily::Poisson => (y_min - 1.0).max(0.0),
            };
            (lo, y_max + 1.0)
        };
        Domain::from_means(loss, lo, hi)
    }

    pub fn lo_mean(&self, loss: LossFamily) -> f64 {
        loss.to_mean(self.lo)
    }

    pub fn hi_mean(&self, loss: LossFamily) -> f64 {
        loss.to_mean(self.hi)
    }

    /// Width used to scale absolute coordinate tolerances.
    pub(crate) fn scale(&self) -> f64 {
        if self.lo.is_finite() {
            (self.hi - self.lo).abs().max(self.hi.abs()).max(1.0)
        } else {
            self.hi.abs().max(1.0)
        }
    }
}

/// Location and value of the minimum of a cost function, with the
/// backpointers stored on the piece that attains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    /// Minimiser in storage coordinate.
    pub coord: f64,
    /// Minimiser on the mean scale.
    pub mean: f64,
    pub cost: f64,
    pub prev_end: usize,
    /// Previous mean, still in storage coordinate.
    pub prev_mean: PrevMean,
    pub prev_state: Option<StateId>,
}

/// A cost function represented exactly as an ordered list of convex pieces.
///
/// Pieces are sorted and non-overlapping. Normally they tile the whole
/// domain; after a gap shift some regions may be uncovered, where the cost
/// is `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCost {
    loss: LossFamily,
    domain: Domain,
    pieces: Vec<FunctionPiece>,
}

impl PiecewiseCost {
    /// Single piece equal to `w * loss(y, mean)` on the mean interval `[lo, hi]`.
    pub fn one_piece(loss: LossFamily, y: f64, w: f64, lo: f64, hi: f64) -> Result<Self> {
        check_weight(w)?;
        loss.check_value(y)?;
        let domain = Domain::from_means(loss, lo, hi)?;
        Ok(Self::from_coeffs(loss, domain, loss.loss_coeffs(y, w)))
    }

    pub fn from_coeffs(loss: LossFamily, domain: Domain, coeffs: Coeffs) -> Self {
        PiecewiseCost {
            loss,
            domain,
            pieces: vec![FunctionPiece::new(coeffs, domain.lo, domain.hi)],
        }
    }

    pub fn constant(loss: LossFamily, domain: Domain, value: f64) -> Self {
        Self::from_coeffs(loss, domain, Coeffs::constant(value))
    }

    /// Builds a function from explicit pieces, checking ordering and bounds.
    pub fn from_pieces(
        loss: LossFamily,
        domain: Domain,
        pieces: Vec<FunctionPiece>,
    ) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Misuse("a cost function needs at least one piece".into()));
        }
        let mut prev_upper = domain.lo;
        for p in &pieces {
            if !(p.lower < p.upper) {
                return Err(Error::InvalidDomain {
                    lo: p.lower,
                    hi: p.upper,
                });
            }
            if p.lower < prev_upper || p.upper > domain.hi {
                return Err(Error::DomainMismatch);
            }
            prev_upper = p.upper;
        }
        Ok(PiecewiseCost {
            loss,
            domain,
            pieces,
        })
    }

    /// Internal constructor for operator outputs, which are well formed by
    /// construction.
    pub(crate) fn from_parts(
        loss: LossFamily,
        domain: Domain,
        pieces: Vec<FunctionPiece>,
    ) -> Option<Self> {
        debug_assert!(pieces.windows(2).all(|w| w[0].upper <= w[1].lower));
        if pieces.is_empty() {
            None
        } else {
            Some(PiecewiseCost {
                loss,
                domain,
                pieces,
            })
        }
    }

    pub fn loss(&self) -> LossFamily {
        self.loss
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn pieces(&self) -> &[FunctionPiece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Region actually covered by pieces, in storage coordinate.
    pub fn coverage(&self) -> (f64, f64) {
        (self.pieces[0].lower, self.pieces[self.pieces.len() - 1].upper)
    }

    /// Whether the pieces tile the whole domain without holes.
    pub fn is_total(&self) -> bool {
        let (lo, hi) = self.coverage();
        lo == self.domain.lo
            && hi == self.domain.hi
            && self.pieces.windows(2).all(|w| w[0].upper == w[1].lower)
    }

    /// Index of the piece containing `x`; a boundary belongs to the left piece.
    fn locate(&self, x: f64) -> Option<usize> {
        let i = self.pieces.partition_point(|p| p.upper < x);
        let p = self.pieces.get(i)?;
        (p.lower <= x).then_some(i)
    }

    /// Value at a storage coordinate; `+inf` where no piece is defined.
    pub fn eval_coord(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some(i) => self.pieces[i].eval(self.loss, x),
            None => f64::INFINITY,
        }
    }

    /// Value at a mean.
    pub fn eval(&self, mean: f64) -> f64 {
        self.eval_coord(self.loss.to_coord(mean))
    }

    /// Adds `w * loss(y, .)` to every piece.
    pub fn add_loss(&mut self, y: f64, w: f64) {
        self.scale_add_loss(1.0, y, w);
    }

    /// Multiplies every piece by `factor`, then adds `w * loss(y, .)`.
    pub fn scale_add_loss(&mut self, factor: f64, y: f64, w: f64) {
        let add = self.loss.loss_coeffs(y, w);
        for p in &mut self.pieces {
            p.coeffs = p.coeffs.scale_add(factor, &add);
        }
    }

    /// Multiplies every piece by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for p in &mut self.pieces {
            p.coeffs = p.coeffs.scale_add(factor, &Coeffs::constant(0.0));
        }
    }

    pub fn add_constant(&mut self, value: f64) {
        for p in &mut self.pieces {
            p.coeffs.c += value;
        }
    }

    pub fn set_prev_end(&mut self, t: usize) {
        for p in &mut self.pieces {
            p.prev_end = t;
        }
    }

    pub fn set_prev_state(&mut self, state: Option<StateId>) {
        for p in &mut self.pieces {
            p.prev_state = state;
        }
    }

    /// Global minimum; ties go to the smallest mean.
    pub fn arg_min(&self) -> Minimum {
        let mut best: Option<(f64, f64, &FunctionPiece)> = None;
        for p in &self.pieces {
            let (x, v) = p.min_on(self.loss, p.lower, p.upper);
            let better = match best {
                None => true,
                Some((_, bv, _)) => v < bv - TIE_TOL * bv.abs().max(1.0),
            };
            if better {
                best = Some((x, v, p));
            }
        }
        let (coord, cost, p) = best.expect("cost function has at least one piece");
        Minimum {
            coord,
            mean: self.loss.to_mean(coord),
            cost,
            prev_end: p.prev_end,
            prev_mean: p.prev_mean,
            prev_state: p.prev_state,
        }
    }

    /// Piece containing the storage coordinate `x`. A coordinate on a
    /// boundary resolves to the left piece; a coordinate slightly outside the
    /// covered region (rounding) resolves to the nearest edge piece.
    pub fn find_coord(&self, x: f64) -> Result<&FunctionPiece> {
        if let Some(i) = self.locate(x) {
            return Ok(&self.pieces[i]);
        }
        let slack = 1e-9 * self.domain.scale();
        let (lo, hi) = self.coverage();
        if x < lo && (lo - x <= slack || lo == f64::NEG_INFINITY) {
            return Ok(&self.pieces[0]);
        }
        if x > hi && x - hi <= slack {
            return Ok(&self.pieces[self.pieces.len() - 1]);
        }
        // Inside a hole of a partially defined function: snap to a neighbour
        // only when it is within rounding distance.
        let i = self.pieces.partition_point(|p| p.upper < x);
        if i > 0 && i < self.pieces.len() {
            if x - self.pieces[i - 1].upper <= slack {
                return Ok(&self.pieces[i - 1]);
            }
            if self.pieces[i].lower - x <= slack {
                return Ok(&self.pieces[i]);
            }
        }
        Err(Error::OutOfRange {
            mean: self.loss.to_mean(x),
            lo: self.loss.to_mean(lo),
            hi: self.loss.to_mean(hi),
        })
    }

    /// Backpointers of the piece containing `mean`, with the previous mean
    /// converted to the mean scale.
    pub fn find_mean(&self, mean: f64) -> Result<(usize, PrevMean)> {
        let p = self.find_coord(self.loss.to_coord(mean))?;
        Ok((p.prev_end, p.prev_mean.to_mean(self.loss)))
    }

    /// Largest jump between adjacent pieces sharing a boundary, relative to
    /// the magnitude of the values there.
    pub fn max_discontinuity(&self) -> f64 {
        self.pieces
            .windows(2)
            .filter(|w| w[0].upper == w[1].lower && w[0].upper.is_finite())
            .map(|w| {
                let x = w[0].upper;
                let l = w[0].eval(self.loss, x);
                let r = w[1].eval(self.loss, x);
                (l - r).abs() / l.abs().max(r.abs()).max(1.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_continuous(&self) -> bool {
        self.max_discontinuity() <= CONTINUITY_TOL
    }
}

pub(crate) fn check_weight(w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidWeight(w));
    }
    Ok(())
}
